// Space and time grids, material constants and the common array aliases.
#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ihsp {

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Space-time samples: row k is the profile at t_k, column n the history at X_n.
using Field = Eigen::MatrixXd;

// Modal coefficients over time: column k holds the N_m coefficients at t_k.
using Trajectory = Eigen::MatrixXd;

class Grid1D {
public:
    Grid1D(double length, int nodes);

    double length() const { return L_; }
    int size() const { return static_cast<int>(X_.size()); }
    double spacing() const { return h_; }
    const Eigen::VectorXd& nodes() const { return X_; }
    double operator[](int n) const { return X_[n]; }
    // Trapezoid quadrature weights, so that w.dot(f) approximates the integral over [0, L].
    const Eigen::VectorXd& weights() const { return w_; }

private:
    double L_;
    double h_;
    Eigen::VectorXd X_;
    Eigen::VectorXd w_;
};

class TimeGrid {
public:
    TimeGrid(double t_final, int steps);

    double final_time() const { return tf_; }
    int steps() const { return n_; }
    double dt() const { return dt_; }
    const Eigen::VectorXd& times() const { return t_; }
    double operator[](int k) const { return t_[k]; }
    const Eigen::VectorXd& weights() const { return w_; }
    // Index of the sample closest to t.
    int index_of(double t) const;

private:
    double tf_;
    int n_;
    double dt_;
    Eigen::VectorXd t_;
    Eigen::VectorXd w_;
};

struct MaterialParams {
    double c = 1.0;   // J/(cm^3 K)
    double k = 0.03;  // W/(cm K)

    void validate() const;
};

// Trapezoid time integral of <a_k, b_k>.
double time_inner(const Trajectory& a, const Trajectory& b, const TimeGrid& tg);

inline bool same_grid(const TimeGrid& a, const TimeGrid& b)
{
    return a.steps() == b.steps() && a.final_time() == b.final_time();
}

}  // namespace ihsp
