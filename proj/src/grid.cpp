#include "ihsp/grid.hpp"

#include <cmath>

namespace ihsp {

Grid1D::Grid1D(double length, int nodes) : L_(length)
{
    if (nodes < 3) throw InvalidArgument("Grid1D: at least 3 nodes are required");
    if (!(length > 0.0) || !std::isfinite(length)) throw InvalidArgument("Grid1D: length must be positive");
    h_ = L_ / (nodes - 1);
    X_.resize(nodes);
    for (int n = 0; n < nodes; ++n) X_[n] = n * h_;
    X_[nodes - 1] = L_;
    w_ = Eigen::VectorXd::Constant(nodes, h_);
    w_[0] = w_[nodes - 1] = 0.5 * h_;
}

TimeGrid::TimeGrid(double t_final, int steps) : tf_(t_final), n_(steps)
{
    if (steps < 2) throw InvalidArgument("TimeGrid: at least 2 steps are required");
    if (!(t_final > 0.0) || !std::isfinite(t_final)) throw InvalidArgument("TimeGrid: final time must be positive");
    dt_ = tf_ / n_;
    t_.resize(n_ + 1);
    for (int k = 0; k <= n_; ++k) t_[k] = k * dt_;
    t_[n_] = tf_;
    w_ = Eigen::VectorXd::Constant(n_ + 1, dt_);
    w_[0] = w_[n_] = 0.5 * dt_;
}

int TimeGrid::index_of(double t) const
{
    const long k = std::lround(t / dt_);
    if (k < 0 || k > n_) throw InvalidArgument("TimeGrid: time " + std::to_string(t) + " outside [0, t_f]");
    return static_cast<int>(k);
}

void MaterialParams::validate() const
{
    if (!(c > 0.0) || !(k > 0.0)) throw InvalidArgument("MaterialParams: c and k must be positive");
}

double time_inner(const Trajectory& a, const Trajectory& b, const TimeGrid& tg)
{
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.cols() != tg.steps() + 1)
        throw InvalidArgument("time_inner: trajectory shape mismatch");
    return (a.cwiseProduct(b).colwise().sum().transpose()).dot(tg.weights());
}

}  // namespace ihsp
