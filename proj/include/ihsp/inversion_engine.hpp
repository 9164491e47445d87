#pragma once

#include "ihsp/forward_model.hpp"
#include "ihsp/gradient_tsvd.hpp"
#include "ihsp/spectral_basis.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ihsp {

struct CostValue {
    double J = 0.0;
    double integral_part = 0.0;
    double terminal_part = 0.0;
};

// J = 1/2 int |Z~ - Z|^2 dt + 1/2 |Z~(t_f) - Z(t_f)|^2, trapezoid in time.
CostValue cost(const Trajectory& Z_data, const Trajectory& Z_model, const TimeGrid& tg);

Trajectory solve_adjoint(const StateSpaceSystem& sys, const Trajectory& Z_data, const Trajectory& Z_model);
Trajectory solve_adjoint(const ModelMatrices& mm, const Trajectory& Z_data, const Trajectory& Z_model,
                         const TimeGrid& tg);

Trajectory gradient_from_adjoint(const Trajectory& mu, const Eigen::MatrixXd& D);

struct Direction {
    Trajectory w;
    double gamma = 0.0;
    bool restarted = true;
};

// Fletcher-Reeves with time-integrated norms; steepest descent at iteration 0 and
// every `restart_period` iterations (0 disables restarts).
Direction descent_direction(const Trajectory& grad_now, const Trajectory* grad_prev, const Trajectory* w_prev,
                            int iteration, int restart_period, const TimeGrid& tg);

struct StagnationError : NumericalError {
    using NumericalError::NumericalError;
};

struct LineSearch {
    double rho = 0.0;
    Trajectory dZ;  // forward response to w with zero initial state and zero forcing
};

// Exact minimiser of J(B + rho w), plus alpha/2 |B + rho w|^2 when alpha > 0.
LineSearch line_search(const StateSpaceSystem& sys, const Trajectory& Z_data, const Trajectory& Z_current,
                       const Trajectory& w, double alpha = 0.0, const Trajectory* B = nullptr);

struct NoRegularizer {};
struct TsvdRegularizer {
    double energy = 0.95;
};
struct TikhonovRegularizer {
    double alpha = 1e-4;
};
using Regularizer = std::variant<NoRegularizer, TsvdRegularizer, TikhonovRegularizer>;

std::string describe(const Regularizer& r);
Regularizer parse_regularizer(const std::string& s);

struct Stopping {
    enum class Kind { noise_projection, discrepancy_tau };
    Kind kind = Kind::noise_projection;
    double threshold = 0.0;  // J is compared against this value
    double tau = 0.0;        // echo for the discrepancy form, threshold = tau sigma^2
};

struct CgmConfig {
    int max_iterations = 3000;
    Stopping stopping;
    Regularizer regularizer = NoRegularizer{};
    int restart_period = 50;

    void validate() const;
};

enum class RunStatus { converged, max_iterations, stagnated };
std::string to_string(RunStatus s);

struct InversionReport {
    Trajectory B_hat;
    Trajectory Z_hat;
    Field q_hat;
    std::vector<double> J_history;   // entry 0 is the starting cost
    std::vector<double> rho_history;
    std::vector<double> gamma_history;
    std::vector<int> rank_history;   // TSVD rank per iteration
    std::vector<Eigen::VectorXd> spectrum_history;  // Gram eigenvalues per iteration (TSVD)
    std::vector<double> descent_slope;  // <w, grad J> per iteration, negative for descent
    int iterations = 0;
    RunStatus status = RunStatus::max_iterations;
    double threshold = 0.0;
    double error_ths = -1.0;
    double residual_mean = 0.0;
    double residual_std = 0.0;
    std::uint64_t seed = 0;
    std::string config_echo;
};

InversionReport run_cgm(const StateSpaceSystem& sys, const Trajectory& Z_data, const Eigen::VectorXd& Z0,
                        const CgmConfig& cfg, const Trajectory* B0 = nullptr);

// J_e = 1/2 int Z_e^T Z_e dt with Z_e the modal projection of the noise record.
double noise_threshold(const Field& noise, const SpectralBasis& basis, const TimeGrid& tg);

// tau sigma^2 with tau = 1/2 t_f sum_i sigma_z,i^2 / sigma^2 (white-noise variance of each projection).
double discrepancy_tau(const SpectralBasis& basis, const TimeGrid& tg);

double error_ths(const Eigen::VectorXd& q_hat, const Eigen::VectorXd& q_exact);

struct ResidualStats {
    double mean = 0.0;
    double std = 0.0;
};

// Population statistics over every entry, accumulated in row-major order.
ResidualStats residual_statistics(const Field& residual);

}  // namespace ihsp
