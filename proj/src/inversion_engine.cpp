#include "ihsp/inversion_engine.hpp"
#include "ihsp/csv.hpp"

#include <cmath>
#include <sstream>

namespace ihsp {

CostValue cost(const Trajectory& Z_data, const Trajectory& Z_model, const TimeGrid& tg)
{
    if (Z_data.rows() != Z_model.rows() || Z_data.cols() != Z_model.cols() || Z_data.cols() != tg.steps() + 1)
        throw InvalidArgument("cost: trajectories are not on the same grids");
    const Trajectory r = Z_data - Z_model;
    CostValue v;
    v.integral_part = 0.5 * time_inner(r, r, tg);
    v.terminal_part = 0.5 * r.col(tg.steps()).squaredNorm();
    v.J = v.integral_part + v.terminal_part;
    return v;
}

Trajectory solve_adjoint(const StateSpaceSystem& sys, const Trajectory& Z_data, const Trajectory& Z_model)
{
    if (Z_data.rows() != Z_model.rows() || Z_data.cols() != Z_model.cols())
        throw InvalidArgument("solve_adjoint: data and model trajectories differ in shape");
    return sys.adjoint(Z_data - Z_model);
}

Trajectory solve_adjoint(const ModelMatrices& mm, const Trajectory& Z_data, const Trajectory& Z_model,
                         const TimeGrid& tg)
{
    return solve_adjoint(StateSpaceSystem(mm, tg), Z_data, Z_model);
}

Trajectory gradient_from_adjoint(const Trajectory& mu, const Eigen::MatrixXd& D)
{
    if (D.rows() != mu.rows()) throw InvalidArgument("gradient_from_adjoint: D does not match the adjoint size");
    return -(D.transpose() * mu);
}

Direction descent_direction(const Trajectory& grad_now, const Trajectory* grad_prev, const Trajectory* w_prev,
                            int iteration, int restart_period, const TimeGrid& tg)
{
    Direction d;
    const bool restart = iteration == 0 || grad_prev == nullptr || w_prev == nullptr ||
                         (restart_period > 0 && iteration % restart_period == 0);
    if (restart) {
        d.w = -grad_now;
        return d;
    }
    const double den = time_inner(*grad_prev, *grad_prev, tg);
    if (!(den > 0.0)) throw NumericalError("descent_direction: previous gradient has zero norm");
    d.gamma = time_inner(grad_now, grad_now, tg) / den;
    d.w = -grad_now + d.gamma * (*w_prev);
    d.restarted = false;
    return d;
}

LineSearch line_search(const StateSpaceSystem& sys, const Trajectory& Z_data, const Trajectory& Z_current,
                       const Trajectory& w, double alpha, const Trajectory* B)
{
    const TimeGrid& tg = sys.time_grid();
    LineSearch ls;
    ls.dZ = sys.forward(w, Eigen::VectorXd::Zero(sys.modes()), false);
    const Trajectory r = Z_data - Z_current;
    const int N = tg.steps();
    double num = time_inner(r, ls.dZ, tg) + r.col(N).dot(ls.dZ.col(N));
    double den = time_inner(ls.dZ, ls.dZ, tg) + ls.dZ.col(N).squaredNorm();
    if (alpha > 0.0) {
        if (B == nullptr) throw InvalidArgument("line_search: the penalised step needs the current control");
        num -= alpha * time_inner(*B, w, tg);
        den += alpha * time_inner(w, w, tg);
    }
    if (!(den > 0.0)) throw StagnationError("line_search: search direction lies in the null space of the forward map");
    ls.rho = num / den;
    return ls;
}

std::string describe(const Regularizer& r)
{
    if (std::holds_alternative<NoRegularizer>(r)) return "none";
    if (auto* t = std::get_if<TsvdRegularizer>(&r)) return "tsvd:" + format_number(t->energy);
    return "tikhonov:" + format_number(std::get<TikhonovRegularizer>(r).alpha);
}

Regularizer parse_regularizer(const std::string& s)
{
    const auto colon = s.find(':');
    const std::string head = s.substr(0, colon);
    const bool has_arg = colon != std::string::npos;
    double arg = 0.0;
    if (has_arg) {
        try {
            arg = parse_number(s.substr(colon + 1));
        } catch (const IoError&) {
            throw InvalidArgument("regularizer '" + s + "': bad numeric argument");
        }
    }
    if (head == "none" && !has_arg) return NoRegularizer{};
    if (head == "tsvd") {
        TsvdRegularizer t;
        if (has_arg) t.energy = arg;
        if (!(t.energy > 0.0 && t.energy <= 1.0)) throw InvalidArgument("regularizer '" + s + "': energy must lie in (0, 1]");
        return t;
    }
    if (head == "tikhonov") {
        TikhonovRegularizer t;
        if (has_arg) t.alpha = arg;
        if (!(t.alpha >= 0.0)) throw InvalidArgument("regularizer '" + s + "': alpha must be non-negative");
        return t;
    }
    throw InvalidArgument("unknown regularizer '" + s + "' (none, tsvd[:energy], tikhonov[:alpha])");
}

void CgmConfig::validate() const
{
    if (max_iterations < 0) throw InvalidArgument("cgm: max_iterations must be non-negative");
    if (restart_period < 0) throw InvalidArgument("cgm: restart_period must be non-negative");
    if (!(stopping.threshold >= 0.0)) throw InvalidArgument("cgm: stopping threshold must be non-negative");
    if (stopping.kind == Stopping::Kind::discrepancy_tau && !(stopping.tau > 0.0))
        throw InvalidArgument("cgm: tau must be positive");
    if (auto* t = std::get_if<TsvdRegularizer>(&regularizer); t && !(t->energy > 0.0 && t->energy <= 1.0))
        throw InvalidArgument("cgm: tsvd energy must lie in (0, 1]");
    if (auto* t = std::get_if<TikhonovRegularizer>(&regularizer); t && !(t->alpha >= 0.0))
        throw InvalidArgument("cgm: tikhonov alpha must be non-negative");
}

std::string to_string(RunStatus s)
{
    switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iterations: return "max_iterations";
    case RunStatus::stagnated: return "stagnated";
    }
    return "unknown";
}

InversionReport run_cgm(const StateSpaceSystem& sys, const Trajectory& Z_data, const Eigen::VectorXd& Z0,
                        const CgmConfig& cfg, const Trajectory* B0)
{
    cfg.validate();
    const TimeGrid& tg = sys.time_grid();
    const int nm = sys.modes();
    if (Z_data.rows() != nm || Z_data.cols() != tg.steps() + 1)
        throw InvalidArgument("run_cgm: observed states do not match the model");

    const auto* tik = std::get_if<TikhonovRegularizer>(&cfg.regularizer);
    const auto* tsvd = std::get_if<TsvdRegularizer>(&cfg.regularizer);
    const double alpha = tik ? tik->alpha : 0.0;
    const Eigen::MatrixXd& D = sys.matrices().D;

    InversionReport rep;
    rep.threshold = cfg.stopping.threshold;
    rep.B_hat = B0 ? *B0 : Trajectory::Zero(nm, tg.steps() + 1);
    if (rep.B_hat.rows() != nm || rep.B_hat.cols() != tg.steps() + 1)
        throw InvalidArgument("run_cgm: initial control has the wrong shape");
    rep.Z_hat = sys.forward(rep.B_hat, Z0);

    Trajectory g_prev, w_prev;
    for (int it = 0;; ++it) {
        double J = cost(Z_data, rep.Z_hat, tg).J;
        if (tik) J += 0.5 * alpha * time_inner(rep.B_hat, rep.B_hat, tg);
        rep.J_history.push_back(J);
        if (J < cfg.stopping.threshold) {
            rep.status = RunStatus::converged;
            break;
        }
        if (it == cfg.max_iterations) {
            rep.status = RunStatus::max_iterations;
            break;
        }

        Trajectory g = gradient_from_adjoint(sys.adjoint(Z_data - rep.Z_hat), D);
        if (tik) g += alpha * rep.B_hat;
        const Trajectory g_full = g;
        if (tsvd) {
            auto f = svd_filter(g, tg, tsvd->energy);
            rep.rank_history.push_back(f.gram.rank);
            rep.spectrum_history.push_back(f.gram.eigenvalues);
            g.swap(f.gradient);
        }
        if (!(time_inner(g, g, tg) > 0.0)) {
            rep.status = RunStatus::stagnated;
            break;
        }
        Direction d = descent_direction(g, it ? &g_prev : nullptr, it ? &w_prev : nullptr, it, cfg.restart_period, tg);
        rep.gamma_history.push_back(d.gamma);
        rep.descent_slope.push_back(time_inner(d.w, g_full, tg));

        LineSearch ls;
        try {
            ls = line_search(sys, Z_data, rep.Z_hat, d.w, alpha, &rep.B_hat);
        } catch (const StagnationError&) {
            rep.status = RunStatus::stagnated;
            break;
        }
        rep.rho_history.push_back(ls.rho);
        rep.B_hat += ls.rho * d.w;
        rep.Z_hat += ls.rho * ls.dZ;
        ++rep.iterations;
        g_prev.swap(g);
        w_prev.swap(d.w);
    }
    return rep;
}

double noise_threshold(const Field& noise, const SpectralBasis& basis, const TimeGrid& tg)
{
    if (noise.rows() != tg.steps() + 1) throw InvalidArgument("noise_threshold: noise record is not on the time grid");
    const Trajectory Ze = project_field(noise, basis);
    return 0.5 * time_inner(Ze, Ze, tg);
}

double discrepancy_tau(const SpectralBasis& basis, const TimeGrid& tg)
{
    return 0.5 * tg.final_time() * basis.projector().squaredNorm();
}

double error_ths(const Eigen::VectorXd& q_hat, const Eigen::VectorXd& q_exact)
{
    if (q_hat.size() != q_exact.size() || q_hat.size() == 0) throw InvalidArgument("error_ths: profile length mismatch");
    const double range = q_exact.maxCoeff() - q_exact.minCoeff();
    if (!(range > 0.0)) throw InvalidArgument("error_ths: exact source is constant, the metric is undefined");
    return (q_hat - q_exact).cwiseAbs().maxCoeff() / range;
}

ResidualStats residual_statistics(const Field& residual)
{
    if (residual.size() == 0) throw InvalidArgument("residual_statistics: empty residual");
    const double n = static_cast<double>(residual.size());
    double sum = 0.0;
    for (Eigen::Index k = 0; k < residual.rows(); ++k)
        for (Eigen::Index j = 0; j < residual.cols(); ++j) sum += residual(k, j);
    ResidualStats s;
    s.mean = sum / n;
    double ss = 0.0;
    for (Eigen::Index k = 0; k < residual.rows(); ++k)
        for (Eigen::Index j = 0; j < residual.cols(); ++j) {
            const double d = residual(k, j) - s.mean;
            ss += d * d;
        }
    s.std = std::sqrt(ss / n);
    return s;
}

}  // namespace ihsp
