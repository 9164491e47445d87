#include "ihsp/forward_model.hpp"

#include <cmath>
#include <numbers>

namespace ihsp {

namespace {

Eigen::VectorXd differentiate(const Eigen::VectorXd& f, double dt)
{
    const Eigen::Index n = f.size();
    Eigen::VectorXd d(n);
    for (Eigen::Index k = 1; k + 1 < n; ++k) d[k] = (f[k + 1] - f[k - 1]) / (2.0 * dt);
    if (n >= 3) {
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dt);
    }
    return d;
}

void check_fluxes(const BoundaryFluxes& f, const TimeGrid& tg)
{
    const Eigen::Index n = tg.steps() + 1;
    if (f.phi1.size() != n || f.phi2.size() != n || f.dphi1.size() != n || f.dphi2.size() != n)
        throw InvalidArgument("boundary fluxes are not sampled on the time grid");
}

}  // namespace

BoundaryFluxes BoundaryFluxes::from_samples(const Eigen::VectorXd& phi1, const Eigen::VectorXd& phi2,
                                            const TimeGrid& tg)
{
    BoundaryFluxes f;
    f.phi1 = phi1;
    f.phi2 = phi2;
    f.dphi1 = differentiate(phi1, tg.dt());
    f.dphi2 = differentiate(phi2, tg.dt());
    check_fluxes(f, tg);
    return f;
}

BoundaryFluxes BoundaryFluxes::zero(const TimeGrid& tg)
{
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(tg.steps() + 1);
    return {z, z, z, z};
}

ModelMatrices assemble_matrices(const SpectralBasis& basis, const MaterialParams& mat, const Field& velocity,
                                const BoundaryFluxes& fluxes, const TimeGrid& tg)
{
    mat.validate();
    check_fluxes(fluxes, tg);
    const Grid1D& grid = basis.grid();
    const int nx = grid.size();
    const int nm = basis.size();
    const int nt = tg.steps();
    if (velocity.rows() != nt + 1 || velocity.cols() != nx)
        throw InvalidArgument("assemble_matrices: velocity must be sampled on (time grid) x (basis grid)");

    ModelMatrices mm;
    mm.A.resize(static_cast<std::size_t>(nt + 1));
    mm.M.resize(nm, nt + 1);
    const Eigen::VectorXd& w = grid.weights();

    bool constant = true;
    for (int k = 1; k <= nt && constant; ++k) constant = velocity.row(k) == velocity.row(0);
    mm.constant_A = constant;

    if (basis.family() == BasisFamily::fourier) {
        mm.C = mat.c * Eigen::MatrixXd::Identity(nm, nm);
        mm.D = Eigen::MatrixXd::Identity(nm, nm);
        const Eigen::MatrixXd diffusion = (mat.k * basis.eigenvalues()).asDiagonal();
        const double L = grid.length();
        const double pi = std::numbers::pi;
        const double g = 2.0 * L / (mat.k * pi);
        Eigen::VectorXd sn(nx), cs(nx);
        for (int n = 0; n < nx; ++n) {
            sn[n] = std::sin(pi * grid[n] / (2.0 * L));
            cs[n] = std::cos(pi * grid[n] / (2.0 * L));
        }
        for (int k = 0; k <= nt; ++k) {
            const Eigen::VectorXd v = velocity.row(k).transpose();
            if (k == 0 || !constant)
                mm.A[k] = diffusion - basis.projector() * (mat.c * v).asDiagonal() * basis.derivatives().transpose();
            else
                mm.A[k] = mm.A[0];
            const double p1 = fluxes.phi1[k], p2 = fluxes.phi2[k];
            const Eigen::VectorXd p = g * mat.c * (fluxes.dphi1[k] * sn - fluxes.dphi2[k] * cs) +
                                      (pi / (2.0 * L)) * (p1 * sn - p2 * cs) +
                                      (mat.c / mat.k) * v.cwiseProduct(p1 * cs + p2 * sn);
            mm.M.col(k) = basis.projector() * p;
        }
        return mm;
    }

    // Branch: C(m, i) = int c V_i V*_m, A(m, i) = lambda_m delta - P_im, M_m = phi1 V*_m(0) - phi2 V*_m(L).
    const Eigen::MatrixXd& V = basis.modes();
    const Eigen::MatrixXd& dV = basis.derivatives();
    const Eigen::MatrixXd& Vs = basis.adjoint_modes();
    const double v0 = basis.v0();
    mm.C = Vs * (mat.c * w).asDiagonal() * V.transpose();
    mm.D = mm.C;
    const Eigen::MatrixXd boundary = mat.c * v0 * Vs.col(0) * V.col(0).transpose();
    const Eigen::MatrixXd lam = basis.eigenvalues().asDiagonal();
    for (int k = 0; k <= nt; ++k) {
        if (k == 0 || !constant) {
            const Eigen::VectorXd cv = mat.c * (velocity.row(k).transpose().array() - v0).matrix();
            const Eigen::MatrixXd P = Vs * cv.cwiseProduct(w).asDiagonal() * dV.transpose() - boundary;
            mm.A[k] = lam - P;
        } else {
            mm.A[k] = mm.A[0];
        }
        mm.M.col(k) = fluxes.phi1[k] * Vs.col(0) - fluxes.phi2[k] * Vs.col(nx - 1);
    }
    return mm;
}

StateSpaceSystem::StateSpaceSystem(ModelMatrices mm, const TimeGrid& tg) : mm_(std::move(mm)), tg_(tg)
{
    const int nt = tg_.steps();
    if (static_cast<int>(mm_.A.size()) != nt + 1 || mm_.M.cols() != nt + 1)
        throw InvalidArgument("StateSpaceSystem: matrices are not sampled on the time grid");
    const int first = 1;
    const int last = mm_.constant_A ? 1 : nt;
    lu_.reserve(static_cast<std::size_t>(last - first + 1));
    for (int k = first; k <= last; ++k) {
        lu_.emplace_back(mm_.C - tg_.dt() * mm_.A[static_cast<std::size_t>(k)]);
        const double rc = lu_.back().rcond();
        if (!(rc > 1e-14)) throw NumericalError("singular step matrix at step " + std::to_string(k));
    }
}

const Eigen::PartialPivLU<Eigen::MatrixXd>& StateSpaceSystem::lu(int k) const
{
    return lu_[mm_.constant_A ? 0 : static_cast<std::size_t>(k - 1)];
}

Trajectory StateSpaceSystem::forward(const Trajectory& B, const Eigen::VectorXd& Z0, bool with_forcing) const
{
    const int nt = tg_.steps();
    const int nm = modes();
    if (B.rows() != nm || B.cols() != nt + 1 || Z0.size() != nm)
        throw InvalidArgument("forward: control or initial state has the wrong shape");
    const double dt = tg_.dt();
    Trajectory Z(nm, nt + 1);
    Z.col(0) = Z0;
    Eigen::VectorXd rhs(nm);
    for (int k = 0; k < nt; ++k) {
        rhs.noalias() = mm_.C * Z.col(k);
        rhs.noalias() += (0.5 * dt) * (mm_.D * (B.col(k) + B.col(k + 1)));
        if (with_forcing) rhs += (0.5 * dt) * (mm_.M.col(k) + mm_.M.col(k + 1));
        Z.col(k + 1) = lu(k + 1).solve(rhs);
    }
    return Z;
}

Trajectory StateSpaceSystem::adjoint(const Trajectory& r) const
{
    const int nt = tg_.steps();
    const int nm = modes();
    if (r.rows() != nm || r.cols() != nt + 1) throw InvalidArgument("adjoint: residual has the wrong shape");
    const Eigen::VectorXd& w = tg_.weights();
    Eigen::MatrixXd lam(nm, nt + 1);
    lam.col(0).setZero();
    lam.col(nt) = lu(nt).transpose().solve(Eigen::VectorXd((w[nt] + 1.0) * r.col(nt)));
    for (int k = nt - 1; k >= 1; --k) {
        Eigen::VectorXd rhs = mm_.C.transpose() * lam.col(k + 1) + w[k] * r.col(k);
        lam.col(k) = lu(k).transpose().solve(rhs);
    }
    Trajectory mu(nm, nt + 1);
    mu.col(0) = lam.col(1);
    mu.col(nt) = lam.col(nt);
    for (int k = 1; k < nt; ++k) mu.col(k) = 0.5 * (lam.col(k) + lam.col(k + 1));
    return mu;
}

Trajectory solve_forward(const ModelMatrices& mm, const Trajectory& B, const Eigen::VectorXd& Z0, const TimeGrid& tg)
{
    return StateSpaceSystem(mm, tg).forward(B, Z0);
}

Field particular_temperature(const Grid1D& grid, const MaterialParams& mat, const BoundaryFluxes& fluxes)
{
    const double L = grid.length();
    const double pi = std::numbers::pi;
    const double g = 2.0 * L / (mat.k * pi);
    const int nx = grid.size();
    Eigen::RowVectorXd sn(nx), cs(nx);
    for (int n = 0; n < nx; ++n) {
        sn[n] = std::sin(pi * grid[n] / (2.0 * L));
        cs[n] = std::cos(pi * grid[n] / (2.0 * L));
    }
    return g * (-fluxes.phi1 * sn + fluxes.phi2 * cs);
}

Field lift_temperature(const Trajectory& Z, const SpectralBasis& basis, const MaterialParams& mat,
                       const BoundaryFluxes& fluxes)
{
    Field T = reconstruct_field(Z, basis);
    if (basis.family() == BasisFamily::fourier) {
        if (fluxes.phi1.size() != T.rows()) throw InvalidArgument("lift_temperature: flux samples do not match Z");
        T += particular_temperature(basis.grid(), mat, fluxes);
    }
    return T;
}

Trajectory observe_states(const Field& T, const SpectralBasis& basis, const MaterialParams& mat,
                          const BoundaryFluxes& fluxes)
{
    if (basis.family() == BasisFamily::branch) return project_field(T, basis);
    if (fluxes.phi1.size() != T.rows()) throw InvalidArgument("observe_states: flux samples do not match data");
    return project_field(Field(T - particular_temperature(basis.grid(), mat, fluxes)), basis);
}

Eigen::VectorXd initial_state(const Eigen::VectorXd& T0, const SpectralBasis& basis, const MaterialParams& mat,
                              const BoundaryFluxes& fluxes)
{
    if (basis.family() == BasisFamily::branch) return project_field(T0, basis);
    BoundaryFluxes first{fluxes.phi1.head(1), fluxes.phi2.head(1), fluxes.dphi1.head(1), fluxes.dphi2.head(1)};
    const Field Tp = particular_temperature(basis.grid(), mat, first);
    return project_field(Eigen::VectorXd(T0 - Tp.row(0).transpose()), basis);
}

}  // namespace ihsp
