#pragma once

#include "ihsp/grid.hpp"
#include "ihsp/spectral_basis.hpp"

#include <Eigen/LU>

#include <vector>

namespace ihsp {

struct BoundaryFluxes {
    Eigen::VectorXd phi1, phi2;    // W/cm^2, -k dT/dX at X = 0 and X = L
    Eigen::VectorXd dphi1, dphi2;  // time derivatives

    // Central differences inside, one-sided at both ends.
    static BoundaryFluxes from_samples(const Eigen::VectorXd& phi1, const Eigen::VectorXd& phi2, const TimeGrid& tg);
    static BoundaryFluxes zero(const TimeGrid& tg);
};

struct ModelMatrices {
    std::vector<Eigen::MatrixXd> A;  // one per time sample
    Eigen::MatrixXd C;
    Eigen::MatrixXd D;
    Eigen::MatrixXd M;               // N_m x (N_t + 1) forcing
    bool constant_A = false;

    int modes() const { return static_cast<int>(C.rows()); }
};

ModelMatrices assemble_matrices(const SpectralBasis& basis, const MaterialParams& mat, const Field& velocity,
                                const BoundaryFluxes& fluxes, const TimeGrid& tg);

// Step operators S_k = C - dt A_k with cached LU factors; one factor when A is constant.
class StateSpaceSystem {
public:
    StateSpaceSystem(ModelMatrices mm, const TimeGrid& tg);

    const ModelMatrices& matrices() const { return mm_; }
    const TimeGrid& time_grid() const { return tg_; }
    int modes() const { return mm_.modes(); }

    // (C - dt A_{k+1}) Z_{k+1} = C Z_k + dt (M_k + M_{k+1})/2 + dt D (B_k + B_{k+1})/2
    Trajectory forward(const Trajectory& B, const Eigen::VectorXd& Z0, bool with_forcing = true) const;

    // Transpose of the discrete forward map applied to the cost derivative.
    // Returns mu with grad J = -D^T mu, so that dJ/dB_k = w_k grad J_k.
    Trajectory adjoint(const Trajectory& residual) const;

private:
    const Eigen::PartialPivLU<Eigen::MatrixXd>& lu(int k) const;

    ModelMatrices mm_;
    TimeGrid tg_;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_;
};

Trajectory solve_forward(const ModelMatrices& mm, const Trajectory& B, const Eigen::VectorXd& Z0, const TimeGrid& tg);

// Fourier lift: the smooth part carrying the flux boundary conditions.
Field particular_temperature(const Grid1D& grid, const MaterialParams& mat, const BoundaryFluxes& fluxes);

// Fourier: lift plus modal sum. Branch: modal sum only.
Field lift_temperature(const Trajectory& Z, const SpectralBasis& basis, const MaterialParams& mat,
                       const BoundaryFluxes& fluxes);

// Observed states Z~ from temperature data (the lift is removed first on the Fourier basis).
Trajectory observe_states(const Field& T, const SpectralBasis& basis, const MaterialParams& mat,
                          const BoundaryFluxes& fluxes);

Eigen::VectorXd initial_state(const Eigen::VectorXd& T0, const SpectralBasis& basis, const MaterialParams& mat,
                              const BoundaryFluxes& fluxes);

}  // namespace ihsp
