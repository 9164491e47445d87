#pragma once

#include "ihsp/forward_model.hpp"
#include "ihsp/grid.hpp"

namespace ihsp {

struct GramFactorization {
    Eigen::MatrixXd W;
    Eigen::MatrixXd U;             // columns are eigenvectors, ordered like `eigenvalues`
    Eigen::VectorXd eigenvalues;   // descending, clamped at 0
    int rank = 0;
    double energy_fraction = 0.0;  // cumulative share of the first `rank` eigenvalues
};

// W = int g(t) g(t)^T dt with trapezoid weights.
Eigen::MatrixXd gram_matrix(const Trajectory& grad, const TimeGrid& tg);

GramFactorization factorize_gram(const Eigen::MatrixXd& W, double energy);

struct FilteredGradient {
    Trajectory gradient;
    GramFactorization gram;
};

// Rank-r projection U_r U_r^T g(t), r the smallest rank whose share reaches `energy`.
FilteredGradient svd_filter(const Trajectory& grad, const TimeGrid& tg, double energy);

struct EmpiricalInitialization {
    Field source;               // initial source estimate on the data grids
    Eigen::MatrixXd modes;      // n_modes x N_x, L2-orthonormal under the grid quadrature
    Eigen::VectorXd spectrum;   // all Gram eigenvalues, descending
    double energy_fraction = 0.0;
};

// Leading spatial modes of the data, then explicit differencing of the Galerkin
// system restricted to them to recover a source.
EmpiricalInitialization empirical_mode_initializer(const Field& T_data, const Grid1D& grid, const TimeGrid& tg,
                                                   const MaterialParams& mat, const Field& velocity,
                                                   const BoundaryFluxes& fluxes, int n_modes);

}  // namespace ihsp
