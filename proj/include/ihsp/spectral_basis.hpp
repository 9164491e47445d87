#pragma once

#include "ihsp/grid.hpp"

#include <string>
#include <vector>

namespace ihsp {

enum class BasisFamily { fourier, branch };

std::string to_string(BasisFamily f);
BasisFamily parse_family(const std::string& s);

struct BranchRoot {
    double value = 0.0;      // q (oscillatory family) or beta (real family)
    bool real_beta = false;  // true for the cosh/sinh family
    double Lambda = 0.0;     // dimensionless eigenvalue c L^2 lambda / k
};

// Sampled mode family. For Fourier, mode 0 is 1/2 and mode i is cos(i pi X / L).
// For Branch, modes and adjoint modes are bi-orthonormal under C_D.
class SpectralBasis {
public:
    BasisFamily family() const { return family_; }
    const Grid1D& grid() const { return grid_; }
    int size() const { return static_cast<int>(modes_.rows()); }

    // N_m x N_x samples.
    const Eigen::MatrixXd& modes() const { return modes_; }
    const Eigen::MatrixXd& derivatives() const { return dmodes_; }
    // Branch: adjoint modes V*_i. Fourier: cos(i pi X / L) for every i.
    const Eigen::MatrixXd& adjoint_modes() const { return adjoint_; }
    // Row i applied to nodal samples gives coefficient i; exact on the span of the modes.
    const Eigen::MatrixXd& projector() const { return projector_; }
    // Raw quadrature rows of the bi-orthogonal product against each adjoint mode.
    const Eigen::MatrixXd& product_rows() const { return product_; }
    // Fourier: -(i pi / L)^2. Branch: dimensional lambda_i (1/s).
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

    // Branch-only data (zero / empty for Fourier).
    double zeta() const { return zeta_; }
    double peclet() const { return peclet_; }
    double v0() const { return v0_; }
    double capacity() const { return c_; }
    const std::vector<BranchRoot>& roots() const { return roots_; }

    SpectralBasis truncated(int n_modes) const;

private:
    friend SpectralBasis build_fourier_basis(const Grid1D&, int);
    friend SpectralBasis build_branch_basis(const Grid1D&, const MaterialParams&, double, int);
    explicit SpectralBasis(const Grid1D& g) : grid_(g) {}

    BasisFamily family_ = BasisFamily::fourier;
    Grid1D grid_;
    Eigen::MatrixXd modes_, dmodes_, adjoint_, projector_, product_;
    Eigen::VectorXd eigenvalues_;
    double zeta_ = 0.0, peclet_ = 0.0, v0_ = 0.0, c_ = 1.0;
    std::vector<BranchRoot> roots_;
};

SpectralBasis build_fourier_basis(const Grid1D& grid, int n_modes);
SpectralBasis build_branch_basis(const Grid1D& grid, const MaterialParams& mat, double v0, int n_modes);

// Root function of the Branch dispersion relation, scaled to stay O(1):
// oscillatory family  [sin q (q^2 - s^2) - 2 s q cos q] / (q^2 + s^2)
// real family         [sinh b (b^2 + s^2) + 2 s b cosh b] / (cosh b (b^2 + s^2))
double branch_root_residual(double root, bool real_beta, double peclet);

// Bi-orthogonal product c * int f g dX + zeta (f(0) g(0) + f(L) g(L)).
double steklov_product(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const SpectralBasis& basis);

double biorthogonality_residual(const SpectralBasis& basis);

Eigen::VectorXd project_field(const Eigen::VectorXd& T, const SpectralBasis& basis);
Eigen::VectorXd reconstruct_field(const Eigen::VectorXd& coeffs, const SpectralBasis& basis);

// Row-wise versions for space-time fields (rows = times).
Trajectory project_field(const Field& T, const SpectralBasis& basis);
Field reconstruct_field(const Trajectory& coeffs, const SpectralBasis& basis);

// Sources carry an extra factor c on the Branch basis: q = sum b_i c V_i.
Trajectory project_source(const Field& q, const SpectralBasis& basis);
Field reconstruct_source(const Trajectory& coeffs, const SpectralBasis& basis);
Eigen::VectorXd reconstruct_source(const Eigen::VectorXd& coeffs, const SpectralBasis& basis);

struct TruncationConfig {
    double m = 1.02;
    double eps = 0.0075;
    double sigma = 0.0;
    int n_max = 60;

    void validate() const;
};

struct ModeSelection {
    int n_modes = 0;
    bool capped = false;          // neither criterion met before n_max
    int criterion = 0;            // 1 or 2, 0 when capped
    std::vector<double> tau;      // tau[N - 1] is the RMS residual with N modes
};

// `family` must hold at least cfg.n_max + 1 modes; its leading N modes define T_N.
ModeSelection select_mode_count(const Field& data, const SpectralBasis& family, const TruncationConfig& cfg);

void write_basis_csv(const std::string& path, const SpectralBasis& basis);

}  // namespace ihsp
