#include "ihsp/gradient_tsvd.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>

namespace ihsp {

namespace {

// Eigen returns ascending eigenvalues; flip to descending and clamp round-off negatives.
void descending(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es, Eigen::VectorXd& vals, Eigen::MatrixXd& vecs)
{
    vals = es.eigenvalues().reverse().cwiseMax(0.0);
    vecs = es.eigenvectors().rowwise().reverse();
}

Eigen::MatrixXd grid_derivative(const Eigen::MatrixXd& rows, double h)
{
    const Eigen::Index n = rows.cols();
    Eigen::MatrixXd d(rows.rows(), n);
    for (Eigen::Index j = 1; j + 1 < n; ++j) d.col(j) = (rows.col(j + 1) - rows.col(j - 1)) / (2.0 * h);
    d.col(0) = (-3.0 * rows.col(0) + 4.0 * rows.col(1) - rows.col(2)) / (2.0 * h);
    d.col(n - 1) = (3.0 * rows.col(n - 1) - 4.0 * rows.col(n - 2) + rows.col(n - 3)) / (2.0 * h);
    return d;
}

}  // namespace

Eigen::MatrixXd gram_matrix(const Trajectory& grad, const TimeGrid& tg)
{
    if (grad.cols() != tg.steps() + 1 || grad.rows() == 0) throw InvalidArgument("gram_matrix: trajectory shape mismatch");
    Eigen::MatrixXd W = grad * tg.weights().asDiagonal() * grad.transpose();
    return 0.5 * (W + W.transpose());
}

GramFactorization factorize_gram(const Eigen::MatrixXd& W, double energy)
{
    if (!(energy > 0.0 && energy <= 1.0)) throw InvalidArgument("svd_filter: energy must lie in (0, 1]");
    GramFactorization f;
    f.W = W;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
    if (es.info() != Eigen::Success) throw NumericalError("gram eigendecomposition failed");
    descending(es, f.eigenvalues, f.U);
    const double total = f.eigenvalues.sum();
    if (!(total > 0.0)) return f;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < f.eigenvalues.size(); ++i) {
        acc += f.eigenvalues[i];
        if (acc / total >= energy - 1e-12) {
            f.rank = static_cast<int>(i + 1);
            f.energy_fraction = acc / total;
            return f;
        }
    }
    f.rank = static_cast<int>(f.eigenvalues.size());
    f.energy_fraction = 1.0;
    return f;
}

FilteredGradient svd_filter(const Trajectory& grad, const TimeGrid& tg, double energy)
{
    FilteredGradient out;
    out.gram = factorize_gram(gram_matrix(grad, tg), energy);
    if (out.gram.rank == 0) {
        out.gradient = Trajectory::Zero(grad.rows(), grad.cols());
        return out;
    }
    const auto Ur = out.gram.U.leftCols(out.gram.rank);
    out.gradient = Ur * (Ur.transpose() * grad);
    return out;
}

EmpiricalInitialization empirical_mode_initializer(const Field& T_data, const Grid1D& grid, const TimeGrid& tg,
                                                   const MaterialParams& mat, const Field& velocity,
                                                   const BoundaryFluxes& fluxes, int n_modes)
{
    const int nx = grid.size();
    const int nt = tg.steps();
    if (T_data.rows() != nt + 1 || T_data.cols() != nx) throw InvalidArgument("empirical initializer: data shape mismatch");
    if (velocity.rows() != nt + 1 || velocity.cols() != nx)
        throw InvalidArgument("empirical initializer: velocity shape mismatch");
    if (n_modes < 1) throw InvalidArgument("empirical initializer: n_modes must be at least 1");

    EmpiricalInitialization out;
    out.source = Field::Zero(nt + 1, nx);

    const Eigen::VectorXd sw = grid.weights().cwiseSqrt();
    const Eigen::MatrixXd Y = T_data * sw.asDiagonal();
    Eigen::MatrixXd Wx = Y.transpose() * tg.weights().asDiagonal() * Y;
    Wx = 0.5 * (Wx + Wx.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Wx);
    if (es.info() != Eigen::Success) throw NumericalError("empirical initializer: eigendecomposition failed");
    Eigen::MatrixXd U;
    descending(es, out.spectrum, U);

    const double total = out.spectrum.sum();
    if (!(total > 0.0)) {
        out.modes = Eigen::MatrixXd::Zero(0, nx);
        return out;
    }
    const auto rank = (out.spectrum.array() > 1e-12 * out.spectrum[0]).count();
    if (n_modes > rank)
        throw InvalidArgument("empirical initializer: " + std::to_string(n_modes) + " modes requested, numerical rank is " +
                              std::to_string(rank));
    out.energy_fraction = out.spectrum.head(n_modes).sum() / total;

    out.modes = U.leftCols(n_modes).transpose() * sw.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd dphi = grid_derivative(out.modes, grid.spacing());
    const Eigen::VectorXd& w = grid.weights();
    const Eigen::MatrixXd a = out.modes * w.asDiagonal() * T_data.transpose();  // n_modes x (nt + 1)
    const Eigen::MatrixXd stiff = mat.k * dphi * w.asDiagonal() * dphi.transpose();

    Eigen::MatrixXd b(n_modes, nt + 1);
    for (int k = 0; k < nt; ++k) {
        const Eigen::VectorXd cvw = mat.c * velocity.row(k).transpose().cwiseProduct(w);
        const Eigen::MatrixXd K = out.modes * cvw.asDiagonal() * dphi.transpose() + stiff;
        const Eigen::VectorXd g = fluxes.phi1[k] * out.modes.col(0) - fluxes.phi2[k] * out.modes.col(nx - 1);
        b.col(k) = mat.c * (a.col(k + 1) - a.col(k)) / tg.dt() + K * a.col(k) - g;
    }
    b.col(nt) = b.col(nt - 1);
    out.source = b.transpose() * out.modes;
    return out;
}

}  // namespace ihsp
