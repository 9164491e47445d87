#include "ihsp/spectral_basis.hpp"
#include "ihsp/csv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ihsp {

namespace {

constexpr double pi = std::numbers::pi;

struct Dispersion {
    double alpha;

    double s_of(double Lambda) const { return alpha + 0.5 * Lambda; }
    double lambda_osc(double q) const { return -(q * q + alpha * alpha); }
    double lambda_real(double b) const { return b * b - alpha * alpha; }

    double osc(double q) const
    {
        const double s = s_of(lambda_osc(q));
        return (std::sin(q) * (q * q - s * s) - 2.0 * s * q * std::cos(q)) / (q * q + s * s);
    }
    double real(double b) const
    {
        const double s = s_of(lambda_real(b));
        return std::tanh(b) + 2.0 * s * b / (b * b + s * s);
    }
};

template <class F>
double bisect(F&& f, double a, double b)
{
    double fa = f(a);
    for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b || (b - a) <= 1e-13 * (1.0 + std::abs(m))) break;
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

// Sign-change scan: geometric from lo up to `step`, then uniform with `step`.
template <class F>
std::vector<double> scan_roots(F&& f, double lo, double hi, double step, std::size_t wanted)
{
    std::vector<double> out;
    double a = lo;
    double fa = f(a);
    while (a < hi && out.size() < wanted) {
        double b = a < step ? std::min(a * 1.25, step) : a + step;
        b = std::min(b, hi);
        const double fb = f(b);
        if (fa == 0.0) {
            out.push_back(a);
        } else if ((fa < 0) != (fb < 0)) {
            out.push_back(bisect(f, a, b));
        }
        a = b;
        fa = fb;
        if (b >= hi) break;
    }
    return out;
}

// Rows G^-1 P with G = P V^T, so that the projection reproduces any field in the span.
Eigen::MatrixXd oblique(const Eigen::MatrixXd& product, const Eigen::MatrixXd& modes)
{
    const Eigen::MatrixXd G = product * modes.transpose();
    return G.partialPivLu().solve(product);
}

}  // namespace

std::string to_string(BasisFamily f)
{
    return f == BasisFamily::fourier ? "fourier" : "branch";
}

BasisFamily parse_family(const std::string& s)
{
    if (s == "fourier") return BasisFamily::fourier;
    if (s == "branch") return BasisFamily::branch;
    throw InvalidArgument("unknown basis family '" + s + "' (expected fourier or branch)");
}

SpectralBasis SpectralBasis::truncated(int n) const
{
    if (n < 1 || n > size()) throw InvalidArgument("truncated: mode count out of range");
    SpectralBasis out = *this;
    out.modes_ = modes_.topRows(n);
    out.dmodes_ = dmodes_.topRows(n);
    out.adjoint_ = adjoint_.topRows(n);
    out.product_ = product_.topRows(n);
    out.projector_ = family_ == BasisFamily::branch ? oblique(out.product_, out.modes_) : projector_.topRows(n);
    out.eigenvalues_ = eigenvalues_.head(n);
    if (!roots_.empty()) out.roots_.resize(static_cast<std::size_t>(n));
    return out;
}

SpectralBasis build_fourier_basis(const Grid1D& grid, int n_modes)
{
    if (n_modes < 1) throw InvalidArgument("build_fourier_basis: N_m must be at least 1");
    SpectralBasis b(grid);
    b.family_ = BasisFamily::fourier;
    const int nx = grid.size();
    const double L = grid.length();
    b.modes_.resize(n_modes, nx);
    b.dmodes_.resize(n_modes, nx);
    b.adjoint_.resize(n_modes, nx);
    b.eigenvalues_.resize(n_modes);
    for (int i = 0; i < n_modes; ++i) {
        const double w = i * pi / L;
        b.eigenvalues_[i] = -w * w;
        for (int n = 0; n < nx; ++n) {
            const double X = grid[n];
            b.adjoint_(i, n) = std::cos(w * X);
            b.dmodes_(i, n) = -w * std::sin(w * X);
        }
    }
    b.modes_ = b.adjoint_;
    b.modes_.row(0).setConstant(0.5);
    b.projector_ = (2.0 / L) * b.adjoint_ * grid.weights().asDiagonal();
    b.product_ = b.projector_;
    return b;
}

double branch_root_residual(double root, bool real_beta, double peclet)
{
    Dispersion d{0.5 * peclet};
    if (!real_beta && root == 0.0) return std::abs(peclet) < 1e-12 ? 0.0 : 1.0;
    return std::abs(real_beta ? d.real(root) : d.osc(root));
}

SpectralBasis build_branch_basis(const Grid1D& grid, const MaterialParams& mat, double v0, int n_modes)
{
    if (n_modes < 1) throw InvalidArgument("build_branch_basis: N_m must be at least 1");
    mat.validate();
    const double L = grid.length();
    double Pe = mat.c * v0 * L / mat.k;
    if (std::abs(Pe) < 1e-12) Pe = 0.0;
    const Dispersion disp{0.5 * Pe};
    const double alpha = disp.alpha;

    std::vector<BranchRoot> roots;
    if (Pe == 0.0) roots.push_back({0.0, false, 0.0});

    const double lo = alpha == 0.0 ? 1e-6 : std::min(1e-6, 0.01 * std::sqrt(std::abs(alpha)));

    // Real family exists only where s < 0, i.e. beta^2 < alpha^2 - 2 alpha.
    const double bmax2 = alpha * alpha - 2.0 * alpha;
    if (alpha != 0.0 && bmax2 > 0.0) {
        const double bmax = std::sqrt(bmax2) * (1.0 + 1e-9);
        for (double b : scan_roots([&](double x) { return disp.real(x); }, lo, bmax, bmax / 2000.0, 8))
            roots.push_back({b, true, disp.lambda_real(b)});
    }
    const std::size_t n_real = roots.size();

    const double qmax = (n_modes + 20) * pi + 10.0 * std::abs(alpha);
    for (double q : scan_roots([&](double x) { return disp.osc(x); }, lo, qmax, pi / 64.0,
                               static_cast<std::size_t>(n_modes) + 3))
        roots.push_back({q, false, disp.lambda_osc(q)});

    std::stable_sort(roots.begin(), roots.end(),
                     [](const BranchRoot& a, const BranchRoot& b) { return std::abs(a.Lambda) < std::abs(b.Lambda); });
    if (roots.size() < static_cast<std::size_t>(n_modes) || roots.size() - n_real < 1)
        throw NumericalError("build_branch_basis: bracketed " + std::to_string(roots.size()) + " roots, " +
                             std::to_string(n_modes) + " requested");
    roots.resize(static_cast<std::size_t>(n_modes));

    SpectralBasis b(grid);
    b.family_ = BasisFamily::branch;
    b.zeta_ = mat.c * L / 2.0;
    b.peclet_ = Pe;
    b.v0_ = v0;
    b.c_ = mat.c;
    const int nx = grid.size();
    b.modes_.resize(n_modes, nx);
    b.dmodes_.resize(n_modes, nx);
    b.adjoint_.resize(n_modes, nx);
    b.eigenvalues_.resize(n_modes);

    for (int i = 0; i < n_modes; ++i) {
        const BranchRoot& r = roots[static_cast<std::size_t>(i)];
        const double s = disp.s_of(r.Lambda);
        b.eigenvalues_[i] = r.Lambda * mat.k / (mat.c * L * L);
        for (int n = 0; n < nx; ++n) {
            const double x = grid[n] / L;
            double u = 1.0, du = 0.0;  // bracket and its x-derivative
            if (r.value != 0.0) {
                const double z = r.value;
                if (r.real_beta) {
                    u = std::cosh(z * x) + (s / z) * std::sinh(z * x);
                    du = z * std::sinh(z * x) + s * std::cosh(z * x);
                } else {
                    u = std::cos(z * x) + (s / z) * std::sin(z * x);
                    du = -z * std::sin(z * x) + s * std::cos(z * x);
                }
            }
            const double ep = std::exp(alpha * x);
            b.modes_(i, n) = ep * u;
            b.dmodes_(i, n) = ep * (alpha * u + du) / L;
            b.adjoint_(i, n) = u / ep;
        }
    }
    b.roots_ = roots;

    const Eigen::VectorXd cw = mat.c * grid.weights();
    auto cd = [&](const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
        return f.cwiseProduct(cw).dot(g) + b.zeta_ * (f[0] * g[0] + f[nx - 1] * g[nx - 1]);
    };
    for (int i = 0; i < n_modes; ++i) {
        const double nrm = cd(b.modes_.row(i).transpose(), b.adjoint_.row(i).transpose());
        if (!(std::abs(nrm) > 0.0) || !std::isfinite(nrm))
            throw NumericalError("build_branch_basis: degenerate mode " + std::to_string(i));
        const double scale = 1.0 / std::sqrt(std::abs(nrm));
        b.modes_.row(i) *= scale;
        b.dmodes_.row(i) *= scale;
        b.adjoint_.row(i) *= nrm < 0 ? -scale : scale;
    }

    b.product_ = b.adjoint_ * cw.asDiagonal();
    b.product_.col(0) += b.zeta_ * b.adjoint_.col(0);
    b.product_.col(nx - 1) += b.zeta_ * b.adjoint_.col(nx - 1);
    b.projector_ = oblique(b.product_, b.modes_);
    return b;
}

double steklov_product(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const SpectralBasis& basis)
{
    const Grid1D& grid = basis.grid();
    if (f.size() != grid.size() || g.size() != grid.size()) throw InvalidArgument("steklov_product: length mismatch");
    const int nx = grid.size();
    const double c = basis.capacity();
    const double zeta = basis.family() == BasisFamily::branch ? basis.zeta() : c * grid.length() / 2.0;
    return c * f.cwiseProduct(grid.weights()).dot(g) + zeta * (f[0] * g[0] + f[nx - 1] * g[nx - 1]);
}

double biorthogonality_residual(const SpectralBasis& basis)
{
    const Eigen::MatrixXd G = basis.product_rows() * basis.modes().transpose();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < G.rows(); ++i)
        for (Eigen::Index j = 0; j < G.cols(); ++j)
            if (i != j) worst = std::max(worst, std::abs(G(i, j)));
    return worst;
}

Eigen::VectorXd project_field(const Eigen::VectorXd& T, const SpectralBasis& basis)
{
    if (T.size() != basis.grid().size()) throw InvalidArgument("project_field: field length does not match the grid");
    return basis.projector() * T;
}

Eigen::VectorXd reconstruct_field(const Eigen::VectorXd& coeffs, const SpectralBasis& basis)
{
    if (coeffs.size() != basis.size()) throw InvalidArgument("reconstruct_field: coefficient count mismatch");
    return basis.modes().transpose() * coeffs;
}

Trajectory project_field(const Field& T, const SpectralBasis& basis)
{
    if (T.cols() != basis.grid().size()) throw InvalidArgument("project_field: field width does not match the grid");
    return basis.projector() * T.transpose();
}

Field reconstruct_field(const Trajectory& coeffs, const SpectralBasis& basis)
{
    if (coeffs.rows() != basis.size()) throw InvalidArgument("reconstruct_field: coefficient count mismatch");
    return coeffs.transpose() * basis.modes();
}

Trajectory project_source(const Field& q, const SpectralBasis& basis)
{
    Trajectory b = project_field(q, basis);
    if (basis.family() == BasisFamily::branch) b /= basis.capacity();
    return b;
}

Field reconstruct_source(const Trajectory& coeffs, const SpectralBasis& basis)
{
    Field q = reconstruct_field(coeffs, basis);
    if (basis.family() == BasisFamily::branch) q *= basis.capacity();
    return q;
}

Eigen::VectorXd reconstruct_source(const Eigen::VectorXd& coeffs, const SpectralBasis& basis)
{
    Eigen::VectorXd q = reconstruct_field(coeffs, basis);
    if (basis.family() == BasisFamily::branch) q *= basis.capacity();
    return q;
}

void TruncationConfig::validate() const
{
    if (!(m > 1.0)) throw InvalidArgument("truncation: m must exceed 1");
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("truncation: eps must lie in (0, 1)");
    if (!(sigma >= 0.0)) throw InvalidArgument("truncation: sigma must be non-negative");
    if (n_max < 1) throw InvalidArgument("truncation: n_max must be at least 1");
}

ModeSelection select_mode_count(const Field& data, const SpectralBasis& family, const TruncationConfig& cfg)
{
    cfg.validate();
    if (data.size() == 0) throw InvalidArgument("select_mode_count: empty data");
    if (family.size() < cfg.n_max + 1)
        throw InvalidArgument("select_mode_count: basis must hold n_max + 1 modes");
    if (data.cols() != family.grid().size()) throw InvalidArgument("select_mode_count: data width does not match grid");

    const double count = static_cast<double>(data.size());
    const double floor = 1e-12 * std::sqrt(data.squaredNorm() / count);
    ModeSelection sel;
    if (family.family() == BasisFamily::fourier) {
        const Eigen::MatrixXd Z = family.projector().topRows(cfg.n_max + 1) * data.transpose();
        Field R = data;
        for (int n = 0; n <= cfg.n_max; ++n) {
            R.noalias() -= Z.row(n).transpose() * family.modes().row(n);
            sel.tau.push_back(std::sqrt(R.squaredNorm() / count));
        }
    } else {
        // Non-orthogonal modes: every truncation needs its own oblique solve.
        const Eigen::MatrixXd raw = family.product_rows().topRows(cfg.n_max + 1) * data.transpose();
        const Eigen::MatrixXd G = family.product_rows().topRows(cfg.n_max + 1) * family.modes().topRows(cfg.n_max + 1).transpose();
        for (int n = 1; n <= cfg.n_max + 1; ++n) {
            const Eigen::MatrixXd Z = G.topLeftCorner(n, n).partialPivLu().solve(raw.topRows(n));
            const Field R = data - Z.transpose() * family.modes().topRows(n);
            sel.tau.push_back(std::sqrt(R.squaredNorm() / count));
        }
    }
    for (int n = 1; n <= cfg.n_max; ++n) {
        const double tn = sel.tau[static_cast<std::size_t>(n - 1)];
        const double tn1 = sel.tau[static_cast<std::size_t>(n)];
        if (tn < cfg.m * cfg.sigma) {
            sel.n_modes = n;
            sel.criterion = 1;
            return sel;
        }
        if (tn <= floor || (tn - tn1) / tn < cfg.eps) {
            sel.n_modes = n;
            sel.criterion = 2;
            return sel;
        }
    }
    sel.n_modes = cfg.n_max;
    sel.capped = true;
    return sel;
}

void write_basis_csv(const std::string& path, const SpectralBasis& basis)
{
    ColumnTable t;
    t.header.push_back("X");
    t.columns.push_back(basis.grid().nodes());
    for (int i = 0; i < basis.size(); ++i) {
        t.header.push_back(format_number(basis.eigenvalues()[i]));
        t.columns.push_back(basis.modes().row(i).transpose());
    }
    write_columns_csv(path, t);
}

}  // namespace ihsp
