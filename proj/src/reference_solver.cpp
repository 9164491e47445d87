#include "ihsp/reference_solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ihsp {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, NoiseStream stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

Field gaussian(Eigen::Index rows, Eigen::Index cols, double sigma, std::uint64_t seed, NoiseStream stream)
{
    Field e = Field::Zero(rows, cols);
    if (sigma == 0.0) return e;
    auto eng = make_engine(seed, stream);
    std::normal_distribution<double> nd(0.0, sigma);
    for (Eigen::Index k = 0; k < rows; ++k)
        for (Eigen::Index n = 0; n < cols; ++n) e(k, n) = nd(eng);
    return e;
}

// Thomas algorithm; lo[0] and up[n-1] are ignored.
void solve_tridiagonal(std::vector<double> lo, std::vector<double> di, std::vector<double> up, std::vector<double>& x)
{
    const std::size_t n = di.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (di[i - 1] == 0.0) throw NumericalError("reference solver: zero pivot");
        const double m = lo[i] / di[i - 1];
        di[i] -= m * up[i - 1];
        x[i] -= m * x[i - 1];
    }
    x[n - 1] /= di[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (x[i] - up[i] * x[i + 1]) / di[i];
}

}  // namespace

FluxLaw FluxLaw::exponential(double amplitude, double rate)
{
    return {[=](double t) { return amplitude * std::exp(rate * t); },
            [=](double t) { return amplitude * rate * std::exp(rate * t); }};
}

FluxLaw FluxLaw::constant(double value)
{
    return {[=](double) { return value; }, [](double) { return 0.0; }};
}

Field TestCase::velocity() const
{
    Field v(tg.steps() + 1, grid.size());
    for (int k = 0; k <= tg.steps(); ++k)
        for (int n = 0; n < grid.size(); ++n) v(k, n) = velocity_fn(grid[n], tg[k]);
    return v;
}

Field TestCase::true_source() const
{
    Field q(tg.steps() + 1, grid.size());
    for (int k = 0; k <= tg.steps(); ++k)
        for (int n = 0; n < grid.size(); ++n) q(k, n) = source_fn(grid[n], tg[k]);
    return q;
}

BoundaryFluxes TestCase::fluxes() const
{
    const int nt = tg.steps();
    Eigen::VectorXd p1(nt + 1), p2(nt + 1);
    for (int k = 0; k <= nt; ++k) {
        p1[k] = left.phi(tg[k]);
        p2[k] = right.phi(tg[k]);
    }
    BoundaryFluxes f = BoundaryFluxes::from_samples(p1, p2, tg);
    for (int k = 0; k <= nt; ++k) {
        if (left.dphi) f.dphi1[k] = left.dphi(tg[k]);
        if (right.dphi) f.dphi2[k] = right.dphi(tg[k]);
    }
    return f;
}

double velocity_eq42(double X, double t, const MaterialParams& mat, double L, double t_final)
{
    const double s = t / t_final;
    return 0.1 * mat.c * s * std::tanh(3.0 * s * (X - L / 2.0));
}

double source_testcase2(double X, double t, double L)
{
    const double d = X - L / 2.0;
    return (t / 30.0 + std::sin(t / 10.0)) * std::exp(-d * d / 0.1);
}

double source_testcase1(const std::vector<double>& breakpoints, const std::vector<double>& values, double X)
{
    if (breakpoints.empty() || breakpoints.size() != values.size())
        throw InvalidArgument("source_testcase1: breakpoints and values must be non-empty and of equal length");
    if (!std::is_sorted(breakpoints.begin(), breakpoints.end()))
        throw InvalidArgument("source_testcase1: breakpoints must be sorted");
    if (X <= breakpoints.front()) return values.front();
    if (X >= breakpoints.back()) return values.back();
    const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), X);
    const auto j = static_cast<std::size_t>(it - breakpoints.begin());
    const double x0 = breakpoints[j - 1], x1 = breakpoints[j];
    if (x1 == x0) return values[j];
    const double a = (X - x0) / (x1 - x0);
    return (1.0 - a) * values[j - 1] + a * values[j];
}

TestCase make_test_case_1(int nx, int nt, const TestCase1Shape& shape)
{
    const MaterialParams mat{1.0, 0.03};
    const double L = 1.5, tf = 40.0;
    // Validate once so a bad shape fails at construction rather than inside the solver.
    (void)source_testcase1(shape.breakpoints, shape.values, 0.0);
    TestCase tc{"tc1",
                Grid1D(L, nx),
                TimeGrid(tf, nt),
                mat,
                [=](double X, double t) { return velocity_eq42(X, t, mat, L, tf); },
                [=](double X, double) { return shape.amplitude * source_testcase1(shape.breakpoints, shape.values, X); },
                FluxLaw::exponential(-0.005, 0.1742),
                FluxLaw::exponential(0.005, 0.1249),
                0.0};
    return tc;
}

TestCase make_test_case_2(int nx, int nt)
{
    const MaterialParams mat{1.0, 0.03};
    const double L = 1.5, tf = 40.0;
    TestCase tc{"tc2",
                Grid1D(L, nx),
                TimeGrid(tf, nt),
                mat,
                [=](double X, double t) { return velocity_eq42(X, t, mat, L, tf); },
                [=](double X, double t) { return source_testcase2(X, t, L); },
                FluxLaw::exponential(-0.005, 0.1742),
                FluxLaw::exponential(0.005, 0.1249),
                0.0};
    return tc;
}

Field solve_reference(const TestCase& tc, int refine)
{
    if (refine < 1) throw InvalidArgument("solve_reference: refine must be at least 1");
    tc.mat.validate();
    const int nxc = tc.grid.size();
    const int nx = (nxc - 1) * refine + 1;
    const int nt = tc.tg.steps() * refine;
    const double L = tc.grid.length();
    const double h = L / (nx - 1);
    const double dt = tc.tg.final_time() / nt;
    const double c = tc.mat.c, k = tc.mat.k;
    const double dk = k / (h * h);

    std::vector<double> X(static_cast<std::size_t>(nx));
    for (int j = 0; j < nx; ++j) X[static_cast<std::size_t>(j)] = j * h;
    X.back() = L;

    std::vector<double> T(static_cast<std::size_t>(nx), tc.T0);
    Field out(tc.tg.steps() + 1, nxc);
    for (int n = 0; n < nxc; ++n) out(0, n) = T[static_cast<std::size_t>(n * refine)];

    std::vector<double> lo(T.size()), di(T.size()), up(T.size()), rhs(T.size());
    for (int step = 1; step <= nt; ++step) {
        const double t = step * dt;
        const double p1 = tc.left.phi(t), p2 = tc.right.phi(t);
        for (int j = 0; j < nx; ++j) {
            const auto u = static_cast<std::size_t>(j);
            lo[u] = -dk;
            up[u] = -dk;
            di[u] = c / dt + 2.0 * dk;
            rhs[u] = c * T[u] / dt + tc.source_fn(X[u], t);
        }
        // Ghost nodes from -k dT/dX = phi at both ends.
        up[0] = -2.0 * dk;
        lo[static_cast<std::size_t>(nx - 1)] = -2.0 * dk;
        rhs[0] += 2.0 * p1 / h;
        rhs[static_cast<std::size_t>(nx - 1)] -= 2.0 * p2 / h;

        for (int j = 0; j < nx; ++j) {
            const auto u = static_cast<std::size_t>(j);
            const double a = c * tc.velocity_fn(X[u], t) / h;
            if (a > 0.0) {
                di[u] += a;
                if (j > 0) {
                    lo[u] -= a;
                } else {
                    up[u] -= a;
                    rhs[u] += a * 2.0 * h * p1 / k;
                }
            } else if (a < 0.0) {
                di[u] -= a;
                if (j < nx - 1) {
                    up[u] += a;
                } else {
                    lo[u] += a;
                    rhs[u] += 2.0 * a * h * p2 / k;
                }
            }
        }
        solve_tridiagonal(lo, di, up, rhs);
        T.swap(rhs);
        if (step % refine == 0) {
            const int kc = step / refine;
            for (int n = 0; n < nxc; ++n) out(kc, n) = T[static_cast<std::size_t>(n * refine)];
        }
    }
    if (!out.allFinite()) throw NumericalError("reference solver produced non-finite values");
    return out;
}

Field add_noise(const Field& field, const NoiseModel& nm, NoiseStream stream)
{
    if (!(nm.sigma >= 0.0)) throw InvalidArgument("add_noise: sigma must be non-negative");
    return field + gaussian(field.rows(), field.cols(), nm.sigma, nm.seed, stream);
}

Field perturb_velocity(const Field& velocity, const NoiseModel& nm)
{
    if (!(nm.velocity_noise_fraction >= 0.0)) throw InvalidArgument("velocity noise fraction must be non-negative");
    const double s = nm.velocity_noise_fraction * velocity.cwiseAbs().maxCoeff();
    return velocity + gaussian(velocity.rows(), velocity.cols(), s, nm.seed, NoiseStream::velocity);
}

Field noise_recording(Eigen::Index rows, Eigen::Index cols, const NoiseModel& nm)
{
    return gaussian(rows, cols, nm.sigma, nm.seed, NoiseStream::recording);
}

double snr(const Eigen::VectorXd& profile, double sigma)
{
    if (!(sigma > 0.0)) throw InvalidArgument("snr: sigma must be positive");
    if (profile.size() == 0) throw InvalidArgument("snr: empty profile");
    return profile.maxCoeff() / (2.0 * sigma);
}

}  // namespace ihsp
