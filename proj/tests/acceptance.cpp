// Acceptance checks, one PASS/FAIL line per criterion.
//   acceptance              run all
//   acceptance --criterion N
#include "ihsp/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

using namespace ihsp;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v, int digits = 4)
{
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Eigen::MatrixXd random_matrix(std::mt19937_64& gen, int r, int c)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen);
    return m;
}

// 1: adjoint gradient against central differences of the discrete cost.
Outcome gradient_oracle()
{
    const int nm = 4, nt = 20;
    const TimeGrid tg(2.0, nt);
    std::mt19937_64 gen(2024);
    ModelMatrices mm;
    mm.C = Eigen::MatrixXd::Identity(nm, nm) + 0.2 * random_matrix(gen, nm, nm);
    mm.D = Eigen::MatrixXd::Identity(nm, nm) + 0.3 * random_matrix(gen, nm, nm);
    const Eigen::MatrixXd A0 = -2.0 * Eigen::MatrixXd::Identity(nm, nm) + 0.5 * random_matrix(gen, nm, nm);
    const Eigen::MatrixXd A1 = 0.5 * random_matrix(gen, nm, nm);
    for (int k = 0; k <= nt; ++k) mm.A.push_back(A0 + std::cos(0.4 * k) * A1);
    mm.M = random_matrix(gen, nm, nt + 1);
    const Trajectory B = random_matrix(gen, nm, nt + 1);
    const Trajectory Zd = random_matrix(gen, nm, nt + 1);
    const Eigen::VectorXd Z0 = random_matrix(gen, nm, 1);

    const StateSpaceSystem sys(mm, tg);
    const Trajectory g = gradient_from_adjoint(solve_adjoint(sys, Zd, sys.forward(B, Z0)), mm.D);
    const double h = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < nm; ++i)
        for (int k = 0; k <= nt; ++k) {
            Trajectory Bp = B, Bm = B;
            Bp(i, k) += h;
            Bm(i, k) -= h;
            const double fd = (cost(Zd, sys.forward(Bp, Z0), tg).J - cost(Zd, sys.forward(Bm, Z0), tg).J) / (2.0 * h);
            const double an = tg.weights()[k] * g(i, k);
            worst = std::max(worst, std::abs(fd - an) / std::abs(fd));
        }
    return {worst <= 1e-3, "max relative component error " + num(worst)};
}

// 2: raw quadrature bi-orthogonality of the Branch basis.
Outcome biorthogonality()
{
    const Grid1D g(1.5, 400);
    const MaterialParams m;
    double worst = 0.0;
    std::string detail;
    for (double pe : {0.0, 1.0, 5.0}) {
        const auto b = build_branch_basis(g, m, pe * m.k / (m.c * g.length()), 18);
        const double r = biorthogonality_residual(b);
        worst = std::max(worst, r);
        detail += "Pe=" + num(pe) + ": " + num(r, 3) + "  ";
    }
    return {worst <= 1e-4, detail + "(N_m = 18, bound 1e-4)"};
}

// 3: spectral forward model against the finite-volume reference.
Outcome cross_check()
{
    const TestCase tc = make_test_case_2();
    const Field ref = solve_reference(tc, 4);
    const auto b = build_fourier_basis(tc.grid, 30);
    const BoundaryFluxes fl = tc.fluxes();
    const StateSpaceSystem sys(assemble_matrices(b, tc.mat, tc.velocity(), fl, tc.tg), tc.tg);
    const Trajectory B = project_source(tc.true_source(), b);
    const Field T = lift_temperature(sys.forward(B, initial_state(Eigen::VectorXd::Zero(tc.grid.size()), b, tc.mat, fl)),
                                     b, tc.mat, fl);
    const double rel = (T - ref).norm() / ref.norm();
    return {rel < 0.01, "relative L2 " + num(100.0 * rel, 3) + "%"};
}

ExperimentConfig tc1_sweep()
{
    ExperimentConfig cfg;
    cfg.test_case.source = "tc1";
    cfg.label = "tc1";
    cfg.n_modes = 18;
    cfg.sigmas = {0.3, 0.6};
    cfg.seeds = {1, 2, 3, 4, 5};
    cfg.regularizers = {NoRegularizer{}, TikhonovRegularizer{1e-4}, TsvdRegularizer{0.95}};
    cfg.emit_fields = false;
    return cfg;
}

const TableRow& row(const ExperimentResult& r, double sigma, const std::string& reg)
{
    for (const auto& t : r.table)
        if (t.sigma == sigma && t.regularizer == reg) return t;
    throw std::runtime_error("missing table row");
}

// 4: ordering and bands of the regularizer comparison.
Outcome regularizer_table()
{
    const ExperimentResult res = run_experiment(tc1_sweep(), workers());
    bool ordering = true, bands = true, iters = true;
    std::string detail;
    for (double s : {0.3, 0.6}) {
        const auto& none = row(res, s, "none");
        const auto& tik = row(res, s, "tikhonov:1e-04");
        const auto& tsvd = row(res, s, "tsvd:0.95");
        ordering = ordering && tsvd.median_error_ths < tik.median_error_ths && tik.median_error_ths < none.median_error_ths;
        bands = bands && tsvd.median_error_ths <= (s == 0.3 ? 0.09 : 0.12);
        iters = iters && tsvd.median_iterations > none.median_iterations;
        for (const auto* r : {&none, &tik, &tsvd})
            detail += "\n    sigma=" + num(s) + " " + r->regularizer + ": error " + num(100.0 * r->median_error_ths, 3) +
                      "%, iterations " + num(r->median_iterations) + ", converged " + std::to_string(r->converged) +
                      "/" + std::to_string(r->runs);
    }
    detail = std::string("(a) ordering ") + (ordering ? "ok" : "violated") + ", (b) bands " + (bands ? "ok" : "missed") +
             ", (c) iterations " + (iters ? "ok" : "violated") + detail;
    return {ordering && bands && iters, detail};
}

// 5: test case 2 with TSVD.
Outcome tc2_accuracy()
{
    ExperimentConfig cfg;
    cfg.test_case.source = "tc2";
    cfg.label = "tc2";
    cfg.n_modes = 18;
    cfg.sigmas = {0.13};
    cfg.seeds = {1, 2, 3, 4, 5};
    cfg.regularizers = {TsvdRegularizer{0.95}};
    cfg.emit_fields = false;
    const ExperimentResult res = run_experiment(cfg, workers());
    const TableRow& r = res.table.front();
    return {r.median_error_ths <= 0.04, "median error_ths " + num(100.0 * r.median_error_ths, 3) + "% over " +
                                             std::to_string(r.runs) + " seeds, converged " + std::to_string(r.converged)};
}

// 6: residual statistics of converged TSVD runs at sigma = 0.3.
Outcome residual_stats()
{
    ExperimentConfig cfg = tc1_sweep();
    cfg.sigmas = {0.3};
    cfg.regularizers = {TsvdRegularizer{0.95}};
    const ExperimentResult res = run_experiment(cfg, workers());
    bool ok = true;
    std::string detail;
    for (const auto& r : res.runs) {
        const double sd = r.report.residual_std, mu = r.report.residual_mean;
        const bool conv = r.status == "converged";
        const bool good = conv && std::abs(sd - 0.3) <= 0.03 && std::abs(mu) < 0.2 * sd;
        ok = ok && good;
        detail += "\n    seed " + std::to_string(r.seed) + ": sigma_res " + num(sd) + ", mu_res " + num(mu, 3) +
                  (conv ? "" : " (" + r.status + ")");
    }
    return {ok, "all five runs" + detail};
}

// 7: automatic mode count on noisy test case 1 data.
Outcome mode_count()
{
    const TestCase tc = make_test_case_1();
    const Field T = solve_reference(tc, 4);
    TruncationConfig cfg;
    cfg.sigma = 0.3;
    const auto family = build_fourier_basis(tc.grid, cfg.n_max + 1);
    bool ok = true;
    std::string detail = "N_m per seed:";
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto sel = select_mode_count(add_noise(T, NoiseModel{0.3, seed}), family, cfg);
        ok = ok && sel.n_modes >= 15 && sel.n_modes <= 21 && !sel.capped;
        detail += " " + std::to_string(sel.n_modes);
    }
    return {ok, detail + " (band 15..21)"};
}

// 8: Gram/TSVD properties.
Outcome tsvd_properties()
{
    const TimeGrid tg(40.0, 100);
    std::mt19937_64 gen(8);
    bool ok = true;
    double worst_split = 0.0, worst_idem = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Trajectory g = random_matrix(gen, 12, 101);
        const auto f = svd_filter(g, tg, 0.95);
        const double total = time_inner(g, g, tg);
        const double kept = time_inner(f.gradient, f.gradient, tg);
        const double tail = f.gram.eigenvalues.tail(12 - f.gram.rank).sum();
        worst_split = std::max(worst_split, std::abs(total - kept - tail) / total);
        const auto Ur = f.gram.U.leftCols(f.gram.rank);
        const Trajectory again = Ur * (Ur.transpose() * f.gradient);
        worst_idem = std::max(worst_idem, (again - f.gradient).cwiseAbs().maxCoeff() / f.gradient.cwiseAbs().maxCoeff());
        const int r90 = svd_filter(g, tg, 0.90).gram.rank, r99 = svd_filter(g, tg, 0.99).gram.rank;
        ok = ok && r90 <= f.gram.rank && f.gram.rank <= r99;
    }
    // prescribed spectra through W = U diag(s) U^T
    struct Case {
        std::vector<double> s;
        double energy;
        int rank;
    };
    const std::vector<Case> cases = {{{0.90, 0.06, 0.04}, 0.95, 2}, {{0.5, 0.3, 0.1, 0.06, 0.04}, 0.95, 4},
                                     {{1.0, 0.0, 0.0}, 0.95, 1},    {{0.25, 0.25, 0.25, 0.25}, 0.95, 4},
                                     {{0.96, 0.04}, 0.95, 1},       {{0.7, 0.2, 0.1}, 0.9, 2}};
    bool rank_ok = true;
    for (const auto& c : cases) {
        const int n = static_cast<int>(c.s.size());
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(gen, n, n));
        const Eigen::MatrixXd U = qr.householderQ();
        const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(c.s.data(), n);
        rank_ok = rank_ok && factorize_gram(U * s.asDiagonal() * U.transpose(), c.energy).rank == c.rank;
    }
    ok = ok && rank_ok && worst_split <= 1e-8 && worst_idem <= 1e-12;
    return {ok, "energy split " + num(worst_split, 3) + ", idempotence " + num(worst_idem, 3) + ", rank rule " +
                    (rank_ok ? "ok" : "wrong") + ", monotone rank checked"};
}

// 9: exact line search against a two-level 100-point scan, every iteration.
Outcome line_search_scan()
{
    const TestCase tc = make_test_case_1();
    const Field T = add_noise(solve_reference(tc, 4), NoiseModel{0.3, 1});
    const auto b = build_fourier_basis(tc.grid, 18);
    const BoundaryFluxes fl = tc.fluxes();
    const StateSpaceSystem sys(assemble_matrices(b, tc.mat, tc.velocity(), fl, tc.tg), tc.tg);
    const Trajectory Zd = observe_states(T, b, tc.mat, fl);
    const Eigen::VectorXd Z0 = initial_state(Eigen::VectorXd::Zero(tc.grid.size()), b, tc.mat, fl);
    const TimeGrid& tg = tc.tg;

    auto J = [&](const Trajectory& B) { return cost(Zd, sys.forward(B, Z0), tg).J; };
    auto scan = [&](const Trajectory& B, const Trajectory& w, double lo, double hi) {
        double best = lo, bestJ = INFINITY;
        for (int i = 0; i < 100; ++i) {
            const double r = lo + (hi - lo) * i / 99.0;
            const double v = J(B + r * w);
            if (v < bestJ) bestJ = v, best = r;
        }
        return best;
    };

    Trajectory B = Trajectory::Zero(18, tg.steps() + 1), g_prev, w_prev;
    Trajectory Z = sys.forward(B, Z0);
    double worst = 0.0;
    for (int it = 0; it < 20; ++it) {
        const Trajectory g = gradient_from_adjoint(solve_adjoint(sys, Zd, Z), sys.matrices().D);
        Direction d = descent_direction(g, it ? &g_prev : nullptr, it ? &w_prev : nullptr, it, 50, tg);
        const LineSearch ls = line_search(sys, Zd, Z, d.w);
        const double coarse = scan(B, d.w, 0.0, 2.0 * ls.rho);
        const double step = 2.0 * ls.rho / 99.0;
        const double fine = scan(B, d.w, coarse - step, coarse + step);
        worst = std::max(worst, std::abs(fine - ls.rho) / ls.rho);
        B += ls.rho * d.w;
        Z = sys.forward(B, Z0);
        g_prev = g;
        w_prev = d.w;
    }
    return {worst <= 1e-3, "max |rho_scan - rho*|/rho* over 20 iterations " + num(worst, 3)};
}

// 10: SNR at t_f.
Outcome snr_values()
{
    const TestCase t1 = make_test_case_1(), t2 = make_test_case_2();
    const Field T1 = add_noise(solve_reference(t1, 4), NoiseModel{0.3, 1});
    const Field T2 = add_noise(solve_reference(t2, 4), NoiseModel{0.13, 1});
    const double s1 = snr(T1.row(t1.tg.steps()).transpose(), 0.3);
    const double s2 = snr(T2.row(t2.tg.steps()).transpose(), 0.13);
    const bool ok = std::abs(s1 - 60.0) <= 0.15 * 60.0 && std::abs(s2 - 50.0) <= 0.15 * 50.0;
    return {ok, "test case 1: " + num(s1) + " (target 60), test case 2: " + num(s2) + " (target 50)"};
}

struct Criterion {
    const char* title;
    double budget_s;  // 0: no runtime bound
    std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria()
{
    static const std::vector<Criterion> all = {
        {"gradient oracle", 1.0, gradient_oracle},
        {"bi-orthogonality", 5.0, biorthogonality},
        {"forward cross-check", 30.0, cross_check},
        {"regularizer table", 600.0, regularizer_table},
        {"test case 2 accuracy", 180.0, tc2_accuracy},
        {"residual statistics", 0.0, residual_stats},
        {"mode count", 0.0, mode_count},
        {"tsvd properties", 0.0, tsvd_properties},
        {"line search exactness", 0.0, line_search_scan},
        {"snr", 0.0, snr_values},
    };
    return all;
}

bool run_one(int n)
{
    const Criterion& c = criteria()[static_cast<std::size_t>(n - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = c.run();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s <= 0.0 || secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    char timing[64];
    if (c.budget_s > 0.0) std::snprintf(timing, sizeof timing, "%.2f s of %.0f s", secs, c.budget_s);
    else std::snprintf(timing, sizeof timing, "%.2f s", secs);
    std::printf("criterion %d %s: %s  %s  [%s%s]\n", n, c.title, pass ? "PASS" : "FAIL", o.detail.c_str(), timing,
                in_time ? "" : ", too slow");
    std::fflush(stdout);
    return pass;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance criteria"};
    int which = 0;
    app.add_option("--criterion", which, "criterion number, all when omitted")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    bool ok = true;
    if (which) {
        ok = run_one(which);
    } else {
        for (int n = 1; n <= 10; ++n) ok = run_one(n) && ok;
    }
    return ok ? 0 : 1;
}
