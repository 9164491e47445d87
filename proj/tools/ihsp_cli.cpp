// Command-line front end: run / forward / modes.
#include "ihsp/csv.hpp"
#include "ihsp/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using namespace ihsp;

namespace {

constexpr int kConfigError = 2;

struct Overrides {
    std::string config;
    std::vector<std::uint64_t> seeds;
    std::string out_dir;
    std::string basis;
    std::vector<std::string> regularizers;
    int jobs = 0;
};

ExperimentConfig resolve(const Overrides& o)
{
    ExperimentConfig cfg = load_experiment(Config::load(o.config));
    if (!o.seeds.empty()) cfg.seeds = o.seeds;
    if (!o.basis.empty()) cfg.basis = parse_family(o.basis);
    if (!o.regularizers.empty()) {
        cfg.regularizers.clear();
        for (const auto& r : o.regularizers) cfg.regularizers.push_back(parse_regularizer(r));
    }
    if (!o.out_dir.empty()) {
        cfg.output_dir = o.out_dir;
    } else if (cfg.output_dir.empty()) {
        const char* env = std::getenv("IHSP_OUTPUT_DIR");
        cfg.output_dir = env && *env ? env : "ihsp_out";
    }
    cfg.validate();
    return cfg;
}

int cmd_run(const Overrides& o)
{
    const ExperimentConfig cfg = resolve(o);
    const int jobs = o.jobs > 0 ? o.jobs : std::max(1u, std::thread::hardware_concurrency());
    const ExperimentResult res = run_experiment(cfg, jobs);

    std::cout << "sigma  regularizer        runs  conv  J_min         iterations  error_ths\n";
    for (const auto& r : res.table) {
        std::printf("%-6g %-18s %4d  %4d  %-12.6g  %-10g  %.4f\n", r.sigma, r.regularizer.c_str(), r.runs,
                    r.converged, r.median_J, r.median_iterations, r.median_error_ths);
    }
    for (const auto& r : res.runs)
        if (r.status == "failed") std::cerr << "run " << run_directory_name(r) << " failed: " << r.error << '\n';
    std::cout << "outputs in " << cfg.output_dir << '\n';
    return exit_code(res);
}

int cmd_forward(const Overrides& o)
{
    const ExperimentConfig cfg = resolve(o);
    const Scenario sc = prepare_scenario(cfg);
    fs::create_directories(cfg.output_dir);
    const fs::path out(cfg.output_dir);
    const Eigen::VectorXd& X = sc.tc.grid.nodes();
    const Eigen::VectorXd& t = sc.tc.tg.times();
    write_field_csv((out / "T_clean.csv").string(), {X, t, sc.T_clean});
    write_field_csv((out / "velocity.csv").string(), {X, t, sc.velocity});
    write_field_csv((out / "source.csv").string(), {X, t, sc.source});
    write_columns_csv((out / "fluxes.csv").string(),
                      {{"t", "phi1", "phi2", "dphi1", "dphi2"},
                       {t, sc.fluxes.phi1, sc.fluxes.phi2, sc.fluxes.dphi1, sc.fluxes.dphi2}});
    for (double s : cfg.sigmas)
        for (auto seed : cfg.seeds) {
            const NoiseModel nm{s, seed, cfg.velocity_noise};
            const std::string tag = "sigma" + format_number(s) + "_seed" + std::to_string(seed);
            write_field_csv((out / ("T_noisy_" + tag + ".csv")).string(), {X, t, add_noise(sc.T_clean, nm)});
            const double snr_tf = s > 0 ? snr(add_noise(sc.T_clean, nm).row(sc.tc.tg.steps()).transpose(), s) : 0.0;
            std::cout << tag << " snr(t_f)=" << snr_tf << '\n';
        }
    std::cout << "wrote data for " << cfg.label << " to " << cfg.output_dir << '\n';
    return 0;
}

int cmd_modes(const Overrides& o)
{
    const ExperimentConfig cfg = resolve(o);
    const Scenario sc = prepare_scenario(cfg);
    fs::create_directories(cfg.output_dir);
    const fs::path out(cfg.output_dir);
    std::ofstream report(out / "truncation.txt");
    const std::vector<double> sigmas = cfg.sigmas.empty() ? std::vector<double>{0.0} : cfg.sigmas;
    const std::vector<std::uint64_t> seeds = cfg.seeds.empty() ? std::vector<std::uint64_t>{0} : cfg.seeds;
    for (double s : sigmas)
        for (auto seed : seeds) {
            const NoiseModel nm{s, seed, cfg.velocity_noise};
            const Field T = add_noise(sc.T_clean, nm);
            const Field v = cfg.velocity_noise > 0 ? perturb_velocity(sc.velocity, nm) : sc.velocity;
            TruncationConfig tr = cfg.truncation;
            tr.sigma = s;
            const int n = tr.n_max + 1;
            const SpectralBasis family = cfg.basis == BasisFamily::fourier
                                             ? build_fourier_basis(sc.tc.grid, n)
                                             : build_branch_basis(sc.tc.grid, sc.tc.mat, v.mean(), n);
            const ModeSelection sel = select_mode_count(T, family, tr);
            const std::string tag = "sigma" + format_number(s) + "_seed" + std::to_string(seed);
            Eigen::VectorXd idx(static_cast<Eigen::Index>(sel.tau.size())), tau(idx.size());
            for (Eigen::Index i = 0; i < idx.size(); ++i) {
                idx[i] = static_cast<double>(i + 1);
                tau[i] = sel.tau[static_cast<std::size_t>(i)];
            }
            write_columns_csv((out / ("tau_" + tag + ".csv")).string(), {{"modes", "tau"}, {idx, tau}});
            report << tag << " n_modes=" << sel.n_modes << " criterion=" << sel.criterion
                   << (sel.capped ? " capped=true" : "") << '\n';
            std::cout << tag << ": N_m = " << sel.n_modes << (sel.capped ? " (cap reached)" : "") << '\n';
            if (s == sigmas.front() && seed == seeds.front()) {
                const SpectralBasis basis = family.truncated(sel.n_modes);
                write_basis_csv((out / "basis.csv").string(), basis);
                if (basis.family() == BasisFamily::branch) {
                    std::cout << "Pe = " << basis.peclet()
                              << ", bi-orthogonality residual = " << biorthogonality_residual(basis) << '\n';
                }
            }
        }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Heat source reconstruction from noisy temperature fields"};
    app.require_subcommand(1);
    Overrides o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", o.config, "experiment config file")->required();
        sub->add_option("--seed", o.seeds, "noise seed(s), replaces the configured list");
        sub->add_option("--out-dir", o.out_dir, "output directory (default: config, then $IHSP_OUTPUT_DIR)");
        sub->add_option("--basis", o.basis, "fourier or branch");
        sub->add_option("--regularizer", o.regularizers, "none, tsvd[:energy], tikhonov[:alpha]; repeatable");
        sub->add_option("--jobs", o.jobs, "worker threads for the run matrix")->check(CLI::NonNegativeNumber);
    };
    auto* run = app.add_subcommand("run", "full experiment: data, inversion, reports");
    auto* fwd = app.add_subcommand("forward", "reference data generation only");
    auto* modes = app.add_subcommand("modes", "basis inspection and truncation report");
    for (auto* s : {run, fwd, modes}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }

    try {
        if (*run) return cmd_run(o);
        if (*fwd) return cmd_forward(o);
        return cmd_modes(o);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const InvalidArgument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
