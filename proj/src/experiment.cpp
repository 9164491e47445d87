#include "ihsp/experiment.hpp"
#include "ihsp/csv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace ihsp {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kTestCaseKeys = {"source",        "length",         "t_final",        "c",
                                             "k",             "amplitude",      "breakpoints",    "values",
                                             "phi1_amplitude", "phi1_rate",     "phi2_amplitude", "phi2_rate",
                                             "velocity_scale"};

void read_test_case_section(const Config& cfg, TestCaseSpec& spec)
{
    const std::string p = "test_case.";
    spec.source = cfg.get_or(p + "source", spec.source);
    if (spec.source != "tc1" && spec.source != "tc2")
        throw ConfigError("test_case.source must be tc1 or tc2, got '" + spec.source + "'");
    spec.length = cfg.number(p + "length", spec.length);
    spec.t_final = cfg.number(p + "t_final", spec.t_final);
    spec.mat.c = cfg.number(p + "c", spec.mat.c);
    spec.mat.k = cfg.number(p + "k", spec.mat.k);
    spec.shape.amplitude = cfg.number(p + "amplitude", spec.shape.amplitude);
    if (cfg.has(p + "breakpoints")) spec.shape.breakpoints = cfg.numbers(p + "breakpoints");
    if (cfg.has(p + "values")) spec.shape.values = cfg.numbers(p + "values");
    spec.phi1_amplitude = cfg.number(p + "phi1_amplitude", spec.phi1_amplitude);
    spec.phi1_rate = cfg.number(p + "phi1_rate", spec.phi1_rate);
    spec.phi2_amplitude = cfg.number(p + "phi2_amplitude", spec.phi2_amplitude);
    spec.phi2_rate = cfg.number(p + "phi2_rate", spec.phi2_rate);
    spec.velocity_scale = cfg.number(p + "velocity_scale", spec.velocity_scale);
}

std::uint64_t parse_seed(const std::string& s)
{
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty() || s.front() == '-') throw ConfigError("seed '" + s + "' is not a non-negative integer");
    return v;
}

double median(std::vector<double> v)
{
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v)
{
    return std::isfinite(v) ? format_number(v) : std::string("nan");
}

}  // namespace

TestCase build_test_case(const TestCaseSpec& spec, int nx, int nt)
{
    TestCase tc = spec.source == "tc2" ? make_test_case_2(nx, nt) : make_test_case_1(nx, nt, spec.shape);
    const double L = spec.length, tf = spec.t_final, scale = spec.velocity_scale;
    const MaterialParams mat = spec.mat;
    mat.validate();
    tc.grid = Grid1D(L, nx);
    tc.tg = TimeGrid(tf, nt);
    tc.mat = mat;
    tc.velocity_fn = [=](double X, double t) { return 10.0 * scale * velocity_eq42(X, t, mat, L, tf); };
    if (spec.source == "tc2") {
        tc.source_fn = [=](double X, double t) { return source_testcase2(X, t, L); };
    } else {
        const TestCase1Shape shape = spec.shape;
        tc.source_fn = [=](double X, double) {
            return shape.amplitude * source_testcase1(shape.breakpoints, shape.values, X);
        };
    }
    tc.left = FluxLaw::exponential(spec.phi1_amplitude, spec.phi1_rate);
    tc.right = FluxLaw::exponential(spec.phi2_amplitude, spec.phi2_rate);
    return tc;
}

void ExperimentConfig::validate() const
{
    truncation.validate();
    if (regularizers.empty()) throw ConfigError("at least one regularizer is required");
    for (double s : sigmas)
        if (!(s >= 0.0)) throw ConfigError("noise sigma must be non-negative");
    if (!sigmas.empty() && seeds.empty()) throw ConfigError("seeds must be listed explicitly");
    if (n_modes && *n_modes < 1) throw ConfigError("modes must be auto or a positive count");
    if (!(velocity_noise >= 0.0)) throw ConfigError("velocity_noise must be non-negative");
    if (refine < 1) throw ConfigError("refine must be at least 1");
    if (!(eval_time >= 0.0 && eval_time <= test_case.t_final)) throw ConfigError("eval_time must lie in [0, t_final]");
    if (max_iterations < 0 || restart_period < 0) throw ConfigError("iteration limits must be non-negative");
    if (tau && !(*tau > 0.0)) throw ConfigError("tau must be positive");
    if (empirical_modes < 1) throw ConfigError("empirical_modes must be positive");
    if (nx < 3 || nt < 2) throw ConfigError("grid too small");
    if (test_case.source == "tc1") (void)source_testcase1(test_case.shape.breakpoints, test_case.shape.values, 0.0);
}

ExperimentConfig load_experiment(const Config& cfg)
{
    std::set<std::string> allowed = {
        "experiment.test_case",      "experiment.basis",       "experiment.modes",      "experiment.regularizers",
        "experiment.eval_time",      "experiment.initializer", "experiment.empirical_modes",
        "experiment.output_dir",     "experiment.emit_fields", "noise.sigma",           "noise.seeds",
        "noise.velocity_noise",      "grid.nx",                "grid.nt",               "grid.refine",
        "truncation.m",              "truncation.eps",         "truncation.n_max",      "cgm.max_iterations",
        "cgm.restart_period",        "cgm.stopping",           "cgm.tau"};
    for (const auto& k : kTestCaseKeys) allowed.insert("test_case." + k);
    cfg.require_known(allowed);

    ExperimentConfig e;
    try {
        const std::string tc = cfg.get_or("experiment.test_case", "tc1");
        if (tc == "tc1" || tc == "tc2") {
            e.test_case.source = tc;
        } else {
            fs::path p(tc);
            if (p.is_relative() && cfg.origin() != "<string>") p = fs::path(cfg.origin()).parent_path() / p;
            Config file = Config::load(p.string());
            std::set<std::string> tk;
            for (const auto& k : kTestCaseKeys) tk.insert("test_case." + k);
            file.require_known(tk);
            read_test_case_section(file, e.test_case);
        }
        e.label = tc == "tc1" || tc == "tc2" ? tc : fs::path(tc).stem().string();
        read_test_case_section(cfg, e.test_case);

        e.basis = parse_family(cfg.get_or("experiment.basis", "fourier"));
        const std::string modes = cfg.get_or("experiment.modes", "auto");
        if (modes != "auto") e.n_modes = cfg.integer("experiment.modes", 0);
        if (cfg.has("experiment.regularizers")) {
            e.regularizers.clear();
            for (const auto& r : cfg.list("experiment.regularizers")) e.regularizers.push_back(parse_regularizer(r));
        }
        e.eval_time = cfg.number("experiment.eval_time", e.eval_time);
        const std::string init = cfg.get_or("experiment.initializer", "none");
        if (init != "none" && init != "empirical") throw ConfigError("initializer must be none or empirical");
        e.empirical_init = init == "empirical";
        e.empirical_modes = cfg.integer("experiment.empirical_modes", e.empirical_modes);
        e.output_dir = cfg.get_or("experiment.output_dir", "");
        const std::string ef = cfg.get_or("experiment.emit_fields", "true");
        if (ef != "true" && ef != "false") throw ConfigError("emit_fields must be true or false");
        e.emit_fields = ef == "true";

        if (cfg.has("noise.sigma")) e.sigmas = cfg.numbers("noise.sigma");
        if (cfg.has("noise.seeds")) {
            e.seeds.clear();
            for (const auto& s : cfg.list("noise.seeds")) e.seeds.push_back(parse_seed(s));
        }
        e.velocity_noise = cfg.number("noise.velocity_noise", e.velocity_noise);

        e.nx = cfg.integer("grid.nx", e.nx);
        e.nt = cfg.integer("grid.nt", e.nt);
        e.refine = cfg.integer("grid.refine", e.refine);

        e.truncation.m = cfg.number("truncation.m", e.truncation.m);
        e.truncation.eps = cfg.number("truncation.eps", e.truncation.eps);
        e.truncation.n_max = cfg.integer("truncation.n_max", e.truncation.n_max);

        e.max_iterations = cfg.integer("cgm.max_iterations", e.max_iterations);
        e.restart_period = cfg.integer("cgm.restart_period", e.restart_period);
        const std::string stop = cfg.get_or("cgm.stopping", "noise_projection");
        if (stop == "noise_projection") e.stopping = Stopping::Kind::noise_projection;
        else if (stop == "discrepancy") e.stopping = Stopping::Kind::discrepancy_tau;
        else throw ConfigError("cgm.stopping must be noise_projection or discrepancy");
        if (cfg.has("cgm.tau")) e.tau = cfg.number("cgm.tau", 0.0);
        e.validate();
    } catch (const InvalidArgument& ex) {
        throw ConfigError(ex.what());
    }
    return e;
}

Scenario prepare_scenario(const ExperimentConfig& cfg)
{
    Scenario sc{build_test_case(cfg.test_case, cfg.nx, cfg.nt), {}, {}, {}, {}};
    sc.T_clean = solve_reference(sc.tc, cfg.refine);
    sc.velocity = sc.tc.velocity();
    sc.source = sc.tc.true_source();
    sc.fluxes = sc.tc.fluxes();
    return sc;
}

RunRecord run_cell(const ExperimentConfig& cfg, const Scenario& sc, double sigma, std::uint64_t seed,
                   const Regularizer& reg)
{
    RunRecord rec;
    rec.sigma = sigma;
    rec.seed = seed;
    rec.regularizer = describe(reg);
    const TestCase& tc = sc.tc;
    const TimeGrid& tg = tc.tg;
    const NoiseModel nm{sigma, seed, cfg.velocity_noise};

    const Field T_data = add_noise(sc.T_clean, nm);
    const Field v_model = cfg.velocity_noise > 0.0 ? perturb_velocity(sc.velocity, nm) : sc.velocity;
    const double v0 = v_model.mean();

    auto build = [&](int n) {
        return cfg.basis == BasisFamily::fourier ? build_fourier_basis(tc.grid, n)
                                                 : build_branch_basis(tc.grid, tc.mat, v0, n);
    };
    if (cfg.n_modes) {
        rec.n_modes = *cfg.n_modes;
    } else {
        TruncationConfig t = cfg.truncation;
        t.sigma = sigma;
        const ModeSelection sel = select_mode_count(T_data, build(t.n_max + 1), t);
        rec.n_modes = sel.n_modes;
        rec.modes_capped = sel.capped;
    }
    const SpectralBasis basis = build(rec.n_modes);
    const StateSpaceSystem sys(assemble_matrices(basis, tc.mat, v_model, sc.fluxes, tg), tg);
    const Trajectory Zd = observe_states(T_data, basis, tc.mat, sc.fluxes);
    const Eigen::VectorXd Z0 =
        initial_state(Eigen::VectorXd::Constant(tc.grid.size(), tc.T0), basis, tc.mat, sc.fluxes);

    CgmConfig cg;
    cg.max_iterations = cfg.max_iterations;
    cg.restart_period = cfg.restart_period;
    cg.regularizer = reg;
    cg.stopping.kind = cfg.stopping;
    if (cfg.stopping == Stopping::Kind::noise_projection) {
        cg.stopping.threshold = noise_threshold(noise_recording(T_data.rows(), T_data.cols(), nm), basis, tg);
    } else {
        cg.stopping.tau = cfg.tau.value_or(discrepancy_tau(basis, tg));
        cg.stopping.threshold = cg.stopping.tau * sigma * sigma;
    }

    Trajectory B0;
    if (cfg.empirical_init) {
        const auto init = empirical_mode_initializer(T_data, tc.grid, tg, tc.mat, v_model, sc.fluxes, cfg.empirical_modes);
        B0 = project_source(init.source, basis);
    }
    rec.report = run_cgm(sys, Zd, Z0, cg, cfg.empirical_init ? &B0 : nullptr);
    rec.report.seed = seed;
    rec.report.config_echo = echo(cfg);
    rec.status = to_string(rec.report.status);

    rec.report.q_hat = reconstruct_source(rec.report.B_hat, basis);
    const int ke = tg.index_of(cfg.eval_time);
    rec.q_exact_eval = sc.source.row(ke).transpose();
    rec.q_hat_eval = rec.report.q_hat.row(ke).transpose();
    rec.report.error_ths = error_ths(rec.q_hat_eval, rec.q_exact_eval);

    const Field T_model = lift_temperature(rec.report.Z_hat, basis, tc.mat, sc.fluxes);
    rec.residual = T_data - T_model;
    const ResidualStats st = residual_statistics(rec.residual);
    rec.report.residual_mean = st.mean;
    rec.report.residual_std = st.std;
    rec.T_data_eval = T_data.row(ke).transpose();
    rec.T_model_eval = T_model.row(ke).transpose();
    rec.snr = sigma > 0.0 ? snr(T_data.row(tg.steps()).transpose(), sigma) : std::numeric_limits<double>::infinity();
    return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs)
{
    cfg.validate();
    const Scenario sc = prepare_scenario(cfg);

    struct Cell {
        double sigma;
        std::uint64_t seed;
        Regularizer reg;
    };
    std::vector<Cell> cells;
    if (cfg.sigmas.empty()) {
        for (const auto& r : cfg.regularizers) cells.push_back({0.0, cfg.seeds.empty() ? 0 : cfg.seeds.front(), r});
    } else {
        for (double s : cfg.sigmas)
            for (const auto& r : cfg.regularizers)
                for (auto seed : cfg.seeds) cells.push_back({s, seed, r});
    }

    ExperimentResult res;
    res.runs.resize(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const Cell& c = cells[i];
            try {
                res.runs[i] = run_cell(cfg, sc, c.sigma, c.seed, c.reg);
            } catch (const std::exception& ex) {
                RunRecord failed;
                failed.sigma = c.sigma;
                failed.seed = c.seed;
                failed.regularizer = describe(c.reg);
                failed.status = "failed";
                failed.error = ex.what();
                res.runs[i] = std::move(failed);
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    res.table = aggregate(res.runs);
    if (!cfg.output_dir.empty()) {
        fs::create_directories(cfg.output_dir);
        for (const auto& r : res.runs) {
            const fs::path dir = fs::path(cfg.output_dir) / run_directory_name(r);
            fs::create_directories(dir);
            if (r.status == "failed") {
                write_summary((dir / "summary.txt").string(), r, cfg);
                continue;
            }
            emit_reconstruction(r, cfg, sc, dir.string());
        }
        write_table((fs::path(cfg.output_dir) / "table.csv").string(), res.table);
    }
    return res;
}

std::vector<TableRow> aggregate(const std::vector<RunRecord>& runs)
{
    std::vector<TableRow> rows;
    std::map<std::pair<double, std::string>, std::size_t> index;
    std::vector<std::vector<const RunRecord*>> members;
    for (const auto& r : runs) {
        const auto key = std::make_pair(r.sigma, r.regularizer);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, rows.size()).first;
            rows.push_back({r.sigma, r.regularizer});
            members.emplace_back();
        }
        members[it->second].push_back(&r);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<double> J, its, err;
        for (const RunRecord* r : members[i]) {
            ++rows[i].runs;
            if (r->status == "failed") {
                ++rows[i].failed;
                continue;
            }
            if (r->status == "converged") ++rows[i].converged;
            J.push_back(r->report.J_history.back());
            its.push_back(r->report.iterations);
            err.push_back(r->report.error_ths);
        }
        rows[i].median_J = median(J);
        rows[i].median_iterations = median(its);
        rows[i].median_error_ths = median(err);
    }
    return rows;
}

std::string run_directory_name(const RunRecord& r)
{
    std::string reg = r.regularizer;
    std::replace(reg.begin(), reg.end(), ':', '-');
    return reg + "_sigma" + fmt(r.sigma) + "_seed" + std::to_string(r.seed);
}

void write_summary(const std::string& path, const RunRecord& r, const ExperimentConfig& cfg)
{
    std::ofstream os(path);
    if (!os) throw IoError("cannot write '" + path + "'");
    os << "status=" << r.status << '\n';
    if (!r.error.empty()) os << "error=" << r.error << '\n';
    os << "sigma=" << fmt(r.sigma) << '\n' << "seed=" << r.seed << '\n' << "regularizer=" << r.regularizer << '\n';
    if (r.status != "failed") {
        const InversionReport& rep = r.report;
        os << "n_modes=" << r.n_modes << '\n'
           << "modes_capped=" << (r.modes_capped ? "true" : "false") << '\n'
           << "iterations=" << rep.iterations << '\n'
           << "J_initial=" << fmt(rep.J_history.front()) << '\n'
           << "J_final=" << fmt(rep.J_history.back()) << '\n'
           << "threshold=" << fmt(rep.threshold) << '\n'
           << "error_ths=" << fmt(rep.error_ths) << '\n'
           << "residual_mean=" << fmt(rep.residual_mean) << '\n'
           << "residual_std=" << fmt(rep.residual_std) << '\n'
           << "snr=" << fmt(r.snr) << '\n';
        if (!rep.rank_history.empty()) os << "final_rank=" << rep.rank_history.back() << '\n';
    }
    std::istringstream cfg_lines(echo(cfg));
    std::string line;
    while (std::getline(cfg_lines, line)) os << "config." << line << '\n';
}

void emit_reconstruction(const RunRecord& r, const ExperimentConfig& cfg, const Scenario& sc,
                         const std::string& directory)
{
    const fs::path dir(directory);
    const Eigen::VectorXd& X = sc.tc.grid.nodes();
    const InversionReport& rep = r.report;

    write_columns_csv((dir / "source_profile.csv").string(),
                      {{"X", "q_exact", "q_hat", "difference"},
                       {X, r.q_exact_eval, r.q_hat_eval, r.q_hat_eval - r.q_exact_eval}});
    write_columns_csv((dir / "temperature_profile.csv").string(),
                      {{"X", "T_data", "T_model", "residual"},
                       {X, r.T_data_eval, r.T_model_eval, r.T_data_eval - r.T_model_eval}});

    const auto n = static_cast<Eigen::Index>(rep.J_history.size());
    Eigen::VectorXd it = Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
    write_columns_csv((dir / "convergence.csv").string(),
                      {{"iteration", "J"}, {it, Eigen::Map<const Eigen::VectorXd>(rep.J_history.data(), n)}});

    if (!rep.spectrum_history.empty()) {
        ColumnTable t;
        t.header = {"iteration", "rank"};
        const auto m = static_cast<Eigen::Index>(rep.spectrum_history.size());
        Eigen::VectorXd iter(m), rank(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            iter[i] = static_cast<double>(i);
            rank[i] = rep.rank_history[static_cast<std::size_t>(i)];
        }
        t.columns = {iter, rank};
        for (Eigen::Index j = 0; j < rep.spectrum_history.front().size(); ++j) {
            Eigen::VectorXd col(m);
            for (Eigen::Index i = 0; i < m; ++i) col[i] = rep.spectrum_history[static_cast<std::size_t>(i)][j];
            t.header.push_back("lambda_" + std::to_string(j + 1));
            t.columns.push_back(col);
        }
        write_columns_csv((dir / "gram_spectrum.csv").string(), t);
    }

    if (cfg.emit_fields) {
        write_field_csv((dir / "q_hat.csv").string(), {X, sc.tc.tg.times(), rep.q_hat});
        write_field_csv((dir / "residuals.csv").string(), {X, sc.tc.tg.times(), r.residual});
    }
    write_summary((dir / "summary.txt").string(), r, cfg);
}

void write_table(const std::string& path, const std::vector<TableRow>& table)
{
    std::ofstream os(path);
    if (!os) throw IoError("cannot write '" + path + "'");
    os << "sigma,regularizer,runs,failed,converged,median_J_min,median_iterations,median_error_ths\n";
    for (const auto& r : table)
        os << fmt(r.sigma) << ',' << r.regularizer << ',' << r.runs << ',' << r.failed << ',' << r.converged << ','
           << fmt(r.median_J) << ',' << fmt(r.median_iterations) << ',' << fmt(r.median_error_ths) << '\n';
}

std::string echo(const ExperimentConfig& cfg)
{
    std::ostringstream os;
    os << "test_case=" << cfg.label << '\n'
       << "source=" << cfg.test_case.source << '\n'
       << "amplitude=" << fmt(cfg.test_case.shape.amplitude) << '\n'
       << "basis=" << to_string(cfg.basis) << '\n'
       << "modes=" << (cfg.n_modes ? std::to_string(*cfg.n_modes) : std::string("auto")) << '\n'
       << "truncation_m=" << fmt(cfg.truncation.m) << '\n'
       << "truncation_eps=" << fmt(cfg.truncation.eps) << '\n'
       << "truncation_n_max=" << cfg.truncation.n_max << '\n'
       << "nx=" << cfg.nx << '\n'
       << "nt=" << cfg.nt << '\n'
       << "refine=" << cfg.refine << '\n'
       << "velocity_noise=" << fmt(cfg.velocity_noise) << '\n'
       << "eval_time=" << fmt(cfg.eval_time) << '\n'
       << "max_iterations=" << cfg.max_iterations << '\n'
       << "restart_period=" << cfg.restart_period << '\n'
       << "stopping=" << (cfg.stopping == Stopping::Kind::noise_projection ? "noise_projection" : "discrepancy")
       << '\n'
       << "initializer=" << (cfg.empirical_init ? "empirical" : "none") << '\n';
    return os.str();
}

int exit_code(const ExperimentResult& res)
{
    for (const auto& r : res.runs)
        if (r.status != "converged") return 1;
    return 0;
}

}  // namespace ihsp
