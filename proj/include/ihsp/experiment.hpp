#pragma once

#include "ihsp/config.hpp"
#include "ihsp/inversion_engine.hpp"
#include "ihsp/reference_solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ihsp {

struct TestCaseSpec {
    std::string source = "tc1";  // tc1 (piecewise linear) or tc2 (Gaussian, time varying)
    double length = 1.5;
    double t_final = 40.0;
    MaterialParams mat{};
    TestCase1Shape shape{};
    double phi1_amplitude = -0.005, phi1_rate = 0.1742;
    double phi2_amplitude = 0.005, phi2_rate = 0.1249;
    double velocity_scale = 0.1;  // v = scale c (t/t_f) tanh(3 (t/t_f)(X - L/2))
};

TestCase build_test_case(const TestCaseSpec& spec, int nx, int nt);

struct ExperimentConfig {
    std::string label = "tc1";
    TestCaseSpec test_case{};
    BasisFamily basis = BasisFamily::fourier;
    std::optional<int> n_modes;  // empty: select from data
    TruncationConfig truncation{};
    std::vector<double> sigmas{0.3};
    std::vector<std::uint64_t> seeds{1};
    double velocity_noise = 0.02;
    std::vector<Regularizer> regularizers{NoRegularizer{}};
    int nx = 400;
    int nt = 400;
    int refine = 4;
    double eval_time = 20.0;
    int max_iterations = 3000;
    int restart_period = 50;
    Stopping::Kind stopping = Stopping::Kind::noise_projection;
    std::optional<double> tau;
    bool empirical_init = false;
    int empirical_modes = 3;
    bool emit_fields = true;
    std::string output_dir;

    void validate() const;
};

// Reads [experiment], [noise], [grid], [truncation], [cgm] and [test_case].
ExperimentConfig load_experiment(const Config& cfg);

struct RunRecord {
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string regularizer;
    std::string status = "failed";
    std::string error;
    int n_modes = 0;
    bool modes_capped = false;
    double snr = 0.0;
    InversionReport report;
    Eigen::VectorXd q_exact_eval, q_hat_eval;
    Eigen::VectorXd T_data_eval, T_model_eval;
    Field residual;
};

struct TableRow {
    double sigma = 0.0;
    std::string regularizer;
    int runs = 0;
    int failed = 0;
    int converged = 0;
    double median_J = 0.0;
    double median_iterations = 0.0;
    double median_error_ths = 0.0;
};

struct ExperimentResult {
    std::vector<RunRecord> runs;
    std::vector<TableRow> table;
};

// Shared noiseless inputs of one experiment.
struct Scenario {
    TestCase tc;
    Field T_clean;
    Field velocity;
    Field source;
    BoundaryFluxes fluxes;
};

Scenario prepare_scenario(const ExperimentConfig& cfg);

RunRecord run_cell(const ExperimentConfig& cfg, const Scenario& sc, double sigma, std::uint64_t seed,
                   const Regularizer& reg);

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1);

std::vector<TableRow> aggregate(const std::vector<RunRecord>& runs);

std::string run_directory_name(const RunRecord& r);

// Writes (X, q_exact, q_hat, q_hat - q_exact), (X, T_data, T_model, residual) at the
// evaluation time, the (iteration, J) curve, the summary and, optionally, full fields.
void emit_reconstruction(const RunRecord& r, const ExperimentConfig& cfg, const Scenario& sc,
                         const std::string& directory);

void write_table(const std::string& path, const std::vector<TableRow>& table);
void write_summary(const std::string& path, const RunRecord& r, const ExperimentConfig& cfg);

std::string echo(const ExperimentConfig& cfg);

// 0 when every run converged, 1 otherwise.
int exit_code(const ExperimentResult& res);

}  // namespace ihsp
