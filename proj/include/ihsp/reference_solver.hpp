// Synthetic measurements: test-case definitions, an implicit finite-volume solver
// on a refined grid, and seeded Gaussian noise.
#pragma once

#include "ihsp/forward_model.hpp"
#include "ihsp/grid.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ihsp {

using SpaceTimeFn = std::function<double(double X, double t)>;
using TimeFn = std::function<double(double t)>;

struct FluxLaw {
    TimeFn phi;
    TimeFn dphi;  // may be empty; sampled derivatives are then differenced

    static FluxLaw exponential(double amplitude, double rate);
    static FluxLaw constant(double value);
};

struct TestCase {
    std::string name;
    Grid1D grid;
    TimeGrid tg;
    MaterialParams mat;
    SpaceTimeFn velocity_fn;
    SpaceTimeFn source_fn;
    FluxLaw left, right;
    double T0 = 0.0;

    Field velocity() const;
    Field true_source() const;
    BoundaryFluxes fluxes() const;
};

struct NoiseModel {
    double sigma = 0.0;
    std::uint64_t seed = 0;
    double velocity_noise_fraction = 0.02;
};

// Independent random streams derived from one seed.
enum class NoiseStream : std::uint32_t { temperature = 1, velocity = 2, recording = 3 };

double velocity_eq42(double X, double t, const MaterialParams& mat, double L, double t_final);
double source_testcase2(double X, double t, double L);
double source_testcase1(const std::vector<double>& breakpoints, const std::vector<double>& values, double X);

struct TestCase1Shape {
    std::vector<double> breakpoints{0.0, 0.6, 0.8, 1.5};
    std::vector<double> values{0.0, 1.0, 0.2, 0.2};
    double amplitude = 2.65;
};

TestCase make_test_case_1(int nx = 400, int nt = 400, const TestCase1Shape& shape = {});
TestCase make_test_case_2(int nx = 400, int nt = 400);

// Vertex-centred finite volumes on a grid `refine` times finer in space and time,
// implicit Euler, central diffusion, first-order upwind advection, ghost-node fluxes.
Field solve_reference(const TestCase& tc, int refine = 4);

Field add_noise(const Field& field, const NoiseModel& nm, NoiseStream stream = NoiseStream::temperature);
// Additive velocity noise of std velocity_noise_fraction * max|v|.
Field perturb_velocity(const Field& velocity, const NoiseModel& nm);
// A fresh noise record of the given shape, independent of the data noise.
Field noise_recording(Eigen::Index rows, Eigen::Index cols, const NoiseModel& nm);

double snr(const Eigen::VectorXd& profile, double sigma);

}  // namespace ihsp
