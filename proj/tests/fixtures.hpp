// Shared synthetic data for the test binaries; built once per process.
#pragma once

#include "ihsp/reference_solver.hpp"

namespace fixtures {

struct Case {
    ihsp::TestCase tc;
    ihsp::Field T;
};

inline const Case& tc1()
{
    static const Case c = [] {
        ihsp::TestCase tc = ihsp::make_test_case_1();
        ihsp::Field T = ihsp::solve_reference(tc, 4);
        return Case{std::move(tc), std::move(T)};
    }();
    return c;
}

inline const Case& tc2()
{
    static const Case c = [] {
        ihsp::TestCase tc = ihsp::make_test_case_2();
        ihsp::Field T = ihsp::solve_reference(tc, 4);
        return Case{std::move(tc), std::move(T)};
    }();
    return c;
}

inline double rel_l2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref)
{
    return (a - ref).norm() / ref.norm();
}

}  // namespace fixtures
