#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "planar_sis/functional_solver.hpp"
#include "planar_sis/polynomial_solver.hpp"

using namespace planar_sis;

namespace {

ModelParams point(double beta, double gamma) { return ModelParams::from_mu(4 * std::numbers::pi, 1, beta, gamma, 2.0); }

}  // namespace

TEST(Functional, ConvergedSolutionInvariants) {
    auto m = point(8, 1);
    auto r = solve_motion(closure_by_name("m2bi"), m);
    ASSERT_TRUE(r.converged);
    EXPECT_FALSE(r.degenerate);
    const auto& t = r.pcf;
    double p = r.p;
    for (std::size_t i = 0; i < t.xi_psi_phi.size(); ++i) {
        double s = (1 - p) * (1 - p) * t.xi_psi_psi.values[i] + p * p * t.xi_phi_phi.values[i] +
                   2 * p * (1 - p) * t.xi_psi_phi.values[i];
        EXPECT_NEAR(s, 1.0, 1e-12);
        if (t.xi_psi_phi.node(i) > 4 * m.a) {
            EXPECT_LT(std::fabs(t.xi_psi_phi.values[i] - 1), 0.05);
            EXPECT_LT(std::fabs(t.xi_phi_phi.values[i] - 1), 0.05);
            EXPECT_LT(std::fabs(t.xi_psi_psi.values[i] - 1), 0.05);
        }
    }
    EXPECT_LT(r.first_moment_residual, 1e-6);
}

TEST(Functional, FastMotionIsMeanField) {
    auto m = point(8, 1e5);
    auto r = solve_motion(closure_by_name("b1i"), m);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.p, mean_field_p(m), 2e-3);
}

TEST(Functional, GridRefinement) {
    auto m = point(8, 5);
    GridConfig fine;
    fine.h_over_a /= 2;
    auto a = solve_motion(closure_by_name("m2bi"), m), b = solve_motion(closure_by_name("m2bi"), m, fine);
    ASSERT_TRUE(a.converged && b.converged);
    EXPECT_LT(std::fabs(a.p - b.p), 1e-3);
}

TEST(Functional, ExtinctAboveThreshold) {
    auto r = solve_motion(closure_by_name("m2bi"), point(14, 1));
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.p, 0.0);
}

TEST(Functional, UnitClusterMatchesStaticMotion) {
    auto m = point(8, 0);
    auto a = solve_motion(closure_by_name("b1i"), m);
    auto b = solve_no_motion(closure_by_name("b1i"), m, RadialFunction::constant(1.0), 1.0);
    EXPECT_NEAR(a.p, b.p, 1e-12);
    EXPECT_FALSE(b.below_percolation);
}

TEST(Functional, NoMotionBelowPercolationIsDegenerate) {
    auto r = solve_no_motion(closure_by_name("b1i"), ModelParams::from_mu(0.8, 1, 0.1, 0));
    EXPECT_TRUE(r.degenerate);
    EXPECT_TRUE(r.below_percolation);
}
