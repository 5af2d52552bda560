#include <cmath>

#include <gtest/gtest.h>

#include "planar_sis/phase_diagram.hpp"

using namespace planar_sis;

namespace {

// gamma_c of m2bi solves gamma^2 - beta(2 alpha - 3d)/(4d) gamma + beta^2/8 = 0.
double m2bi_quad(double mu, double beta, double alpha, double g) {
    double d = alpha * mu - beta;
    return g * g - beta * (2 * alpha - 3 * d) / (4 * d) * g + beta * beta / 8;
}

double b1i_quad(double mu, double beta, double alpha, double g) {
    double rho = std::pow(alpha * mu / beta, 2.0 / 3), d = alpha * mu - beta;
    double bc = 2 * beta * d + beta * beta * (rho - 1) - beta * alpha;
    return 2 * d * g * g + bc * g + beta * beta * beta * (rho - 1);
}

}  // namespace

TEST(Phase, M2biGammaCAreQuadraticRoots) {
    for (double b : {4.7, 4.8, 4.9, 4.99}) {
        auto c = m2bi_criticals(5, b, 1);
        ASSERT_TRUE(c.gamma_c);
        EXPECT_LE(c.gamma_c->minus, c.gamma_c->plus);
        for (double g : {c.gamma_c->minus, c.gamma_c->plus})
            EXPECT_LT(std::fabs(m2bi_quad(5, b, 1, g)) / (b * b), 1e-10);
    }
}

TEST(Phase, B1iGammaCAreQuadraticRoots) {
    for (double b : {4.8, 4.9, 4.95}) {
        auto c = b1i_criticals(5, b, 1);
        ASSERT_TRUE(c.gamma_c);
        EXPECT_LE(c.gamma_c->minus, c.gamma_c->plus);
        for (double g : {c.gamma_c->minus, c.gamma_c->plus})
            EXPECT_LT(std::fabs(b1i_quad(5, b, 1, g)) / (b * b * b), 1e-10);
    }
}

TEST(Phase, BranchesMeetAtBeta0) {
    auto c = m2bi_criticals(5, 4.8, 1);
    auto at = m2bi_criticals(5, *c.beta0, 1);
    ASSERT_TRUE(at.gamma_c);
    EXPECT_NEAR(at.gamma_c->minus, *c.gamma0, 1e-8);
    EXPECT_NEAR(at.gamma_c->plus, *c.gamma0, 1e-8);

    auto cb = b1i_criticals(5, 4.8, 1);
    ASSERT_TRUE(cb.beta0 && cb.gamma0);
    // the discriminant changes sign at beta0
    EXPECT_FALSE(b1i_criticals(5, *cb.beta0 - 1e-6, 1).gamma_c.has_value());
    auto above = b1i_criticals(5, *cb.beta0 + 1e-9, 1);
    ASSERT_TRUE(above.gamma_c);
    EXPECT_NEAR(0.5 * (above.gamma_c->minus + above.gamma_c->plus), *cb.gamma0, 1e-6);
    EXPECT_NEAR(above.gamma_c->plus - above.gamma_c->minus, 0.0, 1e-2);
}

TEST(Phase, BetaCInvertsGammaCAboveGamma0) {
    for (auto s : {CriticalSpec::M2BI, CriticalSpec::B1I}) {
        auto c = criticals(s, 5, 4.8, 1);
        for (double dg : {0.01, 1.0, 10.0}) {
            double g = *c.gamma0 + dg;
            auto bc = beta_c(s, 5, g, 1);
            ASSERT_FALSE(bc.unresolved);
            EXPECT_FALSE(bc.clamped);
            auto back = criticals(s, 5, bc.value, 1).gamma_c;
            ASSERT_TRUE(back);
            EXPECT_NEAR(back->plus, g, 1e-6 * std::max(1.0, g));
        }
    }
}

TEST(Phase, BetaCClampedBelowGamma0) {
    auto bc = beta_c(CriticalSpec::M2BI, 5, 0.5, 1);
    EXPECT_TRUE(bc.clamped);
    EXPECT_NEAR(bc.value, 5 - m2bi_mu0(1), 1e-12);
    EXPECT_FALSE(std::isnan(bc.raw));
    for (double r : bc.roots) {
        double g = 0.5, mu = 5;
        double f = r * r * r + r * r * (6 * g - mu) + 2 * r * g * (2 - 3 * mu + 4 * g) - 8 * mu * g * g;
        EXPECT_NEAR(f, 0.0, 1e-9);
    }
}

TEST(Phase, RegionPartition) {
    for (auto s : {CriticalSpec::M2BI, CriticalSpec::B1I})
        for (double mu = 0.1; mu < 8; mu += 0.37)
            for (double b = 0.05; b < 9; b += 0.29) {
                auto pt = classify(s, mu, b, 1);
                bool safe = pt.region == Region::Safe, umi = pt.region == Region::UMI, ums = pt.region == Region::UMS;
                EXPECT_EQ(safe + umi + ums, 1);
                EXPECT_EQ(safe, b >= mu);
                EXPECT_EQ(ums, pt.gamma_minus.has_value());
                EXPECT_EQ(pt.boolean_supercritical, mu > boolean_mu_star);
            }
    EXPECT_THROW(critical_spec("g1"), ConfigError);
    EXPECT_THROW(classify(CriticalSpec::M2BI, -1, 1, 1), ConfigError);
}
