#include <cmath>

#include <gtest/gtest.h>

#include "planar_sis/closures.hpp"

using namespace planar_sis;

TEST(Closures, RegistryIsExactCatalog) {
    std::vector<std::string> want = {"b0i", "b1i", "b0.5i", "binfi", "g1", "a1", "b1g1", "m2bi", "m3bi", "minfbi", "minfbg1"};
    EXPECT_EQ(registered_closures(), want);
    for (const auto& n : want) {
        auto s = closure_by_name(n);
        EXPECT_EQ(s.name, n);
        EXPECT_NO_THROW(s.validate());
    }
    EXPECT_THROW(closure_by_name("b2x"), UnknownClosure);
}

TEST(Closures, IndependenceGivesLambdaP) {
    PcfTriple one = PcfTriple::constant(1, 1, 1);
    for (const auto& n : registered_closures()) {
        auto s = closure_by_name(n);
        for (double r : {0.0, 0.3, 1.7})
            for (Offset x : {Offset{0.2, 0.1}, Offset{-0.5, 0.4}, Offset{1.0, 0.0}}) {
                EXPECT_NEAR(eval_mu_psipsi(s, one, 0.37, r, x), 0.37, 1e-12) << n;
                EXPECT_NEAR(eval_mu_psiphi(s, one, 0.37, r, x), 0.37, 1e-12) << n;
            }
    }
}

TEST(Closures, BayesIndependentExponents) {
    for (auto [k, l] : {std::pair{1.0, 1.0}, std::pair{2.0, 3.0}, std::pair{1.0, 0.5}, std::pair{0.0, 1.0}}) {
        double d = k + 2 * l;
        auto pp = bayes_independent_exponents(k, l, Conditioning::PsiPsi);
        EXPECT_DOUBLE_EQ(pp[0], (k + l) / d);
        EXPECT_DOUBLE_EQ(pp[1], (k + l) / d);
        EXPECT_DOUBLE_EQ(pp[2], -k / d);
        auto pf = bayes_independent_exponents(k, l, Conditioning::PsiPhi);
        EXPECT_DOUBLE_EQ(pf[0], (k + l) / d);
        EXPECT_DOUBLE_EQ(pf[1], 2 * l / d);
        EXPECT_DOUBLE_EQ(pf[2], -l / d);
    }
    // infinite k or l reduce to the limiting exponents
    auto inf = std::numeric_limits<double>::infinity();
    auto b0 = bayes_independent_exponents(inf, 1, Conditioning::PsiPsi);
    EXPECT_DOUBLE_EQ(b0[0], 1.0);
    EXPECT_DOUBLE_EQ(b0[2], -1.0);
    EXPECT_THROW(bayes_independent_exponents(0, 0, Conditioning::PsiPsi), ConfigError);
}

// b1i on constant PCFs: xi_psiphi^(2/3) xi_psiphi^(2/3) xi_psipsi^(-1/3) under psi,psi.
TEST(Closures, B1iProductForm) {
    auto s = closure_by_name("b1i");
    PcfTriple pcf = PcfTriple::constant(0.9, 1.4, 0.8);
    EXPECT_NEAR(eval_mu_psipsi(s, pcf, 1.0, 0.5, {0.3, 0.2}), std::pow(0.9, 4.0 / 3) * std::pow(0.8, -1.0 / 3), 1e-12);
    EXPECT_NEAR(eval_mu_psiphi(s, pcf, 1.0, 0.5, {0.3, 0.2}),
                std::pow(0.9, 2.0 / 3) * std::pow(1.4, 2.0 / 3) * std::pow(0.9, -1.0 / 3), 1e-12);
}

TEST(Closures, MixtureIsAffineInComponents) {
    PcfTriple pcf = PcfTriple::constant(0.85, 1.3, 0.95);
    Offset x{0.4, -0.3};
    auto b1i = closure_by_name("b1i"), b0i = closure_by_name("b0i"), binfi = closure_by_name("binfi");
    auto m2bi = closure_by_name("m2bi"), m3bi = closure_by_name("m3bi");
    for (Conditioning c : {Conditioning::PsiPsi, Conditioning::PsiPhi}) {
        double m = eval_mu(m2bi, c, pcf, 1, 0.7, x);
        EXPECT_NEAR(m, 0.5 * eval_mu(b0i, c, pcf, 1, 0.7, x) + 0.5 * eval_mu(binfi, c, pcf, 1, 0.7, x), 1e-12);
        double m3 = eval_mu(m3bi, c, pcf, 1, 0.7, x);
        EXPECT_NEAR(m3, (eval_mu(b0i, c, pcf, 1, 0.7, x) + eval_mu(b1i, c, pcf, 1, 0.7, x) + eval_mu(binfi, c, pcf, 1, 0.7, x)) / 3,
                    1e-12);
    }
}

// The continuous mixture integrates its exponent family over eta; compare
// with an independent Simpson rule.
TEST(Closures, IntegralMixtureMatchesSimpson) {
    PcfTriple pcf = PcfTriple::constant(0.8, 1.5, 0.9);
    auto s = closure_by_name("minfbi");
    for (Conditioning c : {Conditioning::PsiPsi, Conditioning::PsiPhi}) {
        double vx = 0.8, vxr = c == Conditioning::PsiPsi ? 0.8 : 1.5, vr = c == Conditioning::PsiPsi ? 0.9 : 0.8;
        const int n = 2000;
        double sum = 0;
        for (int i = 0; i <= n; ++i) {
            double eta = static_cast<double>(i) / n;
            auto e = integral_mixture_exponents(IntegralFamily::MinfBI, eta, c);
            double f = std::pow(vx, e[0]) * std::pow(vxr, e[1]) * std::pow(vr, e[2]);
            sum += f * (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2));
        }
        sum /= 3.0 * n;
        EXPECT_NEAR(eval_mu(s, c, pcf, 1, 0.5, {0.1, 0.1}), sum, 1e-10);
    }
}

TEST(Closures, FloorGuardsNegativeExponents) {
    auto s = closure_by_name("b1i");
    PcfTriple pcf = PcfTriple::constant(1, 1, 0);
    bool singular = false;
    double v = eval_mu_psipsi(s, pcf, 1, 0.5, {0.1, 0}, &singular);
    EXPECT_TRUE(singular);
    EXPECT_TRUE(std::isfinite(v));
}
