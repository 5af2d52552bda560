#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "planar_sis/statistics.hpp"

using namespace planar_sis;

namespace {

// Poisson configurations with independent Bernoulli(p) infection labels.
std::vector<Snapshot> thinned(double lambda, const TorusDomain& dom, double p, int n, std::uint64_t seed) {
    std::vector<Snapshot> out;
    for (int s = 0; s < n; ++s) {
        Engine g = make_engine(seed, static_cast<std::uint64_t>(s));
        Snapshot snap;
        snap.t = s;
        snap.pos = sample_poisson(lambda, dom, g);
        std::bernoulli_distribution coin(p);
        for (std::size_t i = 0; i < snap.pos.size(); ++i) snap.state.push_back(coin(g) ? State::Infected : State::Susceptible);
        out.push_back(std::move(snap));
    }
    return out;
}

double max_abs(const std::vector<double>& v, std::size_t upto) {
    double m = 0;
    for (std::size_t i = 0; i < std::min(upto, v.size()); ++i) m = std::max(m, std::fabs(v[i]));
    return m;
}

}  // namespace

TEST(Pcf, IndependentThinningGivesOneWithinThreeSigma) {
    ModelParams prm{1, 1, 0, 1, 1};
    TorusDomain dom{30};
    auto snaps = thinned(1.0, dom, 0.4, 40, 17);
    auto est = estimate_pcf(snaps, prm, dom, 0.25, 3.0);
    ASSERT_EQ(est.bins(), 12u);
    for (std::size_t b = 0; b < est.bins(); ++b) {
        // pair counts are close to Poisson, so xi has standard error 1/sqrt(expected)
        EXPECT_NEAR(est.xi_psi_phi[b], 1.0, 3 / std::sqrt(est.e_psi_phi[b])) << "bin " << b;
        EXPECT_NEAR(est.xi_phi_phi[b], 1.0, 3 / std::sqrt(est.e_phi_phi[b])) << "bin " << b;
        EXPECT_NEAR(est.xi_psi_psi[b], 1.0, 3 / std::sqrt(est.e_psi_psi[b])) << "bin " << b;
    }
    EXPECT_NEAR(w_plateau(est, 1.0), 1.0, 0.03);
}

TEST(Pcf, SuperpositionResidualShrinksWithSnapshots) {
    ModelParams prm{1, 1, 0, 1, 1};
    TorusDomain dom{20};
    auto few = thinned(1.0, dom, 0.3, 4, 5), many = thinned(1.0, dom, 0.3, 160, 5);
    auto pbar = [](const std::vector<Snapshot>& s) {
        double i = 0, n = 0;
        for (const auto& x : s) {
            i += static_cast<double>(x.infected());
            n += static_cast<double>(x.state.size());
        }
        return i / n;
    };
    double r_few = max_abs(check_superposition(estimate_pcf(few, prm, dom, 0.25, 3.0), pbar(few)), 12);
    double r_many = max_abs(check_superposition(estimate_pcf(many, prm, dom, 0.25, 3.0), pbar(many)), 12);
    EXPECT_LT(r_many, r_few);
    EXPECT_LT(r_many, 0.05);
}

TEST(Pcf, EmptySnapshotsFlagBins) {
    ModelParams prm{1, 1, 0, 1, 1};
    TorusDomain dom{10};
    Snapshot s;
    s.pos = {{1, 1}};
    s.state = {State::Infected};
    auto est = estimate_pcf({s}, prm, dom, 0.5, 2.0);
    for (std::size_t b = 0; b < est.bins(); ++b) EXPECT_TRUE(est.flagged(b));
    EXPECT_THROW(estimate_pcf({s}, prm, dom, 0.0), ConfigError);
}

TEST(Mtta, IntervalShrinksLikeInverseRoot) {
    std::mt19937_64 g(12);
    std::exponential_distribution<double> e(1.0);
    auto width = [&](std::size_t n) {
        double w = 0;
        for (int k = 0; k < 200; ++k) {
            std::vector<double> s(n);
            for (auto& x : s) x = e(g);
            auto r = summarize_mtta(0, 0, s, 0);
            w += r.ci95_high - r.ci95_low;
        }
        return w / 200;
    };
    double w100 = width(100), w400 = width(400);
    EXPECT_NEAR(w100 / w400, 2.0, 0.1);
}

TEST(Mtta, CoverageOfExponentialMean) {
    std::mt19937_64 g(13);
    std::exponential_distribution<double> e(0.5);
    int cover = 0;
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> s(50);
        for (auto& x : s) x = e(g);
        auto r = summarize_mtta(0, 0, s, 0);
        cover += r.ci95_low <= 2.0 && 2.0 <= r.ci95_high;
    }
    EXPECT_NEAR(cover / 1000.0, 0.95, 0.03);
}

TEST(Mtta, CurveIsIndependentOfJobCount) {
    MttaCell c;
    c.parameter_value = 1;
    c.config.params = ModelParams::from_mu(3.0, 1, 2.0, 1);
    c.config.dom = TorusDomain{8};
    auto a = mtta_curve({c}, 6, 3, 1), b = mtta_curve({c}, 6, 3, 4);
    EXPECT_EQ(a[0].samples, b[0].samples);
    // replication j does not depend on the replication count
    auto more = mtta_curve({c}, 9, 3, 2);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(a[0].samples[j], more[0].samples[j]);
}

// Alternating renewal process: infected for Exp(beta), healthy for Exp(k).
// The infected fraction is p = k/(k+beta) and the healthy mean is 1/k.
TEST(Little, RenewalOracle) {
    double beta = 2.0, k = 0.5;
    std::mt19937_64 g(31);
    std::vector<Event> ev;
    for (int id = 0; id < 50; ++id) {
        double t = 0;
        for (int c = 0; c < 400; ++c) {
            t += std::exponential_distribution<double>(beta)(g);
            ev.push_back({EventType::Recovery, id, t});
            t += std::exponential_distribution<double>(k)(g);
            ev.push_back({EventType::Infection, id, t});
        }
    }
    std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    auto r = little_check(ev, k / (k + beta), beta, 0.0);
    ASSERT_TRUE(r.available);
    EXPECT_NEAR(r.nu_predicted, 1 / k, 1e-12);
    EXPECT_NEAR(r.ratio, 1.0, 0.03);
    EXPECT_FALSE(little_check(ev, 0.0, beta, 0.0).available);
}
