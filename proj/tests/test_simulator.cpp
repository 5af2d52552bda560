#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "planar_sis/simulator.hpp"
#include "planar_sis/statistics.hpp"

using namespace planar_sis;

namespace {

SimConfig base(double alpha, double beta, double gamma, double L, std::uint64_t seed) {
    SimConfig c;
    c.params = ModelParams{alpha, beta, gamma, 1.0, 1.0};
    c.dom = TorusDomain{L};
    c.seed = seed;
    return c;
}

}  // namespace

TEST(Fenwick, FindInvertsPrefixSums) {
    std::mt19937_64 g(2);
    std::vector<std::int64_t> w(257);
    Fenwick f(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = static_cast<std::int64_t>(g() % 5);
        f.add(i, w[i]);
    }
    std::int64_t total = std::accumulate(w.begin(), w.end(), std::int64_t{0});
    ASSERT_EQ(f.total(), total);
    for (std::int64_t u = 0; u < total; ++u) {
        std::size_t lin = 0;
        std::int64_t acc = 0;
        while (acc + w[lin] <= u) acc += w[lin++];
        EXPECT_EQ(f.find(u), lin);
    }
}

TEST(Simulator, RateAuditExactOverMillionEvents) {
    SimConfig cfg = base(1.0, 0.8, 0.5, 12.0, 11);
    Simulator sim = Simulator::from_config(cfg);
    std::size_t n = sim.size();
    for (int k = 1; k <= 1'000'000 && !sim.absorbed(); ++k) {
        sim.step();
        ASSERT_EQ(sim.size(), n);
        if (k % 50'000 == 0) {
            auto r = sim.audit();
            ASSERT_TRUE(r.ok) << "after " << k << " events: " << r.count_mismatches << " count mismatches";
        }
    }
    EXPECT_TRUE(sim.audit().ok);
    EXPECT_GE(sim.counts().total(), 1'000'000u);
}

TEST(Simulator, SameSeedSamePath) {
    SimConfig cfg = base(1.0, 1.0, 1.0, 10.0, 5);
    cfg.t_max = 20;
    auto a = run(cfg), b = run(cfg);
    EXPECT_EQ(a.summary.p_mean, b.summary.p_mean);
    EXPECT_EQ(a.summary.event_counts.total(), b.summary.event_counts.total());
}

// One infected particle and nothing else: absorption time is Exp(beta).
TEST(Simulator, SingleParticleAbsorptionMean) {
    double beta = 2.0;
    const int n = 10000;
    std::vector<double> t(n);
    for (int s = 0; s < n; ++s) {
        Simulator sim(ModelParams{1, beta, 1, 1, 1}, TorusDomain{10}, {{5, 5}}, {State::Infected},
                      derive_seed(99, static_cast<std::uint64_t>(s)));
        while (!sim.absorbed()) sim.step();
        t[static_cast<std::size_t>(s)] = sim.time();
    }
    auto r = summarize_mtta(beta, 10, t, 0);
    EXPECT_NEAR(r.mean, 1 / beta, 3 * (1 / beta) / std::sqrt(n));
}

TEST(Simulator, BetaZeroNeverRecovers) {
    SimConfig cfg = base(1.0, 0.0, 1.0, 8.0, 3);
    cfg.t_max = 5;
    auto r = run(cfg);
    EXPECT_EQ(r.summary.event_counts.recovery, 0u);
    EXPECT_DOUBLE_EQ(r.summary.p_mean, 1.0);
}

TEST(Simulator, ExtinctionIsCensoredAtCap) {
    SimConfig cfg = base(5.0, 0.01, 0.0, 10.0, 4);
    cfg.extinction_cap = 3.0;
    auto r = run_until_extinction(cfg);
    EXPECT_TRUE(r.censored);
    EXPECT_DOUBLE_EQ(r.time, 3.0);
}

// With no infection and no recovery, jumps keep the configuration Poisson:
// cell-count dispersion stays near 1.
TEST(Simulator, JumpsPreservePoissonConfiguration) {
    ModelParams prm{1e-9, 0, 1, 1, 1};
    TorusDomain dom{40};
    auto pts = sample_poisson(1.0, dom, 8);
    std::vector<State> st(pts.size(), State::Susceptible);
    Simulator sim(prm, dom, pts, st, 8);
    for (std::size_t k = 0; k < 20 * pts.size(); ++k) sim.step();
    const int m = 20;
    std::vector<double> c(m * m, 0);
    for (const auto& p : sim.particles())
        c[static_cast<std::size_t>(static_cast<int>(p.pos.x / 2) * m + static_cast<int>(p.pos.y / 2))] += 1;
    double mean = std::accumulate(c.begin(), c.end(), 0.0) / c.size(), var = 0;
    for (double x : c) var += (x - mean) * (x - mean);
    var /= c.size() - 1;
    EXPECT_NEAR(var / mean, 1.0, 3 * std::sqrt(2.0 / (c.size() - 1)));
}

TEST(Simulator, CoupledCopiesStayOrdered) {
    ModelParams prm{1.0, 0.6, 0.5, 1.0, 1.0};
    TorusDomain dom{15};
    auto pts = sample_poisson(1.0, dom, 21);
    std::mt19937_64 g(4);
    std::vector<State> small(pts.size(), State::Susceptible), big(pts.size(), State::Susceptible);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double u = std::uniform_real_distribution<double>()(g);
        if (u < 0.5) big[i] = State::Infected;
        if (u < 0.2) small[i] = State::Infected;
    }
    CoupledSimulator cs(prm, dom, pts, {small, big}, 77);
    for (int k = 0; k < 200000; ++k) {
        ASSERT_TRUE(cs.step());
        if (k % 1000 != 0) continue;
        for (std::size_t i = 0; i < pts.size(); ++i)
            ASSERT_FALSE(cs.copy(0)[i] == State::Infected && cs.copy(1)[i] == State::Susceptible);
    }
}

TEST(Simulator, RejectsBadConfig) {
    SimConfig cfg = base(1, 1, 0, 1.5, 1);
    EXPECT_THROW(run(cfg), ConfigError);
    cfg = base(1, 1, 0, 10, 1);
    cfg.t_max = 0;
    EXPECT_THROW(run(cfg), ConfigError);
}
