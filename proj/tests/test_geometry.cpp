#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "planar_sis/geometry.hpp"
#include "planar_sis/rng.hpp"

using namespace planar_sis;

TEST(Geometry, TorusDistanceSymmetricAndBounded) {
    TorusDomain dom{10.0};
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(0, 10);
    for (int k = 0; k < 10000; ++k) {
        Position p{u(g), u(g)}, q{u(g), u(g)};
        double d = torus_distance(p, q, dom);
        EXPECT_DOUBLE_EQ(d, torus_distance(q, p, dom));
        EXPECT_LE(d, 10.0 / std::sqrt(2.0) + 1e-12);
    }
    EXPECT_NEAR(torus_distance({0.1, 0.1}, {9.9, 9.9}, dom), std::sqrt(0.08), 1e-12);
}

TEST(Geometry, WrapMapsIntoDomain) {
    TorusDomain dom{5.0};
    for (double v : {-12.5, -5.0, -0.1, 0.0, 4.999, 5.0, 17.3}) {
        double w = dom.wrap(v);
        EXPECT_GE(w, 0.0);
        EXPECT_LT(w, 5.0);
        EXPECT_NEAR(std::remainder(w - v, 5.0), 0.0, 1e-12);
    }
}

TEST(Geometry, NeighborsMatchBruteForce) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        double L = 6.0 + static_cast<double>(seed % 5), a = 0.7 + 0.1 * static_cast<double>(seed % 4);
        TorusDomain dom{L};
        auto pts = sample_poisson(2.0, dom, seed);
        CellIndex idx = build_cell_index(pts, a, dom);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            std::set<int> brute;
            for (std::size_t j = 0; j < pts.size(); ++j)
                if (j != i && torus_distance(pts[i], pts[j], dom) <= a) brute.insert(static_cast<int>(j));
            auto got = neighbors_within(idx, pts[i], a, static_cast<int>(i));
            EXPECT_EQ(std::set<int>(got.begin(), got.end()), brute);
        }
    }
}

TEST(Geometry, IndexFollowsMoves) {
    TorusDomain dom{8.0};
    auto pts = sample_poisson(1.5, dom, 9);
    CellIndex idx = build_cell_index(pts, 1.0, dom);
    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> u(0, 8);
    for (int k = 0; k < 200; ++k) {
        auto i = static_cast<int>(g() % pts.size());
        pts[static_cast<std::size_t>(i)] = {u(g), u(g)};
        idx.move(i, pts[static_cast<std::size_t>(i)]);
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::size_t brute = 0;
        for (std::size_t j = 0; j < pts.size(); ++j) brute += j != i && torus_distance(pts[i], pts[j], dom) <= 1.0;
        EXPECT_EQ(idx.neighbors_within(pts[i], 1.0, static_cast<int>(i)).size(), brute);
    }
}

// Counts in disjoint cells of a Poisson sample have variance/mean near 1.
TEST(Geometry, PoissonDispersion) {
    TorusDomain dom{60.0};
    auto pts = sample_poisson(1.0, dom, 42);
    const int m = 30;
    std::vector<double> counts(m * m, 0.0);
    for (auto p : pts) counts[static_cast<std::size_t>(static_cast<int>(p.x / 2) * m + static_cast<int>(p.y / 2))] += 1;
    double mean = 0, var = 0;
    for (double c : counts) mean += c;
    mean /= counts.size();
    for (double c : counts) var += (c - mean) * (c - mean);
    var /= counts.size() - 1;
    double n = static_cast<double>(counts.size());
    // standard error of the dispersion index is about sqrt(2/(n-1))
    EXPECT_NEAR(var / mean, 1.0, 3 * std::sqrt(2 / (n - 1)));
    EXPECT_NEAR(static_cast<double>(pts.size()), 3600.0, 4 * 60.0);
}

TEST(Geometry, DeriveSeedIsStableAndSpreads) {
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
    EXPECT_NE(derive_seed(7, 3), derive_seed(7, 4));
    EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
    EXPECT_EQ(sample_poisson(1.0, TorusDomain{10}, 5).size(), sample_poisson(1.0, TorusDomain{10}, 5).size());
}

TEST(Geometry, ValidationRejectsBadInput) {
    EXPECT_THROW((ModelParams{-1, 1, 0, 1, 1}.validate()), ConfigError);
    EXPECT_THROW((ModelParams{1, 1, 0, 0, 1}.validate()), ConfigError);
    EXPECT_THROW((ModelParams{1, 1, 0, 1, 0}.validate()), ConfigError);
    EXPECT_THROW(TorusDomain{1.0}.validate(1.0), ConfigError);
    EXPECT_NO_THROW(TorusDomain{10.0}.validate(1.0));
    auto p = ModelParams::from_mu(5.0, 1, 4.8, 0);
    EXPECT_NEAR(p.mu(), 5.0, 1e-12);
}
