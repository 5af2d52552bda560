#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/pending/disjoint_sets.hpp>

#include "planar_sis/geometry.hpp"
#include "planar_sis/radial.hpp"

namespace planar_sis {

// Mean degree above which the Boolean model percolates.
inline constexpr double boolean_mu_star = 4.512;

// Nontrivial root of q = 1 - exp(-mu q); zero at or below mu = 1.
inline double lambert_q(double mu_tilde) {
    if (!(mu_tilde > 1)) return 0.0;
    auto h = [&](double q) { return q - 1 + std::exp(-mu_tilde * q); };
    // h is convex with h(1) > 0, so Newton from q = 1 decreases monotonically
    double q = 1.0;
    for (int it = 0; it < 200; ++it) {
        double d = 1 - mu_tilde * std::exp(-mu_tilde * q);
        double step = h(q) / d;
        q -= step;
        if (std::fabs(step) < 1e-16) break;
    }
    // slow near mu = 1; finish by bisection on a sign-changing bracket
    if (std::fabs(h(q)) > 1e-14) {
        double hi = 1.0, lo = q;
        while (h(lo) > 0 && lo > 1e-300) lo *= 0.5;
        for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
            double mid = 0.5 * (lo + hi);
            (h(mid) > 0 ? hi : lo) = mid;
        }
        q = 0.5 * (lo + hi);
    }
    return q;
}

struct PiRecursionConfig {
    double h_over_a = 1.0 / 20;
    double rmax_over_a = 8.0;
    QuadratureConfig quad;
    double tol = 1e-8;
    int max_iter = 10000;
};

struct PiRecursionResult {
    RadialFunction pi;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

// pi(r) = 1 - exp(-lambda int_{|x|<=a} pi(|x - r|) dx) beyond a, pi = 1 on [0, a],
// iterated downward from pi = 1 with tail q.
inline PiRecursionResult pi_recursion(const ModelParams& params, PiRecursionConfig cfg = {}) {
    double a = params.a, h = cfg.h_over_a * a;
    auto n = static_cast<std::size_t>(std::llround(cfg.rmax_over_a / cfg.h_over_a));
    double q = lambert_q(params.mu());
    PiRecursionResult res;
    res.pi = RadialFunction(h, n, 1.0, q);
    auto inside = [&](std::size_t i) { return res.pi.node(i) <= a; };
    if (q == 0) {
        for (std::size_t i = 0; i < n; ++i)
            if (!inside(i)) res.pi.values[i] = 0.0;
        res.converged = true;
        return res;
    }
    RingQuadrature rq(h, n, a, 1.0, cfg.quad);
    std::vector<double> ones(n + 1, 1.0), ext(n + 1);
    for (res.iterations = 1; res.iterations <= cfg.max_iter; ++res.iterations) {
        std::copy(res.pi.values.begin(), res.pi.values.end(), ext.begin());
        ext[n] = q;
        double diff = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (inside(i)) continue;
            double v = 1 - std::exp(-params.lambda * rq.integrate(ones, ext, i));
            diff = std::max(diff, std::fabs(v - res.pi.values[i]));
            res.pi.values[i] = v;
        }
        res.residual = diff;
        if (diff < cfg.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

struct ClusterApprox {
    double mu_tilde = 0.0;
    double q = 0.0;
    double c = std::numeric_limits<double>::infinity();  // 1/q; infinite when q = 0
    bool c_defined = false;
    RadialFunction pi;
    bool pi_converged = false;

    // pi(r)/q with tail 1; only meaningful when c_defined
    RadialFunction c_radial() const {
        RadialFunction out = pi;
        for (double& v : out.values) v /= q;
        out.tail = 1.0;
        return out;
    }
};

inline ClusterApprox cluster_constants(const ModelParams& params, PiRecursionConfig cfg = {}) {
    ClusterApprox ca;
    ca.mu_tilde = params.mu();
    ca.q = lambert_q(ca.mu_tilde);
    ca.c_defined = ca.q > 0;
    if (ca.c_defined) ca.c = 1.0 / ca.q;
    auto pr = pi_recursion(params, cfg);
    ca.pi = std::move(pr.pi);
    ca.pi_converged = pr.converged;
    return ca;
}

struct ClusterSample {
    std::size_t points = 0;
    std::size_t largest = 0;
    double fraction() const { return points ? static_cast<double>(largest) / static_cast<double>(points) : 0.0; }
};

// Largest connected component of the radius-a geometric graph on a sampled
// Poisson configuration; its share of points estimates q.
inline ClusterSample largest_cluster(const std::vector<Position>& pts, double a, const TorusDomain& dom) {
    std::size_t n = pts.size();
    ClusterSample s;
    s.points = n;
    if (n == 0) return s;
    boost::disjoint_sets_with_storage<> ds(n);
    for (std::size_t i = 0; i < n; ++i) ds.make_set(i);
    CellIndex idx = build_cell_index(pts, a, dom);
    for (std::size_t i = 0; i < n; ++i)
        idx.for_each_within(pts[i], a, [&](int j) {
            if (static_cast<std::size_t>(j) > i) ds.union_set(i, static_cast<std::size_t>(j));
        }, static_cast<int>(i));
    std::vector<std::size_t> size(n, 0);
    for (std::size_t i = 0; i < n; ++i) s.largest = std::max(s.largest, ++size[ds.find_set(i)]);
    return s;
}

inline double estimate_q_union_find(double lambda, double a, const TorusDomain& dom, std::uint64_t seed) {
    auto pts = sample_poisson(lambda, dom, seed);
    return largest_cluster(pts, a, dom).fraction();
}

}  // namespace planar_sis
