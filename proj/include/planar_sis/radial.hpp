#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

namespace planar_sis {

// Piecewise constant on cells [k h, (k+1) h), sampled at cell centres; the
// tail value applies beyond the last cell.
struct RadialFunction {
    double h = 1.0;
    std::vector<double> values;
    double tail = 1.0;

    RadialFunction() = default;
    RadialFunction(double step, std::size_t n, double fill = 1.0, double tail_value = 1.0)
        : h(step), values(n, fill), tail(tail_value) {}

    std::size_t size() const { return values.size(); }
    double r_max() const { return h * static_cast<double>(values.size()); }
    double node(std::size_t k) const { return (static_cast<double>(k) + 0.5) * h; }

    double operator()(double r) const {
        if (r < 0) r = -r;
        auto k = static_cast<std::size_t>(r / h);
        return k < values.size() ? values[k] : tail;
    }

    // Index used by the quadrature tables; size() stands for the tail.
    std::size_t index(double r) const { return std::min(values.size(), static_cast<std::size_t>(std::fabs(r) / h)); }
    double at_index(std::size_t k) const { return k < values.size() ? values[k] : tail; }

    static RadialFunction constant(double value, double step = 1.0, std::size_t n = 1) {
        return RadialFunction(step, n, value, value);
    }
};

struct GaussRule {
    std::vector<double> x, w;  // on [0, 1], weights sum to 1
};

// Gauss-Legendre rule mapped to [0, 1].
inline GaussRule gauss_legendre_unit(unsigned n) {
    GaussRule g;
    auto pos = boost::math::legendre_p_zeros<double>(static_cast<int>(n));  // non-negative zeros
    std::vector<std::pair<double, double>> nodes;
    for (double z : pos) {
        double d = boost::math::legendre_p_prime<double>(static_cast<int>(n), z);
        double wt = 2.0 / ((1 - z * z) * d * d);
        nodes.emplace_back(z, wt);
        if (z != 0) nodes.emplace_back(-z, wt);
    }
    std::sort(nodes.begin(), nodes.end());
    for (auto [z, wt] : nodes) {
        g.x.push_back(0.5 * (z + 1));
        g.w.push_back(0.5 * wt);
    }
    return g;
}

inline const GaussRule& gauss64() {
    static const GaussRule g = gauss_legendre_unit(64);
    return g;
}

struct QuadratureConfig {
    int n_v = 64;
    int n_theta = 128;
};

// alpha * int_0^a v dv int_0^{2pi} f1(v)^e1 f2(|x - r|)^e2 dtheta by the
// midpoint rule; theta nodes pair up as theta, 2pi - theta.
inline double ring_kernel(const RadialFunction& f1, double e1, const RadialFunction& f2, double e2, double r,
                          double alpha, double a, QuadratureConfig q = {}) {
    if (q.n_theta % 2) throw std::invalid_argument("n_theta must be even");
    int nth = q.n_theta / 2;
    double dv = a / q.n_v, dth = 2 * std::numbers::pi / q.n_theta;
    double s = 0;
    for (int k = 0; k < q.n_v; ++k) {
        double v = (k + 0.5) * dv;
        double g1 = std::pow(f1(v), e1);
        double inner = 0;
        for (int j = 0; j < nth; ++j) {
            double th = (j + 0.5) * dth;
            double d = std::sqrt(std::max(0.0, r * r + v * v - 2 * r * v * std::cos(th)));
            inner += std::pow(f2(d), e2);
        }
        s += g1 * 2 * inner * v;
    }
    return alpha * s * dv * dth;
}

// Precomputed ring quadrature for every cell centre of a radial grid, so a
// kernel sweep only gathers powered values.
class RingQuadrature {
public:
    RingQuadrature(double h, std::size_t n, double a, double alpha, QuadratureConfig q = {})
        : h_(h), n_(n), nv_(q.n_v), nth_(q.n_theta / 2) {
        if (q.n_theta % 2) throw std::invalid_argument("n_theta must be even");
        double dv = a / nv_, dth = 2 * std::numbers::pi / q.n_theta;
        vw_.resize(static_cast<std::size_t>(nv_));
        vidx_.resize(static_cast<std::size_t>(nv_));
        for (int k = 0; k < nv_; ++k) {
            double v = (k + 0.5) * dv;
            vw_[static_cast<std::size_t>(k)] = alpha * 2 * v * dv * dth;
            vidx_[static_cast<std::size_t>(k)] = std::min(n, static_cast<std::size_t>(v / h));
        }
        idx_.resize(n * static_cast<std::size_t>(nv_ * nth_));
        for (std::size_t i = 0; i < n; ++i) {
            double r = (static_cast<double>(i) + 0.5) * h;
            for (int k = 0; k < nv_; ++k) {
                double v = (k + 0.5) * dv;
                for (int j = 0; j < nth_; ++j) {
                    double th = (j + 0.5) * dth;
                    double d = std::sqrt(std::max(0.0, r * r + v * v - 2 * r * v * std::cos(th)));
                    idx_[(i * static_cast<std::size_t>(nv_) + static_cast<std::size_t>(k)) * static_cast<std::size_t>(nth_) +
                         static_cast<std::size_t>(j)] = static_cast<unsigned>(std::min(n, static_cast<std::size_t>(d / h)));
                }
            }
        }
    }

    std::size_t size() const { return n_; }
    double step() const { return h_; }

    // g1, g2: powered values per grid index, with the tail at index size().
    double integrate(const std::vector<double>& g1, const std::vector<double>& g2, std::size_t i) const {
        double s = 0;
        const unsigned* row = &idx_[i * static_cast<std::size_t>(nv_ * nth_)];
        for (int k = 0; k < nv_; ++k) {
            double inner = 0;
            for (int j = 0; j < nth_; ++j) inner += g2[row[j]];
            row += nth_;
            s += vw_[static_cast<std::size_t>(k)] * g1[vidx_[static_cast<std::size_t>(k)]] * inner;
        }
        return s;
    }

    // Kernel with no |x - r| dependence: alpha * int f1^e1 over the disc.
    double integrate_disc(const std::vector<double>& g1) const {
        double s = 0;
        for (int k = 0; k < nv_; ++k)
            s += vw_[static_cast<std::size_t>(k)] * g1[vidx_[static_cast<std::size_t>(k)]] * nth_;
        return s;
    }

private:
    double h_;
    std::size_t n_;
    int nv_, nth_;
    std::vector<double> vw_;
    std::vector<std::size_t> vidx_;
    std::vector<unsigned> idx_;
};

}  // namespace planar_sis
