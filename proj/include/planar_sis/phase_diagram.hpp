#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "planar_sis/geometry.hpp"
#include "planar_sis/percolation.hpp"

namespace planar_sis {

enum class Region { Safe, UMI, UMS };

inline const char* to_string(Region r) {
    switch (r) {
    case Region::Safe: return "Safe";
    case Region::UMI: return "UMI";
    default: return "UMS";
    }
}

enum class CriticalSpec { M2BI, B1I };

inline CriticalSpec critical_spec(std::string_view name) {
    if (name == "m2bi") return CriticalSpec::M2BI;
    if (name == "b1i") return CriticalSpec::B1I;
    throw ConfigError("critical values are available for m2bi and b1i only, not '" + std::string(name) + "'");
}

struct GammaPair {
    double minus = 0.0, plus = 0.0;
};

struct Criticals {
    double mu0 = std::numeric_limits<double>::quiet_NaN();  // m2bi only
    std::optional<double> beta0;   // absent when every beta in (0, alpha mu) is motion sensitive
    std::optional<double> gamma0;
    std::optional<GammaPair> gamma_c;  // at the queried beta
};

namespace detail {

inline std::optional<GammaPair> m2bi_gamma_c(double mu, double beta, double alpha) {
    double d = alpha * mu - beta, b = 2 * alpha - 3 * d;
    if (!(d > 0) || b <= 0) return std::nullopt;
    double disc = b * b - 8 * d * d;
    if (std::fabs(disc) < 1e-14 * b * b) disc = 0;  // cancellation at beta0
    if (disc < 0) return std::nullopt;
    double s = std::sqrt(disc);
    return GammaPair{beta * (b - s) / (8 * d), beta * (b + s) / (8 * d)};
}

struct B1iQuad {
    double d, bc, delta;
};

inline B1iQuad b1i_quad(double mu, double beta, double alpha) {
    double rho = std::pow(alpha * mu / beta, 2.0 / 3.0), d = alpha * mu - beta;
    double bc = 2 * beta * d + beta * beta * (rho - 1) - beta * alpha;
    return {d, bc, bc * bc - 8 * d * beta * beta * beta * (rho - 1)};
}

inline std::optional<GammaPair> b1i_gamma_c(double mu, double beta, double alpha) {
    auto [d, bc, delta] = b1i_quad(mu, beta, alpha);
    if (!(d > 0) || delta < 0 || bc >= 0) return std::nullopt;
    double s = std::sqrt(delta);
    return GammaPair{(-bc - s) / (4 * d), (-bc + s) / (4 * d)};
}

// Lower end of the beta interval below alpha mu on which b1i has real
// positive critical motion rates; bisection on a log-spaced bracket in
// d = alpha mu - beta.
inline std::optional<double> b1i_beta0(double mu, double alpha) {
    double top = alpha * mu;
    auto ok = [&](double d) { return b1i_gamma_c(mu, top - d, alpha).has_value(); };
    double good = 0, bad = 0;
    bool found_good = false, found_bad = false;
    for (int k = 0; k <= 400; ++k) {
        double d = top * std::pow(10.0, -12 + 12.0 * k / 400);
        if (d >= top) d = top * (1 - 1e-12);
        if (ok(d)) {
            good = d;
            found_good = true;
        } else if (found_good) {
            bad = d;
            found_bad = true;
            break;
        }
    }
    if (!found_good) return top;  // empty motion-sensitive band
    if (!found_bad) return std::nullopt;
    while (bad - good > 1e-10 * std::max(1.0, top)) {
        double mid = 0.5 * (good + bad);
        (ok(mid) ? good : bad) = mid;
    }
    return top - good;
}

}  // namespace detail

inline double m2bi_mu0(double alpha) { return 2 * alpha / (3 + std::sqrt(8.0)); }

inline Criticals m2bi_criticals(double mu, double beta, double alpha) {
    Criticals c;
    c.mu0 = m2bi_mu0(alpha);
    double eta = c.mu0 / alpha;
    if (alpha * mu > c.mu0) {
        c.beta0 = alpha * mu - c.mu0;
        c.gamma0 = alpha * (mu - eta) * (2 - 3 * eta) / (8 * eta);
    }
    c.gamma_c = detail::m2bi_gamma_c(mu, beta, alpha);
    return c;
}

inline Criticals b1i_criticals(double mu, double beta, double alpha) {
    Criticals c;
    c.beta0 = detail::b1i_beta0(mu, alpha);
    if (c.beta0 && *c.beta0 < alpha * mu) {
        auto [d, bc, delta] = detail::b1i_quad(mu, *c.beta0, alpha);
        (void)delta;
        c.gamma0 = -bc / (4 * d);
    }
    c.gamma_c = detail::b1i_gamma_c(mu, beta, alpha);
    return c;
}

inline Criticals criticals(CriticalSpec s, double mu, double beta, double alpha) {
    return s == CriticalSpec::M2BI ? m2bi_criticals(mu, beta, alpha) : b1i_criticals(mu, beta, alpha);
}

// Real roots in (0, alpha mu) of the m2bi threshold cubic
// b^3 + b^2 (6g - a mu) + 2 b g (2a - 3 a mu + 4g) - 8 mu a g^2 = 0.
inline std::vector<double> m2bi_beta_cubic_roots(double mu, double gamma, double alpha) {
    auto f = [&](double b) {
        return b * b * b + b * b * (6 * gamma - alpha * mu) + 2 * b * gamma * (2 * alpha - 3 * mu * alpha + 4 * gamma) -
               8 * mu * alpha * gamma * gamma;
    };
    std::vector<double> roots;
    double top = alpha * mu;
    const int n = 4000;
    double prev_b = 0, prev = f(0);
    for (int k = 1; k <= n; ++k) {
        double b = top * k / n, fb = f(b);
        if (fb == 0) {
            roots.push_back(b);
        } else if ((prev < 0) != (fb < 0) && prev != 0) {
            std::uintmax_t it = 200;
            auto r = boost::math::tools::toms748_solve(f, prev_b, b, prev, fb,
                                                       boost::math::tools::eps_tolerance<double>(60), it);
            roots.push_back(0.5 * (r.first + r.second));
        }
        prev_b = b;
        prev = fb;
    }
    return roots;
}

struct BetaC {
    double value = std::numeric_limits<double>::quiet_NaN();  // after the clamp at beta0
    double raw = std::numeric_limits<double>::quiet_NaN();    // root of the defining equation
    std::vector<double> roots;  // every real root found in (0, alpha mu)
    bool clamped = false;
    bool discontinuous_regime = false;  // mu below the m2bi mu0
    bool unresolved = false;
};

inline BetaC beta_c(CriticalSpec s, double mu, double gamma, double alpha) {
    if (!(gamma >= 0)) throw ConfigError("gamma must be >= 0");
    if (!(mu > 0 && alpha > 0)) throw ConfigError("mu and alpha must be positive");
    BetaC out;
    double top = alpha * mu;
    if (std::isinf(gamma)) {
        out.value = out.raw = top;
        return out;
    }
    if (s == CriticalSpec::M2BI) {
        Criticals c = m2bi_criticals(mu, top / 2, alpha);
        out.roots = m2bi_beta_cubic_roots(mu, gamma, alpha);
        out.discontinuous_regime = !c.beta0.has_value();
        if (out.roots.empty()) {
            out.unresolved = !(gamma == 0 && c.beta0);
        } else {
            // upper envelope of the branches
            out.raw = out.roots.back();
        }
        if (c.beta0 && gamma < *c.gamma0) {
            out.value = *c.beta0;
            out.clamped = true;
        } else {
            out.value = out.raw;
        }
        if (std::isnan(out.value)) out.unresolved = true;
        return out;
    }

    Criticals c = b1i_criticals(mu, top / 2, alpha);
    if (!c.beta0 || !c.gamma0) {
        out.unresolved = true;
        return out;
    }
    double b0 = *c.beta0, g0 = *c.gamma0;
    // gamma_plus rises from gamma0 to infinity and gamma_minus falls from
    // gamma0 towards 0 as beta runs from beta0 to alpha mu
    bool upper = gamma >= g0;
    auto h = [&](double b) {
        auto gc = detail::b1i_gamma_c(mu, b, alpha);
        if (!gc) return upper ? -1.0 : 1.0;
        return upper ? gc->plus - gamma : gc->minus - gamma;
    };
    double lo = b0 * (1 + 1e-14), hi = top * (1 - 1e-14);
    double flo = h(lo), fhi = h(hi);
    if ((flo < 0) == (fhi < 0)) {
        out.unresolved = gamma != g0;
        out.raw = b0;
    } else {
        std::uintmax_t it = 300;
        auto r = boost::math::tools::toms748_solve(h, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(60), it);
        out.raw = 0.5 * (r.first + r.second);
    }
    out.roots = {out.raw};
    if (!upper) {
        out.value = b0;
        out.clamped = true;
    } else {
        out.value = out.raw;
    }
    return out;
}

struct PhasePoint {
    double mu = 0.0, beta = 0.0, alpha = 1.0;
    Region region = Region::Safe;
    bool boolean_supercritical = false;
    std::optional<double> gamma_minus, gamma_plus;
};

inline PhasePoint classify(CriticalSpec s, double mu, double beta, double alpha) {
    if (!(mu > 0 && beta > 0 && alpha > 0)) throw ConfigError("classify needs positive mu, beta, alpha");
    PhasePoint pt{mu, beta, alpha, Region::Safe, mu > boolean_mu_star, std::nullopt, std::nullopt};
    if (beta >= alpha * mu) return pt;
    auto gc = s == CriticalSpec::M2BI ? detail::m2bi_gamma_c(mu, beta, alpha) : detail::b1i_gamma_c(mu, beta, alpha);
    if (!gc) {
        pt.region = Region::UMI;
        return pt;
    }
    pt.region = Region::UMS;
    pt.gamma_minus = gc->minus;
    pt.gamma_plus = gc->plus;
    return pt;
}

inline std::vector<PhasePoint> sweep(CriticalSpec s, const std::vector<double>& mus, const std::vector<double>& betas,
                                     double alpha) {
    std::vector<PhasePoint> out;
    out.reserve(mus.size() * betas.size());
    for (double mu : mus)
        for (double b : betas) out.push_back(classify(s, mu, b, alpha));
    return out;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

}  // namespace planar_sis
