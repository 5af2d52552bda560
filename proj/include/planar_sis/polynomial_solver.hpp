#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "planar_sis/closures.hpp"
#include "planar_sis/geometry.hpp"

namespace planar_sis {

enum class Branch { Survival, Extinct, Unresolved };

inline const char* to_string(Branch b) {
    switch (b) {
    case Branch::Survival: return "survival";
    case Branch::Extinct: return "extinct";
    default: return "unresolved";
    }
}

// Plateau values of the three PCFs on (0, a) and the infected fraction.
// In the no-motion case p_tilde is the fraction on the infinite cluster and
// p = q p_tilde; with motion p_tilde = p.
struct ClosureSolution {
    std::string spec;
    double w = 0.0, v = 0.0, z = 0.0;
    double p = 0.0, p_tilde = 0.0;
    Branch branch = Branch::Extinct;
    double residual = 0.0;
    bool multiplicity_flag = false;
    std::size_t roots = 0;  // survival roots seen at the requested parameters
};

inline double mean_field_p(const ModelParams& params) {
    if (!(params.beta > 0)) return 1.0;
    return std::max(0.0, 1 - params.beta / (params.alpha * params.mu()));
}

// (x - y) / (log x - log y), with its limit x when x and y nearly coincide.
inline double log_mean(double x, double y) {
    if (std::fabs(x - y) < 1e-9 * std::max(x, y)) return x;
    if (x <= 0 || y <= 0) return 0.0;
    return (x - y) / (std::log(x) - std::log(y));
}

namespace detail {

// Plateau form of the closures: the phi,phi balance involves
// S(w, v) = sum coef w^(e_x + e_r) v^e_xr, the psi,psi balance
// T(w, z) = sum coef z^(1 + e_r) w^(e_x + e_xr - 1).
struct PlateauMeans {
    std::vector<Term> phi_terms, psi_terms;
    bool log_mean_form = false;

    double s_phi(double w, double v) const {
        if (log_mean_form) return log_mean(v * v, w * w) / w;
        double s = 0;
        for (const Term& t : phi_terms) s += t.coef * std::pow(w, t.e_x + t.e_r) * std::pow(v, t.e_xr);
        return s;
    }
    double t_psi(double w, double z) const {
        if (log_mean_form) return log_mean(w * w, z * z) / w;
        double s = 0;
        for (const Term& t : psi_terms) s += t.coef * std::pow(z, 1 + t.e_r) * std::pow(w, t.e_x + t.e_xr - 1);
        return s;
    }
};

inline PlateauMeans plateau_means(const ClosureSpec& spec) {
    PlateauMeans m;
    if (const auto* im = std::get_if<IntegralMixture>(&spec.family); im && im->family == IntegralFamily::MinfBI) {
        m.log_mean_form = true;
        return m;
    }
    m.phi_terms = closure_terms(spec, Conditioning::PsiPhi);
    m.psi_terms = closure_terms(spec, Conditioning::PsiPsi);
    return m;
}

// E1: (b+g) p v - g p - a (1-p) w - b p S(w,v)
// E2: b p w - (1-p) g (z-1) - b p T(w,z)
// E3: b - (1-p) a mu w
// E4: c - (1-p)^2 z - 2p(1-p) w - p^2 v
// Motion: mu is the mean degree and c = 1. Without motion g = 0, mu is the
// cluster degree q mu and c the cluster pair correlation; E2 then forces z = w.
struct PolySystem {
    PlateauMeans m;
    double alpha, beta, gamma, mu, c;

    // each equation divided by max(1, largest term) so huge gamma does not
    // inflate the residual
    std::array<double, 4> residuals(const std::array<double, 4>& x) const {
        auto [w, v, z, p] = x;
        double q = 1 - p;
        std::array<double, 4> t1 = {(beta + gamma) * p * v, gamma * p, alpha * q * w, beta * p * m.s_phi(w, v)};
        std::array<double, 4> t2 = {beta * p * w, q * gamma * (z - 1), beta * p * m.t_psi(w, z), 0.0};
        std::array<double, 4> t3 = {beta, q * alpha * mu * w, 0.0, 0.0};
        std::array<double, 4> t4 = {c, q * q * z, 2 * p * q * w, p * p * v};
        auto scaled = [](double e, const std::array<double, 4>& t) {
            double s = 1;
            for (double u : t) s = std::max(s, std::fabs(u));
            return e / s;
        };
        return {scaled(t1[0] - t1[1] - t1[2] - t1[3], t1), scaled(t2[0] - t2[1] - t2[2], t2),
                scaled(t3[0] - t3[1], t3), scaled(t4[0] - t4[1] - t4[2] - t4[3], t4)};
    }

    double residual(const std::array<double, 4>& x) const {
        double r = 0;
        for (double e : residuals(x)) r = std::max(r, std::fabs(e));
        return r;
    }

    double w_of(double p) const { return beta / (alpha * mu * (1 - p)); }

    // first positive root of E1 in v: bracket by doubling, then refine
    std::optional<double> v_of(double w, double p) const {
        auto h = [&](double v) {
            return (beta + gamma) * p * v - gamma * p - alpha * (1 - p) * w - beta * p * m.s_phi(w, v);
        };
        double lo = 0.0, hi = 1.0;
        if (h(lo) > 0) return std::nullopt;
        while (!(h(hi) > 0)) {
            lo = hi;
            hi *= 2;
            if (hi > 1e15) return std::nullopt;
        }
        std::uintmax_t it = 200;
        auto r = boost::math::tools::toms748_solve(h, lo, hi, boost::math::tools::eps_tolerance<double>(60), it);
        return 0.5 * (r.first + r.second);
    }

    double z_of(double w, double v, double p) const {
        double q = 1 - p;
        return (c - 2 * p * q * w - p * p * v) / (q * q);
    }

    // E2 / p along the curve where E1, E3, E4 hold; NaN off the valid domain
    double motion_g(double p) const {
        double w = w_of(p);
        auto v = v_of(w, p);
        if (!v) return std::numeric_limits<double>::quiet_NaN();
        double z = z_of(w, *v, p);
        if (!(z > 0)) return std::numeric_limits<double>::quiet_NaN();
        return beta * w - (1 - p) * gamma * (z - 1) / p - beta * m.t_psi(w, z);
    }

    // E4 with z = w along the curve where E1, E3 hold (gamma = 0)
    double cluster_g(double p) const {
        double w = w_of(p);
        auto v = v_of(w, p);
        if (!v) return std::numeric_limits<double>::quiet_NaN();
        return (1 - p * p) * w + p * p * *v - c;
    }

    std::array<double, 4> point(double p) const {
        double w = w_of(p);
        double v = v_of(w, p).value_or(std::numeric_limits<double>::quiet_NaN());
        return {w, v, gamma > 0 ? z_of(w, v, p) : w, p};
    }
};

// Sampling grid for p: logarithmic near 0, then uniform.
inline std::vector<double> p_grid() {
    std::vector<double> g;
    for (int k = 0; k < 80; ++k) g.push_back(std::pow(10.0, -10 + 8.0 * k / 80));
    for (int k = 0; k < 2000; ++k) g.push_back(0.01 + (1 - 1e-7 - 0.01) * k / 1999.0);
    return g;
}

struct Scan {
    std::vector<double> roots;
    bool valid_near_zero = false;
    bool connected = true;
    bool any_valid = false;
};

template <class G>
Scan scan_roots(const G& g) {
    Scan s;
    auto grid = p_grid();
    double prev_p = 0, prev_g = std::numeric_limits<double>::quiet_NaN();
    bool seen_gap = false;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double p = grid[k], gv = g(p);
        if (std::isfinite(gv)) {
            if (k == 0) s.valid_near_zero = true;
            if (s.any_valid && seen_gap) s.connected = false;
            s.any_valid = true;
            if (std::isfinite(prev_g) && (gv == 0 || (prev_g < 0) != (gv < 0))) {
                if (gv == 0) {
                    s.roots.push_back(p);
                } else {
                    std::uintmax_t it = 200;
                    auto r = boost::math::tools::toms748_solve(g, prev_p, p, prev_g, gv,
                                                               boost::math::tools::eps_tolerance<double>(60), it);
                    s.roots.push_back(0.5 * (r.first + r.second));
                }
            }
        } else if (s.any_valid) {
            seen_gap = true;
        }
        prev_p = p;
        prev_g = gv;
    }
    return s;
}

// Newton on the four equations with a central-difference Jacobian.
inline std::array<double, 4> newton_polish(const PolySystem& sys, std::array<double, 4> x) {
    double best = sys.residual(x);
    for (int it = 0; it < 60 && best > 1e-14; ++it) {
        auto f = sys.residuals(x);
        double J[4][4];
        for (int j = 0; j < 4; ++j) {
            double hj = 1e-7 * std::max(std::fabs(x[static_cast<std::size_t>(j)]), 1e-3);
            auto xp = x, xm = x;
            xp[static_cast<std::size_t>(j)] += hj;
            xm[static_cast<std::size_t>(j)] -= hj;
            auto fp = sys.residuals(xp), fm = sys.residuals(xm);
            for (int i = 0; i < 4; ++i) J[i][j] = (fp[static_cast<std::size_t>(i)] - fm[static_cast<std::size_t>(i)]) / (2 * hj);
        }
        // Gaussian elimination with partial pivoting on J d = -f
        double A[4][5];
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) A[i][j] = J[i][j];
            A[i][4] = -f[static_cast<std::size_t>(i)];
        }
        bool singular = false;
        for (int col = 0; col < 4; ++col) {
            int piv = col;
            for (int i = col + 1; i < 4; ++i)
                if (std::fabs(A[i][col]) > std::fabs(A[piv][col])) piv = i;
            if (std::fabs(A[piv][col]) < 1e-300) {
                singular = true;
                break;
            }
            for (int j = 0; j < 5; ++j) std::swap(A[col][j], A[piv][j]);
            for (int i = col + 1; i < 4; ++i) {
                double fct = A[i][col] / A[col][col];
                for (int j = col; j < 5; ++j) A[i][j] -= fct * A[col][j];
            }
        }
        if (singular) break;
        std::array<double, 4> d{};
        for (int i = 3; i >= 0; --i) {
            double s = A[i][4];
            for (int j = i + 1; j < 4; ++j) s -= A[i][j] * d[static_cast<std::size_t>(j)];
            d[static_cast<std::size_t>(i)] = s / A[i][i];
        }
        // halve the step until the residual drops
        bool improved = false;
        for (double lam = 1; lam > 1e-4; lam *= 0.5) {
            auto xn = x;
            for (std::size_t i = 0; i < 4; ++i) xn[i] += lam * d[i];
            double r = sys.residual(xn);
            if (std::isfinite(r) && r < best) {
                x = xn;
                best = r;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    return x;
}

inline ClosureSolution finish(const std::string& name, const PolySystem& sys, std::array<double, 4> x0) {
    ClosureSolution s;
    s.spec = name;
    auto x = newton_polish(sys, x0);
    s.w = x[0];
    s.v = x[1];
    s.z = x[2];
    s.p = s.p_tilde = x[3];
    s.residual = sys.residual(x);
    bool valid = s.p > 0 && s.p < 1 && s.v >= 0 && s.z >= 0 && s.residual < 1e-10;
    s.branch = valid ? Branch::Survival : Branch::Unresolved;
    return s;
}

inline ClosureSolution finish(const std::string& name, const PolySystem& sys, double p) {
    return finish(name, sys, sys.point(p));
}

inline double nearest(const std::vector<double>& roots, double p, double* gap = nullptr) {
    double best = roots.front();
    for (double r : roots)
        if (std::fabs(r - p) < std::fabs(best - p)) best = r;
    if (gap) {
        *gap = std::numeric_limits<double>::infinity();
        for (double r : roots)
            if (r != best) *gap = std::min(*gap, std::fabs(r - best));
    }
    return best;
}

// Follow the survival root from the fast-motion regime down to gamma.
// Returns nothing when the tracked branch folds away or becomes ambiguous.
inline std::optional<double> continue_from_fast_motion(PolySystem sys, double gamma) {
    double g_hi = std::max(1e4, 100 * gamma);
    sys.gamma = g_hi;
    auto s = scan_roots([&](double p) { return sys.motion_g(p); });
    if (s.roots.size() != 1) return std::nullopt;
    double p = s.roots.front();
    const int steps = 400;
    double g_lo = gamma > 0 ? gamma : 1e-8;
    for (int k = 1; k <= steps + (gamma > 0 ? 0 : 1); ++k) {
        sys.gamma = k <= steps ? g_hi * std::pow(g_lo / g_hi, static_cast<double>(k) / steps) : 0.0;
        auto sk = scan_roots([&](double pp) { return sys.motion_g(pp); });
        if (sk.roots.empty()) return std::nullopt;
        double gap = 0;
        double next = nearest(sk.roots, p, &gap);
        if (gap < 2 * std::fabs(next - p)) return std::nullopt;
        p = next;
    }
    return p;
}

}  // namespace detail

// Survival root of the plateau system with motion. Roots are located by
// eliminating w, v, z in favour of p, bracketing on a p grid and polishing
// with Newton on the full system.
inline ClosureSolution solve_motion_poly(const ClosureSpec& spec, const ModelParams& params) {
    params.validate();
    spec.validate();
    if (!(params.beta > 0)) throw ConfigError("polynomial solve requires beta > 0");
    detail::PolySystem sys{detail::plateau_means(spec), params.alpha, params.beta, params.gamma, params.mu(), 1.0};
    ClosureSolution out;
    out.spec = spec.name;
    if (params.beta >= params.alpha * params.mu()) return out;  // safe region

    auto scan = detail::scan_roots([&](double p) { return sys.motion_g(p); });
    out.roots = scan.roots.size();
    if (scan.roots.empty()) {
        out.branch = scan.valid_near_zero && scan.connected ? Branch::Extinct : Branch::Unresolved;
        return out;
    }
    // The reduced equation vanishes on most of the grid when the psi,psi
    // balance is void at gamma = 0 (b0i): every z is admissible. z is taken
    // from the branch at a small positive gamma, and with z fixed the other
    // three equations determine w, v, p. Flagged as a selected root.
    if (scan.roots.size() > detail::p_grid().size() / 4) {
        out.branch = Branch::Unresolved;
        out.multiplicity_flag = true;
        detail::PolySystem eps = sys;
        eps.gamma = 1e-6 * params.beta;
        auto se = detail::scan_roots([&](double p) { return eps.motion_g(p); });
        if (se.roots.size() != 1) return out;
        double z0 = eps.point(se.roots.front())[2];
        auto h = [&](double p) {
            double w = sys.w_of(p);
            auto v = sys.v_of(w, p);
            if (!v) return std::numeric_limits<double>::quiet_NaN();
            return sys.c - (1 - p) * (1 - p) * z0 - 2 * p * (1 - p) * w - p * p * *v;
        };
        auto sz = detail::scan_roots(h);
        if (sz.roots.empty()) return out;
        double p = detail::nearest(sz.roots, se.roots.front());
        double w = sys.w_of(p);
        std::array<double, 4> x = {w, sys.v_of(w, p).value_or(0.0), z0, p};
        out.w = x[0];
        out.v = x[1];
        out.z = x[2];
        out.p = out.p_tilde = p;
        out.residual = sys.residual(x);
        if (p > 0 && p < 1 && out.residual < 1e-10) out.branch = Branch::Survival;
        return out;
    }
    double p = scan.roots.front();
    bool flag = false;
    if (scan.roots.size() > 1) {
        auto tracked = detail::continue_from_fast_motion(sys, params.gamma);
        if (tracked) {
            p = detail::nearest(scan.roots, *tracked);
        } else {
            p = *std::max_element(scan.roots.begin(), scan.roots.end());
            flag = true;
        }
    }
    ClosureSolution s = detail::finish(spec.name, sys, p);
    s.roots = out.roots;
    s.multiplicity_flag = flag;
    return s;
}

// Degree-4 equation satisfied by w on the m2bi survival branch with motion,
// obtained by eliminating p, z and v. The w d b^2 term enters with a minus
// sign; a plus sign there does not vanish on solutions.
inline double m2bi_quartic(double w, const ModelParams& params) {
    double a = params.alpha, b = params.beta, g = params.gamma, mu = params.mu();
    double d = a * mu * w - b;
    double lhs = (2 * g + b) * ((d + 2 * g) * (w * w * a * a * mu * mu - 2 * b * d * w) - w * d * b * b - 2 * g * b * b);
    double rhs = d * (d + 2 * g) * (2 * g * d + 2 * a * b * w + b * w * d);
    return lhs - rhs;
}

// Smaller root of 2 p^2 - (c mu + 2) p + (c mu - beta/alpha) = 0 with mu the
// cluster degree; the m2bi cluster system reduces to it exactly.
inline std::optional<double> m2bi_cluster_p(double alpha, double beta, double mu_tilde, double c) {
    double B = c * mu_tilde + 2, C = c * mu_tilde - beta / alpha;
    double disc = B * B - 8 * C;
    if (disc < 0) return std::nullopt;
    double p = (B - std::sqrt(disc)) / 4;
    if (!(p > 0 && p < 1)) return std::nullopt;
    return p;
}

struct CubedRoot {
    double w = 0.0;
    double p_tilde = 0.0;
    bool genuine = false;  // satisfies the equation before cubing
};

// b1i on the cluster: v and p are explicit in w, and the remaining equation
// (M w - b) v - a w = (M w - b) v^(2/3) w^(1/3), M = a mu, is cubed into a
// polynomial identity. Roots of the cubed form that fail the original one
// are spurious and reported as such.
inline std::vector<CubedRoot> b1i_cluster_roots(double alpha, double beta, double mu_tilde, double c) {
    double M = alpha * mu_tilde;
    auto v_of = [&](double w) {
        double d = M * w - beta;
        return w * (M * w * (c * M - 2 * beta) + beta * beta) / (d * d);
    };
    auto cubed = [&](double w) {
        double d = M * w - beta, v = v_of(w);
        double lhs = d * v - alpha * w;
        return lhs * lhs * lhs - v * v * w * d * d * d;
    };
    std::vector<CubedRoot> out;
    double prev_w = 0, prev = std::numeric_limits<double>::quiet_NaN();
    for (double p : detail::p_grid()) {
        double w = beta / (M * (1 - p)), g = cubed(w);
        if (std::isfinite(prev) && std::isfinite(g) && (prev < 0) != (g < 0)) {
            std::uintmax_t it = 200;
            auto r = boost::math::tools::toms748_solve(cubed, prev_w, w, prev, g,
                                                       boost::math::tools::eps_tolerance<double>(60), it);
            CubedRoot cr;
            cr.w = 0.5 * (r.first + r.second);
            cr.p_tilde = 1 - beta / (M * cr.w);
            double d = M * cr.w - beta, v = v_of(cr.w);
            double lhs = d * v - alpha * cr.w, rhs = d * std::cbrt(v * v * cr.w);
            cr.genuine = v >= 0 && std::fabs(lhs - rhs) <= 1e-8 * std::max({1.0, std::fabs(lhs), std::fabs(rhs)});
            out.push_back(cr);
        }
        prev_w = w;
        prev = g;
    }
    return out;
}

// Plateau system on the infinite cluster without motion: cluster degree
// q mu, pair correlation c. Returns p_tilde and p = q p_tilde.
inline ClosureSolution solve_no_motion_poly(const ClosureSpec& spec, const ModelParams& params, double c, double q) {
    params.validate();
    spec.validate();
    if (!(params.beta > 0)) throw ConfigError("polynomial solve requires beta > 0");
    if (!(c >= 1)) throw ConfigError("cluster pair correlation c must be >= 1");
    if (!(q > 0 && q <= 1)) throw ConfigError("cluster probability q must lie in (0,1]");
    double mu_t = q * params.mu();
    detail::PolySystem sys{detail::plateau_means(spec), params.alpha, params.beta, 0.0, mu_t, c};
    ClosureSolution out;
    out.spec = spec.name;
    if (params.beta >= c * params.alpha * mu_t) return out;

    std::vector<double> roots;
    bool valid_near_zero = true, connected = true;
    if (spec.name == "m2bi") {
        if (auto p = m2bi_cluster_p(params.alpha, params.beta, mu_t, c)) roots.push_back(*p);
    } else if (spec.name == "b1i") {
        for (const auto& r : b1i_cluster_roots(params.alpha, params.beta, mu_t, c))
            if (r.genuine && r.p_tilde > 0 && r.p_tilde < 1) roots.push_back(r.p_tilde);
    } else {
        auto scan = detail::scan_roots([&](double p) { return sys.cluster_g(p); });
        roots = scan.roots;
        valid_near_zero = scan.valid_near_zero;
        connected = scan.connected;
    }
    out.roots = roots.size();
    if (roots.empty()) {
        out.branch = valid_near_zero && connected ? Branch::Extinct : Branch::Unresolved;
        return out;
    }
    double p = *std::max_element(roots.begin(), roots.end());
    ClosureSolution s = detail::finish(spec.name, sys, p);
    s.roots = out.roots;
    s.multiplicity_flag = roots.size() > 1;
    s.p = q * s.p_tilde;
    return s;
}

}  // namespace planar_sis
