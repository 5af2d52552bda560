#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "planar_sis/closures.hpp"
#include "planar_sis/geometry.hpp"
#include "planar_sis/percolation.hpp"
#include "planar_sis/radial.hpp"

namespace planar_sis {

struct GridConfig {
    double h_over_a = 1.0 / 20;
    double rmax_over_a = 8.0;
    QuadratureConfig quad;
    double damping = 0.5;
    double tol = 1e-6;
    int max_iter = 10000;
    int degenerate_sweeps = 50;
    double degenerate_p = 1e-6;
};

struct Plateau {
    double w = 0.0, v = 0.0, z = 0.0;
};

struct SolveReport {
    PcfTriple pcf;
    double p = 0.0;        // infected fraction of all points
    double p_tilde = 0.0;  // on the substrate the equations were posed on
    int iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
    bool degenerate = false;  // p collapsed: extinction
    double first_moment_residual = 0.0;
    Plateau plateau;
    bool below_percolation = false;  // cluster equations used with mu below mu*
};

// Area-weighted mean over the grid cells whose centre lies inside (0, a).
inline double radial_plateau(const RadialFunction& f, double a) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < f.size() && f.node(i) < a; ++i) {
        num += f.node(i) * f.values[i];
        den += f.node(i);
    }
    return den > 0 ? num / den : f.tail;
}

namespace detail {

struct Problem {
    std::vector<Term> psipsi, psiphi;
    double alpha, beta, gamma, lambda, a;
    RadialFunction c;  // substrate pair correlation, tail 1
};

inline void powered_into(std::vector<double>& out, const std::vector<double>& vals, double e) {
    out.resize(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        double v = vals[i];
        if (e < 0) v = std::max(v, pcf_floor);
        out[i] = e == 0 ? 1.0 : std::pow(v, e);
    }
}

// Damped Picard sweeps. Per grid point the psi,phi value is the root of the
// psi,psi balance with psi,psi eliminated through the superposition
// identity; the phi,phi balance is then explicit in it.
inline SolveReport solve_pair_system(const Problem& P, const GridConfig& cfg) {
    double h = cfg.h_over_a * P.a;
    auto n = static_cast<std::size_t>(std::llround(cfg.rmax_over_a / cfg.h_over_a));
    RingQuadrature rq(h, n, P.a, P.alpha, cfg.quad);

    std::vector<double> cv(n), f(n);
    for (std::size_t i = 0; i < n; ++i) {
        double r = (static_cast<double>(i) + 0.5) * h;
        cv[i] = P.c(r);
        f[i] = r <= P.a ? P.alpha : 0.0;
    }
    // every PCF equal to c satisfies the superposition identity
    std::vector<double> s(cv), phi(cv), s_ext(n + 1), phi_ext(n + 1), g1, g2;
    std::vector<std::vector<double>> Kpp(P.psipsi.size(), std::vector<double>(n)),
        Kpf(P.psiphi.size(), std::vector<double>(n));

    SolveReport rep;
    double p = 0.0;
    int low_p = 0;
    auto extend = [&](std::vector<double>& ext, const std::vector<double>& v) {
        std::copy(v.begin(), v.end(), ext.begin());
        ext[n] = 1.0;
    };
    auto degenerate = [&](int it) {
        rep.p = rep.p_tilde = 0.0;
        rep.degenerate = true;
        rep.iterations = it;
        rep.converged = false;
        return rep;
    };

    for (int it = 1; it <= cfg.max_iter; ++it) {
        extend(s_ext, s);
        extend(phi_ext, phi);
        double I = rq.integrate_disc(s_ext);  // alpha int xi_psiphi over the disc
        double p_new = 1 - P.beta / (P.lambda * I);
        if (!(p_new > 0)) return degenerate(it);
        low_p = p_new < cfg.degenerate_p ? low_p + 1 : 0;
        if (low_p >= cfg.degenerate_sweeps) return degenerate(it);
        double dp = std::fabs(p_new - p);
        p = p_new;
        double q = 1 - p, lp = P.lambda * p;

        for (std::size_t t = 0; t < P.psipsi.size(); ++t) {
            powered_into(g1, s_ext, P.psipsi[t].e_x);
            powered_into(g2, s_ext, P.psipsi[t].e_xr);
            for (std::size_t i = 0; i < n; ++i) Kpp[t][i] = rq.integrate(g1, g2, i);
        }
        for (std::size_t t = 0; t < P.psiphi.size(); ++t) {
            powered_into(g1, s_ext, P.psiphi[t].e_x);
            powered_into(g2, phi_ext, P.psiphi[t].e_xr);
            for (std::size_t i = 0; i < n; ++i) Kpf[t][i] = rq.integrate(g1, g2, i);
        }

        double diff = dp;
        for (std::size_t i = 0; i < n; ++i) {
            double top = cv[i] - p * p * phi[i];
            auto zof = [&](double x) { return std::max(0.0, (top - 2 * p * q * x) / (q * q)); };
            auto F = [&](double x) {
                double z = zof(x), acc = P.gamma * z;
                for (std::size_t t = 0; t < P.psipsi.size(); ++t)
                    acc += lp * P.psipsi[t].coef * std::pow(z, 1 + P.psipsi[t].e_r) * Kpp[t][i];
                return p * P.beta * x + q * P.gamma - q * acc;
            };
            double s_max = std::max(0.0, top / (2 * p * q)), s_new;
            if (F(0.0) >= 0) s_new = 0.0;
            else if (F(s_max) <= 0) s_new = s_max;
            else {
                std::uintmax_t iters = 200;
                auto br = boost::math::tools::toms748_solve(F, 0.0, s_max, boost::math::tools::eps_tolerance<double>(52), iters);
                s_new = 0.5 * (br.first + br.second);
            }
            double acc = s_new * f[i];
            for (std::size_t t = 0; t < P.psiphi.size(); ++t) {
                double e = 1 + P.psiphi[t].e_r;
                acc += lp * P.psiphi[t].coef * (e == 0 ? 1.0 : std::pow(std::max(s_new, 0.0), e)) * Kpf[t][i];
            }
            double phi_new = (p * P.gamma + q * acc) / (p * (P.beta + P.gamma));
            diff = std::max({diff, std::fabs(s_new - s[i]), std::fabs(phi_new - phi[i])});
            s[i] += cfg.damping * (s_new - s[i]);
            phi[i] += cfg.damping * (phi_new - phi[i]);
        }
        rep.iterations = it;
        rep.residual = diff;
        if (diff < cfg.tol) {
            rep.converged = true;
            break;
        }
    }

    // p consistent with the final psi,phi; psi,psi from the superposition identity
    extend(s_ext, s);
    double I = rq.integrate_disc(s_ext);
    p = 1 - P.beta / (P.lambda * I);
    if (!(p > 0)) return degenerate(rep.iterations);
    double q = 1 - p;
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = (cv[i] - p * p * phi[i] - 2 * p * q * s[i]) / (q * q);
    rep.pcf.xi_psi_phi = RadialFunction(h, 0);
    rep.pcf.xi_psi_phi.values = s;
    rep.pcf.xi_phi_phi = RadialFunction(h, 0);
    rep.pcf.xi_phi_phi.values = phi;
    rep.pcf.xi_psi_psi = RadialFunction(h, 0);
    rep.pcf.xi_psi_psi.values = z;
    rep.p = rep.p_tilde = p;
    rep.first_moment_residual = std::fabs(P.beta - q * P.lambda * I);
    rep.plateau = {radial_plateau(rep.pcf.xi_psi_phi, P.a), radial_plateau(rep.pcf.xi_phi_phi, P.a),
                   radial_plateau(rep.pcf.xi_psi_psi, P.a)};
    return rep;
}

}  // namespace detail

inline SolveReport solve_motion(const ClosureSpec& spec, const ModelParams& params, const GridConfig& cfg = {}) {
    params.validate();
    spec.validate();
    if (!(params.beta > 0)) throw ConfigError("functional solve requires beta > 0");
    detail::Problem P{closure_terms(spec, Conditioning::PsiPsi), closure_terms(spec, Conditioning::PsiPhi),
                      params.alpha, params.beta, params.gamma, params.lambda, params.a,
                      RadialFunction::constant(1.0)};
    return detail::solve_pair_system(P, cfg);
}

// Equations on the infinite cluster: intensity q*lambda, no motion, substrate
// pair correlation c(r). Returns p_tilde on the cluster and p = q p_tilde.
inline SolveReport solve_no_motion(const ClosureSpec& spec, const ModelParams& params, const RadialFunction& c,
                                   double q, const GridConfig& cfg = {}) {
    params.validate();
    spec.validate();
    if (!(params.beta > 0)) throw ConfigError("functional solve requires beta > 0");
    if (!(q > 0 && q <= 1)) throw ConfigError("cluster probability q must lie in (0,1]");
    detail::Problem P{closure_terms(spec, Conditioning::PsiPsi), closure_terms(spec, Conditioning::PsiPhi),
                      params.alpha, params.beta, 0.0, q * params.lambda, params.a, c};
    SolveReport rep = detail::solve_pair_system(P, cfg);
    rep.p = q * rep.p_tilde;
    rep.below_percolation = params.mu() < boolean_mu_star;
    return rep;
}

inline SolveReport solve_no_motion(const ClosureSpec& spec, const ModelParams& params, const GridConfig& cfg = {}) {
    ClusterApprox ca = cluster_constants(params);
    if (!ca.c_defined) {
        SolveReport rep;
        rep.degenerate = true;
        rep.below_percolation = true;
        return rep;
    }
    return solve_no_motion(spec, params, ca.c_radial(), ca.q, cfg);
}

}  // namespace planar_sis
