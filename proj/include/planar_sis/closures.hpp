#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "planar_sis/geometry.hpp"
#include "planar_sis/radial.hpp"

namespace planar_sis {

inline constexpr double pcf_floor = 1e-12;

enum class Conditioning { PsiPsi, PsiPhi };

// coef * xi_psiphi(|x|)^e_x * xi_B(|x - r|)^e_xr * xi_C(r)^e_r, where B is
// psiphi under psi,psi conditioning and phiphi under psi,phi conditioning,
// and C is psipsi resp. psiphi.
struct Term {
    double coef = 1.0;
    double e_x = 0.0;
    double e_xr = 0.0;
    double e_r = 0.0;
};

struct PcfTriple {
    RadialFunction xi_psi_phi;
    RadialFunction xi_phi_phi;
    RadialFunction xi_psi_psi;

    static PcfTriple constant(double psiphi, double phiphi, double psipsi) {
        return {RadialFunction::constant(psiphi), RadialFunction::constant(phiphi), RadialFunction::constant(psipsi)};
    }
};

struct BayesIndependent {
    double k = 1.0, l = 1.0;
};
struct BayesGeometric {
    double k = 1.0, l = 1.0;
};
struct GeometricMean {
    double eta = 0.5;
};
struct ArithmeticMean {
    double eta = 0.5;
};
enum class IntegralFamily { MinfBI, MinfBG1 };
struct IntegralMixture {
    IntegralFamily family = IntegralFamily::MinfBI;
};

struct ClosureSpec;
struct MixtureComponent {
    double weight;
    std::shared_ptr<const ClosureSpec> spec;
};
struct Mixture {
    std::vector<MixtureComponent> components;
};

struct ClosureSpec {
    std::string name;
    std::variant<BayesIndependent, BayesGeometric, GeometricMean, ArithmeticMean, Mixture, IntegralMixture> family;

    void validate() const;
};

namespace detail {

// (k, l) rescaled so that an infinite entry becomes 1 and the other 0
inline std::pair<double, double> normalize_kl(double k, double l) {
    if (!(k >= 0 && l >= 0) || (k == 0 && l == 0)) throw ConfigError("closure needs k, l >= 0, not both 0");
    if (std::isinf(k) && std::isinf(l)) throw ConfigError("closure k and l cannot both be infinite");
    if (std::isinf(k)) return {1.0, 0.0};
    if (std::isinf(l)) return {0.0, 1.0};
    return {k, l};
}

}  // namespace detail

// Exponents (e_x, e_xr, e_r) of the Bayes independent family.
inline std::array<double, 3> bayes_independent_exponents(double k, double l, Conditioning c) {
    auto [K, Lw] = detail::normalize_kl(k, l);
    double d = K + 2 * Lw;
    if (c == Conditioning::PsiPsi) return {(K + Lw) / d, (K + Lw) / d, -K / d};
    return {(K + Lw) / d, 2 * Lw / d, -Lw / d};
}

inline std::array<double, 3> bayes_geometric_exponents(double k, double l, Conditioning c) {
    auto [K, Lw] = detail::normalize_kl(k, l);
    double d = K + 2 * Lw;
    if (c == Conditioning::PsiPsi) return {(K + 1.5 * Lw) / d, (0.5 * K + 1.5 * Lw) / d, -(Lw + 0.5 * K) / d};
    return {(0.5 * K + 1.5 * Lw) / d, (Lw + 0.5 * K) / d, -(0.5 * Lw) / d};
}

// Exponents of the mixtures' integrands at mixing variable eta in [0, 1].
inline std::array<double, 3> integral_mixture_exponents(IntegralFamily f, double eta, Conditioning c) {
    if (f == IntegralFamily::MinfBI) {
        if (c == Conditioning::PsiPsi) return {eta, eta, 1 - 2 * eta};
        return {eta, 2 * (1 - eta), eta - 1};
    }
    if (c == Conditioning::PsiPsi) return {0.5 + 0.5 * eta, 1 - 0.5 * eta, -0.5};
    return {1 - 0.5 * eta, 0.5, 0.5 * eta - 0.5};
}

inline void ClosureSpec::validate() const {
    std::visit(
        [](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, BayesIndependent> || std::is_same_v<T, BayesGeometric>) {
                detail::normalize_kl(f.k, f.l);
            } else if constexpr (std::is_same_v<T, GeometricMean> || std::is_same_v<T, ArithmeticMean>) {
                if (!(f.eta >= 0 && f.eta <= 1)) throw ConfigError("closure eta must lie in [0,1]");
            } else if constexpr (std::is_same_v<T, Mixture>) {
                double s = 0;
                for (const auto& c : f.components) {
                    if (!(c.weight > 0)) throw ConfigError("mixture weights must be positive");
                    if (!c.spec) throw ConfigError("mixture component missing");
                    c.spec->validate();
                    s += c.weight;
                }
                if (std::fabs(s - 1) > 1e-12) throw ConfigError("mixture weights must sum to 1");
            }
        },
        family);
}

// Flattens a closure into product terms; integral mixtures are discretized
// with 64-point Gauss-Legendre in eta.
inline std::vector<Term> closure_terms(const ClosureSpec& spec, Conditioning c) {
    std::vector<Term> out;
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, BayesIndependent>) {
                auto e = bayes_independent_exponents(f.k, f.l, c);
                out.push_back({1.0, e[0], e[1], e[2]});
            } else if constexpr (std::is_same_v<T, BayesGeometric>) {
                auto e = bayes_geometric_exponents(f.k, f.l, c);
                out.push_back({1.0, e[0], e[1], e[2]});
            } else if constexpr (std::is_same_v<T, GeometricMean>) {
                out.push_back({1.0, f.eta, 1 - f.eta, 0.0});
            } else if constexpr (std::is_same_v<T, ArithmeticMean>) {
                if (f.eta > 0) out.push_back({f.eta, 1.0, 0.0, 0.0});
                if (f.eta < 1) out.push_back({1 - f.eta, 0.0, 1.0, 0.0});
            } else if constexpr (std::is_same_v<T, Mixture>) {
                for (const auto& comp : f.components)
                    for (Term t : closure_terms(*comp.spec, c)) {
                        t.coef *= comp.weight;
                        out.push_back(t);
                    }
            } else {
                const auto& g = gauss64();
                for (std::size_t i = 0; i < g.x.size(); ++i) {
                    auto e = integral_mixture_exponents(f.family, g.x[i], c);
                    out.push_back({g.w[i], e[0], e[1], e[2]});
                }
            }
        },
        spec.family);
    return out;
}

struct Offset {
    double x = 0.0, y = 0.0;
};

namespace detail {

inline double powered(double value, double e, bool* singular) {
    if (e == 0) return 1.0;
    if (e < 0 && value < pcf_floor) {
        if (singular) *singular = true;
        value = pcf_floor;
    }
    return std::pow(value, e);
}

}  // namespace detail

// lambda_p times the closure expression at separation r, third point at x.
inline double eval_mu(const ClosureSpec& spec, Conditioning c, const PcfTriple& pcf, double lambda_p, double r,
                      Offset x, bool* singular = nullptr) {
    double dx = std::hypot(x.x, x.y), dxr = std::hypot(x.x - r, x.y);
    const RadialFunction& fxr = c == Conditioning::PsiPsi ? pcf.xi_psi_phi : pcf.xi_phi_phi;
    const RadialFunction& fr = c == Conditioning::PsiPsi ? pcf.xi_psi_psi : pcf.xi_psi_phi;
    double vx = pcf.xi_psi_phi(dx), vxr = fxr(dxr), vr = fr(r);
    double s = 0;
    for (const Term& t : closure_terms(spec, c))
        s += t.coef * detail::powered(vx, t.e_x, singular) * detail::powered(vxr, t.e_xr, singular) *
             detail::powered(vr, t.e_r, singular);
    return lambda_p * s;
}

inline double eval_mu_psipsi(const ClosureSpec& spec, const PcfTriple& pcf, double lambda_p, double r, Offset x,
                             bool* singular = nullptr) {
    return eval_mu(spec, Conditioning::PsiPsi, pcf, lambda_p, r, x, singular);
}

inline double eval_mu_psiphi(const ClosureSpec& spec, const PcfTriple& pcf, double lambda_p, double r, Offset x,
                             bool* singular = nullptr) {
    return eval_mu(spec, Conditioning::PsiPhi, pcf, lambda_p, r, x, singular);
}

namespace detail {

inline ClosureSpec named(std::string n, decltype(ClosureSpec::family) f) { return ClosureSpec{std::move(n), std::move(f)}; }

inline ClosureSpec mixture(std::string n, std::vector<std::pair<double, ClosureSpec>> parts) {
    Mixture m;
    for (auto& [w, s] : parts) m.components.push_back({w, std::make_shared<const ClosureSpec>(std::move(s))});
    return named(std::move(n), std::move(m));
}

}  // namespace detail

inline const std::vector<std::string>& registered_closures() {
    static const std::vector<std::string> names = {"b0i", "b1i",  "b0.5i", "binfi",  "g1",     "a1",
                                                   "b1g1", "m2bi", "m3bi", "minfbi", "minfbg1"};
    return names;
}

struct UnknownClosure : ConfigError {
    using ConfigError::ConfigError;
};

inline ClosureSpec closure_by_name(std::string_view name) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    using detail::named;
    if (name == "b0i") return named("b0i", BayesIndependent{inf, 1.0});
    if (name == "b1i") return named("b1i", BayesIndependent{1.0, 1.0});
    if (name == "b0.5i") return named("b0.5i", BayesIndependent{1.0, 0.5});
    if (name == "binfi") return named("binfi", BayesIndependent{1.0, inf});
    if (name == "g1") return named("g1", GeometricMean{0.5});
    if (name == "a1") return named("a1", ArithmeticMean{0.5});
    if (name == "b1g1") return named("b1g1", BayesGeometric{1.0, 1.0});
    if (name == "m2bi") return detail::mixture("m2bi", {{0.5, closure_by_name("b0i")}, {0.5, closure_by_name("binfi")}});
    if (name == "m3bi")
        return detail::mixture("m3bi", {{1.0 / 3, closure_by_name("b0i")},
                                        {1.0 / 3, closure_by_name("b1i")},
                                        {1.0 / 3, closure_by_name("binfi")}});
    if (name == "minfbi") return named("minfbi", IntegralMixture{IntegralFamily::MinfBI});
    if (name == "minfbg1") return named("minfbg1", IntegralMixture{IntegralFamily::MinfBG1});
    std::string msg = "unknown closure '" + std::string(name) + "'; registered:";
    for (const auto& n : registered_closures()) msg += " " + n;
    throw UnknownClosure(msg);
}

}  // namespace planar_sis
