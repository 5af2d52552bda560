#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "planar_sis/functional_solver.hpp"
#include "planar_sis/percolation.hpp"
#include "planar_sis/phase_diagram.hpp"
#include "planar_sis/polynomial_solver.hpp"
#include "planar_sis/simulator.hpp"
#include "planar_sis/statistics.hpp"

namespace planar_sis::io {

using nlohmann::json;

// Shortest round-trip text for a double; NaN and infinities as words.
inline std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

// Writes through a temporary sibling and renames, so readers never see a
// partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline json to_json(const ModelParams& p) {
    return {{"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma}, {"lambda", p.lambda}, {"a", p.a}, {"mu", p.mu()}};
}

inline json to_json(const EventCounts& c) {
    return {{"recovery", c.recovery}, {"infection", c.infection}, {"jump", c.jump}};
}

inline json to_json(const RunSummary& s) {
    json j = {{"p_mean", s.p_mean},       {"p_stderr", s.p_stderr}, {"t_absorb", nullptr},
              {"censored", s.censored},   {"event_counts", to_json(s.event_counts)},
              {"seed", s.seed},           {"params", to_json(s.params)}, {"n_points", s.n_points}};
    if (s.t_absorb) j["t_absorb"] = *s.t_absorb;
    return j;
}

inline json to_json(const ClosureSolution& s, const ModelParams& params) {
    return {{"spec", s.spec}, {"params", to_json(params)}, {"w", s.w}, {"v", s.v}, {"z", s.z}, {"p", s.p},
            {"p_tilde", s.p_tilde}, {"branch", to_string(s.branch)}, {"residual", s.residual},
            {"multiplicity_flag", s.multiplicity_flag}};
}

inline json to_json(const SolveReport& r) {
    return {{"p", r.p},
            {"p_tilde", r.p_tilde},
            {"iterations", r.iterations},
            {"residual", r.residual},
            {"converged", r.converged},
            {"degenerate", r.degenerate},
            {"first_moment_residual", r.first_moment_residual},
            {"below_percolation", r.below_percolation},
            {"plateau", {{"w", r.plateau.w}, {"v", r.plateau.v}, {"z", r.plateau.z}}}};
}

inline json to_json(const ClusterApprox& c) {
    json j = {{"mu_tilde", c.mu_tilde}, {"q", c.q}, {"c", nullptr}};
    if (c.c_defined) j["c"] = c.c;
    return j;
}

inline std::string snapshots_csv(const std::vector<Snapshot>& snaps) {
    std::ostringstream o;
    o << "t,id,x,y,state\n";
    for (const auto& s : snaps)
        for (std::size_t i = 0; i < s.pos.size(); ++i)
            o << num(s.t) << ',' << i << ',' << num(s.pos[i].x) << ',' << num(s.pos[i].y) << ','
              << (s.state[i] == State::Infected ? 'I' : 'S') << '\n';
    return o.str();
}

// Parses the snapshot CSV back; rows sharing a t form one snapshot.
inline std::vector<Snapshot> read_snapshots_csv(std::istream& in) {
    std::vector<Snapshot> out;
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,id,x,y,state", 0) != 0)
        throw std::runtime_error("snapshot CSV must start with header t,id,x,y,state");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string f[5];
        for (auto& x : f)
            if (!std::getline(ls, x, ',')) throw std::runtime_error("malformed snapshot row: " + line);
        double t = std::stod(f[0]);
        if (out.empty() || out.back().t != t) {
            out.emplace_back();
            out.back().t = t;
        }
        out.back().pos.push_back({std::stod(f[2]), std::stod(f[3])});
        out.back().state.push_back(f[4] == "I" ? State::Infected : State::Susceptible);
    }
    return out;
}

inline std::string series_csv(const std::vector<std::pair<double, double>>& series) {
    std::ostringstream o;
    o << "t,infected_fraction\n";
    for (auto [t, f] : series) o << num(t) << ',' << num(f) << '\n';
    return o.str();
}

inline std::string pcf_csv(const PcfEstimate& e) {
    std::ostringstream o;
    o << "r_lo,r_hi,xi_psiphi,xi_phiphi,xi_psipsi,counts\n";
    for (std::size_t i = 0; i < e.bins(); ++i)
        o << num(e.r_lo(i)) << ',' << num(e.r_hi(i)) << ',' << num(e.xi_psi_phi[i]) << ',' << num(e.xi_phi_phi[i])
          << ',' << num(e.xi_psi_psi[i]) << ',' << e.counts[i] << '\n';
    return o.str();
}

// Solver PCFs in the same schema; cells carry no pair counts.
inline std::string pcf_csv(const PcfTriple& t) {
    std::ostringstream o;
    o << "r_lo,r_hi,xi_psiphi,xi_phiphi,xi_psipsi,counts\n";
    const auto& s = t.xi_psi_phi;
    for (std::size_t i = 0; i < s.size(); ++i)
        o << num(static_cast<double>(i) * s.h) << ',' << num(static_cast<double>(i + 1) * s.h) << ','
          << num(s.values[i]) << ',' << num(t.xi_phi_phi.values[i]) << ',' << num(t.xi_psi_psi.values[i]) << ",0\n";
    return o.str();
}

inline std::string mtta_csv(const std::vector<MttaRecord>& recs) {
    std::ostringstream o;
    o << "param,L,mean,ci_lo,ci_hi,n,censored_n\n";
    for (const auto& r : recs)
        o << num(r.parameter_value) << ',' << num(r.L) << ',' << num(r.mean) << ',' << num(r.ci95_low) << ','
          << num(r.ci95_high) << ',' << r.n() << ',' << r.censored_n << '\n';
    return o.str();
}

inline std::string phase_csv(const std::vector<PhasePoint>& pts) {
    std::ostringstream o;
    o << "mu,beta,region,boolean_supercritical,gamma_minus,gamma_plus\n";
    for (const auto& p : pts)
        o << num(p.mu) << ',' << num(p.beta) << ',' << to_string(p.region) << ','
          << (p.boolean_supercritical ? "true" : "false") << ',' << (p.gamma_minus ? num(*p.gamma_minus) : "") << ','
          << (p.gamma_plus ? num(*p.gamma_plus) : "") << '\n';
    return o.str();
}

inline std::string two_column_csv(const std::string& x, const std::string& y,
                                   const std::vector<std::pair<double, double>>& rows) {
    std::ostringstream o;
    o << x << ',' << y << '\n';
    for (auto [a, b] : rows) o << num(a) << ',' << num(b) << '\n';
    return o.str();
}

inline std::string radial_csv(const RadialFunction& f, const std::string& name) {
    std::vector<std::pair<double, double>> rows;
    for (std::size_t i = 0; i < f.size(); ++i) rows.emplace_back(f.node(i), f.values[i]);
    return two_column_csv("r", name, rows);
}

}  // namespace planar_sis::io
