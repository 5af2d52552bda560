#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "planar_sis/geometry.hpp"
#include "planar_sis/rng.hpp"
#include "planar_sis/simulator.hpp"

namespace planar_sis {

inline constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

// Pair correlation estimates on annuli [r_lo, r_hi). A NaN entry marks a bin
// without any pair of that type (or a class that was empty throughout).
struct PcfEstimate {
    std::vector<double> bin_edges;
    std::vector<double> xi_psi_phi, xi_phi_phi, xi_psi_psi;
    std::vector<std::uint64_t> counts;  // unordered pairs of any type
    std::vector<std::uint64_t> n_psi_phi, n_phi_phi, n_psi_psi;  // unordered pairs per type
    std::vector<double> e_psi_phi, e_phi_phi, e_psi_psi;  // pairs expected under independence
    std::size_t snapshots = 0;
    bool cross_available = true;

    std::size_t bins() const { return counts.size(); }
    double r_lo(std::size_t i) const { return bin_edges[i]; }
    double r_hi(std::size_t i) const { return bin_edges[i + 1]; }
    bool flagged(std::size_t i) const { return counts[i] == 0; }
};

// snapshots: states of the particles (Susceptible = Psi, Infected = Phi).
inline PcfEstimate estimate_pcf(const std::vector<Snapshot>& snapshots, const ModelParams& params,
                                const TorusDomain& dom, double bin_width, double r_max = -1.0) {
    if (!(bin_width > 0)) throw ConfigError("bin_width must be > 0");
    if (r_max < 0) r_max = 5.0 * params.a;
    if (r_max > 0.5 * dom.side) throw ConfigError("PCF range exceeds half the torus side");
    auto nb = static_cast<std::size_t>(std::ceil(r_max / bin_width - 1e-9));
    PcfEstimate est;
    est.bin_edges.resize(nb + 1);
    for (std::size_t i = 0; i <= nb; ++i) est.bin_edges[i] = std::min(r_max, static_cast<double>(i) * bin_width);
    r_max = est.bin_edges.back();
    est.counts.assign(nb, 0);
    est.n_psi_phi.assign(nb, 0);
    est.n_phi_phi.assign(nb, 0);
    est.n_psi_psi.assign(nb, 0);
    double sum_sf = 0, sum_ff = 0, sum_ss = 0;  // sum over snapshots of N_A N_B / |W|

    for (const auto& snap : snapshots) {
        CellIndex idx(dom, r_max);
        double ni = 0, ns = 0;
        for (std::size_t i = 0; i < snap.pos.size(); ++i) {
            idx.insert(static_cast<int>(i), snap.pos[i]);
            (snap.state[i] == State::Infected ? ni : ns) += 1;
        }
        sum_sf += ns * ni / dom.area();
        sum_ff += ni * (ni - 1) / dom.area();
        sum_ss += ns * (ns - 1) / dom.area();
        for (std::size_t i = 0; i < snap.pos.size(); ++i) {
            idx.for_each_within(snap.pos[i], r_max, [&](int jj) {
                auto j = static_cast<std::size_t>(jj);
                if (j <= i) return;
                double d = torus_distance(snap.pos[i], snap.pos[j], dom);
                auto b = static_cast<std::size_t>(d / bin_width);
                if (b >= nb || d >= r_max) return;
                ++est.counts[b];
                bool fi = snap.state[i] == State::Infected, fj = snap.state[j] == State::Infected;
                if (fi && fj) ++est.n_phi_phi[b];
                else if (!fi && !fj) ++est.n_psi_psi[b];
                else ++est.n_psi_phi[b];
            });
        }
    }
    est.snapshots = snapshots.size();
    est.cross_available = sum_sf > 0;
    auto fill = [&](std::vector<double>& xi, std::vector<double>& e, const std::vector<std::uint64_t>& n,
                    double norm, double ordered) {
        xi.assign(nb, nan_v);
        e.assign(nb, 0.0);
        for (std::size_t b = 0; b < nb; ++b) {
            double area = std::numbers::pi * (est.bin_edges[b + 1] * est.bin_edges[b + 1] -
                                              est.bin_edges[b] * est.bin_edges[b]);
            e[b] = norm * area / ordered;
            if (n[b] > 0 && norm > 0) xi[b] = static_cast<double>(n[b]) / e[b];
        }
    };
    // auto pairs: N(N-1) counts ordered pairs, each unordered pair twice
    fill(est.xi_psi_phi, est.e_psi_phi, est.n_psi_phi, sum_sf, 1.0);
    fill(est.xi_phi_phi, est.e_phi_phi, est.n_phi_phi, sum_ff, 2.0);
    fill(est.xi_psi_psi, est.e_psi_psi, est.n_psi_psi, sum_ss, 2.0);
    return est;
}

// (1-p)^2 xi_psipsi + p^2 xi_phiphi + 2p(1-p) xi_psiphi - 1, per bin
inline std::vector<double> check_superposition(const PcfEstimate& pcf, double p) {
    std::vector<double> r(pcf.bins());
    for (std::size_t b = 0; b < r.size(); ++b)
        r[b] = (1 - p) * (1 - p) * pcf.xi_psi_psi[b] + p * p * pcf.xi_phi_phi[b] +
               2 * p * (1 - p) * pcf.xi_psi_phi[b] - 1.0;
    return r;
}

// Count-weighted mean of xi_psiphi over bins inside (0, a).
inline double w_plateau(const PcfEstimate& pcf, double a) {
    double num = 0, den = 0;
    for (std::size_t b = 0; b < pcf.bins(); ++b) {
        if (pcf.r_hi(b) > a * (1 + 1e-12) || pcf.n_psi_phi[b] == 0) continue;
        auto n = static_cast<double>(pcf.n_psi_phi[b]);
        num += n * pcf.xi_psi_phi[b];
        den += n;
    }
    return den > 0 ? num / den : nan_v;
}

struct MttaRecord {
    double parameter_value = 0.0;
    double L = 0.0;
    std::vector<double> samples;
    std::size_t censored_n = 0;
    double mean = nan_v;
    double ci95_low = nan_v;
    double ci95_high = nan_v;
    bool all_censored = false;

    std::size_t n() const { return samples.size(); }
};

// Student-t 95% interval. Censored samples enter at the cap, so the mean is
// a lower bound whenever censored_n > 0.
inline MttaRecord summarize_mtta(double param, double L, std::vector<double> samples, std::size_t censored_n) {
    MttaRecord r;
    r.parameter_value = param;
    r.L = L;
    r.samples = std::move(samples);
    r.censored_n = censored_n;
    r.all_censored = !r.samples.empty() && censored_n == r.samples.size();
    std::size_t n = r.samples.size();
    if (n == 0) return r;
    r.mean = std::accumulate(r.samples.begin(), r.samples.end(), 0.0) / static_cast<double>(n);
    if (n < 2) {
        r.ci95_low = -std::numeric_limits<double>::infinity();
        r.ci95_high = std::numeric_limits<double>::infinity();
        return r;
    }
    double ss = 0;
    for (double x : r.samples) ss += (x - r.mean) * (x - r.mean);
    double se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    boost::math::students_t dist(static_cast<double>(n - 1));
    double tq = boost::math::quantile(boost::math::complement(dist, 0.025));
    r.ci95_low = r.mean - tq * se;
    r.ci95_high = r.mean + tq * se;
    return r;
}

struct MttaCell {
    double parameter_value = 0.0;
    SimConfig config;
};

inline unsigned default_jobs() {
    if (const char* env = std::getenv("PLANAR_SIS_JOBS")) {
        int j = std::atoi(env);
        if (j > 0) return static_cast<unsigned>(j);
    }
    return 1;
}

// Runs f(i) for i in [0, n) on `jobs` threads; each i writes its own slot.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& f) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    for (unsigned t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; !failed && (i = next++) < n;) {
                try {
                    f(i);
                } catch (...) {
                    if (!failed.exchange(true)) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// Replication j of cell i uses seed derive_seed(derive_seed(seed, i), j).
inline std::vector<MttaRecord> mtta_curve(const std::vector<MttaCell>& cells, std::size_t replications,
                                          std::uint64_t seed, unsigned jobs = 1) {
    std::vector<AbsorptionResult> res(cells.size() * replications);
    parallel_for(res.size(), jobs, [&](std::size_t u) {
        std::size_t i = u / replications, j = u % replications;
        SimConfig cfg = cells[i].config;
        if (!(cfg.params.beta > 0)) {
            res[u] = {cfg.extinction_cap, true, {}};
            return;
        }
        cfg.seed = derive_seed(derive_seed(seed, i), j);
        res[u] = run_until_extinction(cfg);
    });
    std::vector<MttaRecord> out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        std::vector<double> s;
        std::size_t cens = 0;
        for (std::size_t j = 0; j < replications; ++j) {
            const auto& r = res[i * replications + j];
            s.push_back(r.time);
            cens += r.censored;
        }
        out.push_back(summarize_mtta(cells[i].parameter_value, cells[i].config.dom.side, std::move(s), cens));
    }
    return out;
}

struct LittleResult {
    bool available = false;
    double ratio = nan_v;
    double nu_measured = nan_v;
    double nu_predicted = nan_v;
    std::size_t sojourns = 0;
};

// Mean healthy sojourn of a tagged point (recovery to next infection) against
// the queueing prediction (1-p)/(p beta). Sojourns start after t_from.
inline LittleResult little_check(const std::vector<Event>& events, double p, double beta, double t_from,
                                 std::size_t min_sojourns = 100) {
    LittleResult r;
    if (!(p > 0 && p < 1 && beta > 0)) return r;
    r.nu_predicted = (1 - p) / (p * beta);
    int max_id = -1;
    for (const auto& e : events) max_id = std::max(max_id, e.id);
    std::vector<double> since(static_cast<std::size_t>(max_id + 1), nan_v);
    double total = 0;
    for (const auto& e : events) {
        auto i = static_cast<std::size_t>(e.id);
        if (e.type == EventType::Recovery) {
            since[i] = e.t >= t_from ? e.t : nan_v;
        } else if (e.type == EventType::Infection) {
            if (!std::isnan(since[i])) {
                total += e.t - since[i];
                ++r.sojourns;
            }
            since[i] = nan_v;
        }
    }
    if (r.sojourns < min_sojourns) return r;
    r.available = true;
    r.nu_measured = total / static_cast<double>(r.sojourns);
    r.ratio = r.nu_measured / r.nu_predicted;
    return r;
}

inline LittleResult little_check(const RunResult& run, std::size_t min_sojourns = 100) {
    return little_check(run.events, run.summary.p_mean, run.summary.params.beta, run.warmup, min_sojourns);
}

}  // namespace planar_sis
