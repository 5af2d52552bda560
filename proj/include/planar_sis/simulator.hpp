#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "planar_sis/geometry.hpp"
#include "planar_sis/rng.hpp"

namespace planar_sis {

enum class State : std::uint8_t { Susceptible = 0, Infected = 1 };

struct Particle {
    int id = 0;
    Position pos;
    State state = State::Susceptible;
    int infected_neighbor_count = 0;
};

enum class EventType : std::uint8_t { Recovery, Infection, Jump, None };

struct Event {
    EventType type = EventType::None;
    int id = -1;
    double t = 0.0;
};

struct EventCounts {
    std::uint64_t recovery = 0;
    std::uint64_t infection = 0;
    std::uint64_t jump = 0;
    std::uint64_t total() const { return recovery + infection + jump; }
};

struct InitialCondition {
    enum class Kind { AllInfected, SingleInfected, Fraction };
    Kind kind = Kind::AllInfected;
    double p0 = 1.0;

    static InitialCondition all() { return {Kind::AllInfected, 1.0}; }
    static InitialCondition single() { return {Kind::SingleInfected, 0.0}; }
    static InitialCondition fraction(double p0) { return {Kind::Fraction, p0}; }
};

struct SimConfig {
    ModelParams params;
    TorusDomain dom{40.0};
    std::uint64_t seed = 1;
    double t_max = 100.0;
    InitialCondition initial_condition;
    double snapshot_interval = -1.0;  // <0: 1/beta
    double warmup = -1.0;             // <0: 20/beta
    double extinction_cap = 1e5;
    std::size_t point_cap = default_point_cap;
    bool record_events = false;

    // Fills defaults. With beta = 0 there is no recovery timescale, so the
    // warmup is 0 and the interval is one time unit.
    SimConfig resolved() const {
        SimConfig c = *this;
        double b = params.beta;
        if (c.snapshot_interval < 0) c.snapshot_interval = b > 0 ? 1.0 / b : 1.0;
        if (c.warmup < 0) c.warmup = b > 0 ? std::min(20.0 / b, 0.5 * c.t_max) : 0.0;
        return c;
    }

    void validate() const {
        params.validate();
        dom.validate(params.a);
        if (!(t_max > 0)) throw ConfigError("t_max must be > 0");
        if (!(warmup >= 0 && warmup < t_max)) throw ConfigError("warmup must satisfy 0 <= warmup < t_max");
        if (!(snapshot_interval > 0)) throw ConfigError("snapshot_interval must be > 0");
        if (!(extinction_cap > 0)) throw ConfigError("extinction_cap must be > 0");
        if (initial_condition.kind == InitialCondition::Kind::Fraction &&
            !(initial_condition.p0 >= 0 && initial_condition.p0 <= 1))
            throw ConfigError("initial fraction p0 must lie in [0,1]");
    }
};

struct Snapshot {
    double t = 0.0;
    std::vector<Position> pos;
    std::vector<State> state;

    std::size_t infected() const {
        std::size_t n = 0;
        for (State s : state) n += s == State::Infected;
        return n;
    }
};

// Prefix sums over integer weights; find() inverts the cumulative sum.
class Fenwick {
public:
    explicit Fenwick(std::size_t n = 0) : t_(n + 1, 0) {
        top_ = 1;
        while (top_ * 2 <= n) top_ *= 2;
    }
    std::size_t size() const { return t_.size() - 1; }
    std::int64_t total() const { return total_; }

    void add(std::size_t i, std::int64_t d) {
        total_ += d;
        for (std::size_t k = i + 1; k < t_.size(); k += k & (~k + 1)) t_[k] += d;
    }

    std::int64_t prefix(std::size_t i) const {  // sum of [0, i]
        std::int64_t s = 0;
        for (std::size_t k = i + 1; k > 0; k -= k & (~k + 1)) s += t_[k];
        return s;
    }

    // smallest i with prefix(i) > u, for 0 <= u < total()
    std::size_t find(std::int64_t u) const {
        std::size_t pos = 0;
        for (std::size_t step = top_; step > 0; step >>= 1) {
            std::size_t nxt = pos + step;
            if (nxt < t_.size() && t_[nxt] <= u) {
                pos = nxt;
                u -= t_[nxt];
            }
        }
        return pos;
    }

private:
    std::vector<std::int64_t> t_;
    std::int64_t total_ = 0;
    std::size_t top_ = 1;
};

struct AuditReport {
    bool ok = true;
    std::size_t count_mismatches = 0;
    std::int64_t maintained_weight = 0;
    std::int64_t recomputed_weight = 0;
    std::size_t maintained_infected = 0;
    std::size_t recomputed_infected = 0;
};

class Simulator {
public:
    Simulator(const ModelParams& params, const TorusDomain& dom, std::vector<Position> pos,
              std::vector<State> states, std::uint64_t seed)
        : prm_(params), dom_(dom), rng_(seed), index_(dom, params.a), fen_(pos.size()) {
        params.validate();
        dom.validate(params.a);
        if (states.size() != pos.size()) throw ConfigError("state vector size differs from point count");
        parts_.resize(pos.size());
        list_pos_.assign(pos.size(), -1);
        for (std::size_t i = 0; i < pos.size(); ++i) {
            parts_[i] = Particle{static_cast<int>(i), dom.wrap(pos[i]), states[i], 0};
            index_.insert(static_cast<int>(i), parts_[i].pos);
            if (states[i] == State::Infected) push_infected(static_cast<int>(i));
        }
        for (auto& p : parts_) {
            int c = 0;
            index_.for_each_within(p.pos, prm_.a, [&](int j) { c += is_infected(j); }, p.id);
            p.infected_neighbor_count = c;
            if (p.state == State::Susceptible) fen_.add(static_cast<std::size_t>(p.id), c);
        }
    }

    // Samples the initial Poisson configuration and initial condition on
    // stream 0 of the config seed; the dynamics use stream 1.
    static Simulator from_config(const SimConfig& cfg) {
        Engine init = make_engine(cfg.seed, 0);
        auto pts = sample_poisson(cfg.params.lambda, cfg.dom, init, cfg.point_cap);
        std::vector<State> st(pts.size(), State::Susceptible);
        const auto& ic = cfg.initial_condition;
        switch (ic.kind) {
            case InitialCondition::Kind::AllInfected:
                std::fill(st.begin(), st.end(), State::Infected);
                break;
            case InitialCondition::Kind::SingleInfected:
                if (!st.empty()) {
                    std::uniform_int_distribution<std::size_t> pick(0, st.size() - 1);
                    st[pick(init)] = State::Infected;
                }
                break;
            case InitialCondition::Kind::Fraction: {
                std::bernoulli_distribution coin(ic.p0);
                for (auto& s : st) s = coin(init) ? State::Infected : State::Susceptible;
                break;
            }
        }
        return Simulator(cfg.params, cfg.dom, std::move(pts), std::move(st), derive_seed(cfg.seed, 1));
    }

    const ModelParams& params() const { return prm_; }
    const TorusDomain& domain() const { return dom_; }
    const std::vector<Particle>& particles() const { return parts_; }
    const EventCounts& counts() const { return counts_; }
    double time() const { return t_; }
    std::size_t size() const { return parts_.size(); }
    std::size_t num_infected() const { return infected_.size(); }
    bool absorbed() const { return infected_.empty(); }
    double infected_fraction() const {
        return parts_.empty() ? 0.0 : static_cast<double>(infected_.size()) / static_cast<double>(parts_.size());
    }

    double recovery_rate() const { return prm_.beta * static_cast<double>(infected_.size()); }
    double jump_rate() const { return prm_.gamma * static_cast<double>(parts_.size()); }
    double infection_rate() const { return prm_.alpha * static_cast<double>(fen_.total()); }
    double total_rate() const { return recovery_rate() + jump_rate() + infection_rate(); }

    // Waiting time to the next event; +inf when no event is possible.
    double draw_waiting_time() {
        double R = total_rate();
        if (R > 0) return std::exponential_distribution<double>(R)(rng_);
        if (!infected_.empty() && prm_.beta > 0)
            throw std::logic_error("zero total rate with infected particles present");
        return std::numeric_limits<double>::infinity();
    }

    // Chooses the event category proportionally to the aggregate rates and
    // applies it at time t_new.
    Event apply_event(double t_new) {
        double rr = recovery_rate(), rj = jump_rate(), ri = infection_rate();
        double R = rr + rj + ri;
        if (!(R > 0)) return Event{EventType::None, -1, t_};
        double u = std::uniform_real_distribution<double>(0.0, R)(rng_);
        t_ = t_new;
        Event ev{EventType::None, -1, t_};
        if (u < rr || (rj == 0 && ri == 0)) {
            std::uniform_int_distribution<std::size_t> pick(0, infected_.size() - 1);
            ev = {EventType::Recovery, infected_[pick(rng_)], t_};
            recover(ev.id);
            ++counts_.recovery;
        } else if (u < rr + ri || rj == 0) {
            std::uniform_int_distribution<std::int64_t> pick(0, fen_.total() - 1);
            ev = {EventType::Infection, static_cast<int>(fen_.find(pick(rng_))), t_};
            infect(ev.id);
            ++counts_.infection;
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, parts_.size() - 1);
            ev = {EventType::Jump, static_cast<int>(pick(rng_)), t_};
            jump(ev.id, uniform_position(dom_, rng_));
            ++counts_.jump;
        }
        return ev;
    }

    // One Gillespie step. Returns EventType::None when no event is possible
    // (absorbed, or frozen because every rate vanishes).
    Event step() {
        double dt = draw_waiting_time();
        if (std::isinf(dt)) return Event{EventType::None, -1, t_};
        return apply_event(t_ + dt);
    }

    // Full O(n^2) recomputation compared against the maintained bookkeeping.
    AuditReport audit() const {
        AuditReport r;
        double a2 = prm_.a * prm_.a;
        std::int64_t w = 0;
        for (const auto& p : parts_) {
            int c = 0;
            for (const auto& q : parts_)
                if (q.id != p.id && q.state == State::Infected && torus_distance2(p.pos, q.pos, dom_.side) <= a2) ++c;
            if (c != p.infected_neighbor_count) ++r.count_mismatches;
            if (p.state == State::Susceptible) w += c;
            if (p.state == State::Infected) ++r.recomputed_infected;
        }
        r.recomputed_weight = w;
        r.maintained_weight = fen_.total();
        r.maintained_infected = infected_.size();
        std::int64_t fen_sum = 0;
        for (std::size_t i = 0; i < parts_.size(); ++i)
            fen_sum += fen_.prefix(i) - (i ? fen_.prefix(i - 1) : 0) == weight_of(i) ? 0 : 1;
        r.ok = r.count_mismatches == 0 && r.recomputed_weight == r.maintained_weight &&
               r.recomputed_infected == r.maintained_infected && fen_sum == 0;
        return r;
    }

    Snapshot snapshot() const {
        Snapshot s;
        s.t = t_;
        s.pos.reserve(parts_.size());
        s.state.reserve(parts_.size());
        for (const auto& p : parts_) {
            s.pos.push_back(p.pos);
            s.state.push_back(p.state);
        }
        return s;
    }

private:
    bool is_infected(int i) const { return parts_[static_cast<std::size_t>(i)].state == State::Infected; }

    std::int64_t weight_of(std::size_t i) const {
        return parts_[i].state == State::Susceptible ? parts_[i].infected_neighbor_count : 0;
    }

    void push_infected(int i) {
        list_pos_[static_cast<std::size_t>(i)] = static_cast<int>(infected_.size());
        infected_.push_back(i);
    }

    void pop_infected(int i) {
        int s = list_pos_[static_cast<std::size_t>(i)];
        int last = infected_.back();
        infected_[static_cast<std::size_t>(s)] = last;
        list_pos_[static_cast<std::size_t>(last)] = s;
        infected_.pop_back();
        list_pos_[static_cast<std::size_t>(i)] = -1;
    }

    // +1 / -1 on the infected-neighbour counts around particle i
    void spread(int i, int delta) {
        index_.for_each_within(parts_[static_cast<std::size_t>(i)].pos, prm_.a, [&](int j) {
            auto& q = parts_[static_cast<std::size_t>(j)];
            q.infected_neighbor_count += delta;
            if (q.state == State::Susceptible) fen_.add(static_cast<std::size_t>(j), delta);
        }, i);
    }

    void infect(int i) {
        auto& p = parts_[static_cast<std::size_t>(i)];
        fen_.add(static_cast<std::size_t>(i), -p.infected_neighbor_count);
        p.state = State::Infected;
        push_infected(i);
        spread(i, +1);
    }

    void recover(int i) {
        auto& p = parts_[static_cast<std::size_t>(i)];
        p.state = State::Susceptible;
        pop_infected(i);
        fen_.add(static_cast<std::size_t>(i), p.infected_neighbor_count);
        spread(i, -1);
    }

    void jump(int i, Position to) {
        auto& p = parts_[static_cast<std::size_t>(i)];
        bool inf = p.state == State::Infected;
        if (inf) spread(i, -1);
        p.pos = to;
        index_.move(i, to);
        if (inf) spread(i, +1);
        int c = 0;
        index_.for_each_within(to, prm_.a, [&](int j) { c += is_infected(j); }, i);
        if (!inf) fen_.add(static_cast<std::size_t>(i), c - p.infected_neighbor_count);
        p.infected_neighbor_count = c;
    }

    ModelParams prm_;
    TorusDomain dom_;
    Engine rng_;
    CellIndex index_;
    Fenwick fen_;
    std::vector<Particle> parts_;
    std::vector<int> infected_;
    std::vector<int> list_pos_;
    EventCounts counts_;
    double t_ = 0.0;
};

struct RunSummary {
    double p_mean = 0.0;
    double p_stderr = 0.0;
    std::optional<double> t_absorb;
    bool censored = false;
    EventCounts event_counts;
    std::uint64_t seed = 0;
    ModelParams params;
    std::size_t n_points = 0;
};

struct RunResult {
    std::vector<std::pair<double, double>> series;  // (t, infected fraction)
    std::vector<Snapshot> snapshots;
    std::vector<Event> events;  // infections and recoveries, when recorded
    RunSummary summary;
    double warmup = 0.0;
    double t_max = 0.0;
};

inline constexpr int run_batches = 20;

inline RunResult run(const SimConfig& config) {
    SimConfig cfg = config.resolved();
    cfg.validate();
    Simulator sim = Simulator::from_config(cfg);

    RunResult out;
    out.warmup = cfg.warmup;
    out.t_max = cfg.t_max;
    out.summary.seed = cfg.seed;
    out.summary.params = cfg.params;
    out.summary.n_points = sim.size();
    if (sim.absorbed()) out.summary.t_absorb = 0.0;

    const double T0 = cfg.warmup, T1 = cfg.t_max, dt_batch = (T1 - T0) / run_batches;
    std::vector<double> batch(run_batches, 0.0);
    auto integrate = [&](double a, double b, double v) {
        a = std::max(a, T0);
        b = std::min(b, T1);
        while (a < b) {
            int k = std::min(run_batches - 1, static_cast<int>((a - T0) / dt_batch));
            double edge = k == run_batches - 1 ? T1 : T0 + (k + 1) * dt_batch;
            double e = std::min(b, edge);
            batch[static_cast<std::size_t>(k)] += (e - a) * v;
            a = e;
        }
    };

    double t = 0.0;
    std::size_t k_series = 0, k_snap = 0;
    auto next_series = [&] { return static_cast<double>(k_series) * cfg.snapshot_interval; };
    auto next_snap = [&] { return T0 + static_cast<double>(k_snap) * cfg.snapshot_interval; };

    while (true) {
        double frac = sim.infected_fraction();
        double t_new = sim.absorbed() ? std::numeric_limits<double>::infinity() : t + sim.draw_waiting_time();
        double t_stop = std::min(t_new, T1);
        for (; next_series() <= t_stop; ++k_series) out.series.emplace_back(next_series(), frac);
        for (; next_snap() <= t_stop && !sim.absorbed(); ++k_snap) {
            out.snapshots.push_back(sim.snapshot());
            out.snapshots.back().t = next_snap();
        }
        integrate(t, t_stop, frac);
        if (t_new > T1) break;
        Event ev = sim.apply_event(t_new);
        t = t_new;
        if (cfg.record_events && ev.type != EventType::Jump) out.events.push_back(ev);
        if (sim.absorbed() && !out.summary.t_absorb) out.summary.t_absorb = t;
    }

    double mean = 0.0;
    for (double& b : batch) {
        b /= dt_batch;
        mean += b;
    }
    mean /= run_batches;
    double var = 0.0;
    for (double b : batch) var += (b - mean) * (b - mean);
    var /= (run_batches - 1);
    out.summary.p_mean = mean;
    out.summary.p_stderr = std::sqrt(var / run_batches);
    out.summary.event_counts = sim.counts();
    return out;
}

struct AbsorptionResult {
    double time = 0.0;
    bool censored = false;
    EventCounts event_counts;
};

inline AbsorptionResult run_until_extinction(const SimConfig& config) {
    SimConfig cfg = config.resolved();
    cfg.params.validate();
    cfg.dom.validate(cfg.params.a);
    Simulator sim = Simulator::from_config(cfg);
    double t = 0.0;
    while (!sim.absorbed()) {
        double t_new = t + sim.draw_waiting_time();
        if (t_new > cfg.extinction_cap) return {cfg.extinction_cap, true, sim.counts()};
        sim.apply_event(t_new);
        t = t_new;
    }
    return {t, false, sim.counts()};
}

// Graphical construction shared by several copies of the infection state:
// one recovery clock per particle, one jump clock per particle and one
// infection arrow per ordered neighbour pair. Every copy sees the same
// clocks, so inclusion between initial infected sets is preserved.
class CoupledSimulator {
public:
    CoupledSimulator(const ModelParams& params, const TorusDomain& dom, std::vector<Position> pos,
                     std::vector<std::vector<State>> copies, std::uint64_t seed)
        : prm_(params), dom_(dom), rng_(seed), index_(dom, params.a), deg_fen_(pos.size()),
          pos_(std::move(pos)), deg_(pos_.size(), 0), copies_(std::move(copies)) {
        for (const auto& c : copies_)
            if (c.size() != pos_.size()) throw ConfigError("copy size differs from point count");
        for (std::size_t i = 0; i < pos_.size(); ++i) {
            pos_[i] = dom.wrap(pos_[i]);
            index_.insert(static_cast<int>(i), pos_[i]);
        }
        for (std::size_t i = 0; i < pos_.size(); ++i) {
            deg_[i] = static_cast<int>(index_.neighbors_of(static_cast<int>(i), prm_.a).size());
            deg_fen_.add(i, deg_[i]);
        }
    }

    double time() const { return t_; }
    std::size_t num_copies() const { return copies_.size(); }
    const std::vector<State>& copy(std::size_t k) const { return copies_.at(k); }
    const std::vector<Position>& positions() const { return pos_; }

    // Advances by one clock ring; false when every clock rate is zero.
    bool step() {
        double n = static_cast<double>(pos_.size());
        double rr = prm_.beta * n, rj = prm_.gamma * n, ra = prm_.alpha * static_cast<double>(deg_fen_.total());
        double R = rr + rj + ra;
        if (!(R > 0)) return false;
        t_ += std::exponential_distribution<double>(R)(rng_);
        double u = std::uniform_real_distribution<double>(0.0, R)(rng_);
        std::uniform_int_distribution<std::size_t> any(0, pos_.size() - 1);
        if (u < rr) {
            std::size_t i = any(rng_);
            for (auto& c : copies_) c[i] = State::Susceptible;
        } else if (u < rr + ra) {
            std::uniform_int_distribution<std::int64_t> pick(0, deg_fen_.total() - 1);
            std::size_t i = deg_fen_.find(pick(rng_));
            auto nb = index_.neighbors_of(static_cast<int>(i), prm_.a);
            std::uniform_int_distribution<std::size_t> which(0, nb.size() - 1);
            auto j = static_cast<std::size_t>(nb[which(rng_)]);
            for (auto& c : copies_)
                if (c[i] == State::Infected) c[j] = State::Infected;
        } else {
            std::size_t i = any(rng_);
            relocate(i, uniform_position(dom_, rng_));
        }
        return true;
    }

private:
    void relocate(std::size_t i, Position to) {
        int id = static_cast<int>(i);
        for (int j : index_.neighbors_of(id, prm_.a)) bump(static_cast<std::size_t>(j), -1);
        pos_[i] = to;
        index_.move(id, to);
        auto nb = index_.neighbors_of(id, prm_.a);
        for (int j : nb) bump(static_cast<std::size_t>(j), +1);
        deg_fen_.add(i, static_cast<std::int64_t>(nb.size()) - deg_[i]);
        deg_[i] = static_cast<int>(nb.size());
    }

    void bump(std::size_t j, int d) {
        deg_[j] += d;
        deg_fen_.add(j, d);
    }

    ModelParams prm_;
    TorusDomain dom_;
    Engine rng_;
    CellIndex index_;
    Fenwick deg_fen_;
    std::vector<Position> pos_;
    std::vector<int> deg_;
    std::vector<std::vector<State>> copies_;
    double t_ = 0.0;
};

}  // namespace planar_sis
