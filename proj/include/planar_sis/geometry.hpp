#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "planar_sis/rng.hpp"

namespace planar_sis {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ModelParams {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 0.0;
    double lambda = 1.0;
    double a = 1.0;

    double mu() const { return lambda * std::numbers::pi * a * a; }

    // lambda chosen so that lambda*pi*a^2 == mu
    static ModelParams from_mu(double mu, double alpha, double beta, double gamma, double a = 1.0) {
        return {alpha, beta, gamma, mu / (std::numbers::pi * a * a), a};
    }

    void validate() const {
        if (!(alpha > 0)) throw ConfigError("alpha must be > 0");
        if (!(beta >= 0)) throw ConfigError("beta must be >= 0");
        if (!(gamma >= 0)) throw ConfigError("gamma must be >= 0");
        if (!(lambda > 0)) throw ConfigError("lambda must be > 0");
        if (!(a > 0)) throw ConfigError("a must be > 0");
    }
};

struct Position {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Position&) const = default;
};

struct TorusDomain {
    double side = 1.0;

    void validate(double a) const {
        if (!(side > 2.0 * a)) throw ConfigError("L must exceed 2a");
    }
    double area() const { return side * side; }

    double wrap(double v) const {
        double w = v - side * std::floor(v / side);
        return w >= side ? 0.0 : w;  // rounding can land exactly on side
    }
    Position wrap(Position p) const { return {wrap(p.x), wrap(p.y)}; }
};

inline double torus_delta(double d, double L) {
    d = std::fabs(d);
    return std::min(d, L - d);
}

inline double torus_distance(Position p, Position q, const TorusDomain& dom) {
    return std::hypot(torus_delta(p.x - q.x, dom.side), torus_delta(p.y - q.y, dom.side));
}

inline double torus_distance2(Position p, Position q, double L) {
    double dx = torus_delta(p.x - q.x, L), dy = torus_delta(p.y - q.y, L);
    return dx * dx + dy * dy;
}

inline constexpr std::size_t default_point_cap = 50'000'000;

template <class Rng>
Position uniform_position(const TorusDomain& dom, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, dom.side);
    double x = u(rng);
    double y = u(rng);
    return dom.wrap(Position{x, y});
}

template <class Rng>
std::vector<Position> sample_poisson(double lambda, const TorusDomain& dom, Rng& rng,
                                     std::size_t cap = default_point_cap) {
    double mean = lambda * dom.area();
    if (!(mean >= 0)) throw ConfigError("lambda*L^2 must be finite and >= 0");
    if (mean > static_cast<double>(cap)) throw ConfigError("lambda*L^2 exceeds point cap");
    std::vector<Position> pts;
    if (mean == 0) return pts;
    std::poisson_distribution<long long> count(mean);
    auto n = static_cast<std::size_t>(count(rng));
    if (n > cap) throw ConfigError("sampled point count exceeds point cap");
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(uniform_position(dom, rng));
    return pts;
}

inline std::vector<Position> sample_poisson(double lambda, const TorusDomain& dom, std::uint64_t seed,
                                            std::size_t cap = default_point_cap) {
    Engine rng(seed);
    return sample_poisson(lambda, dom, rng, cap);
}

// Uniform square cells of edge >= reach; supports insert/erase/move so the
// simulator can keep it current under jumps.
class CellIndex {
public:
    CellIndex(const TorusDomain& dom, double reach) : L_(dom.side), reach_(reach) {
        if (!(reach > 0)) throw ConfigError("cell reach must be > 0");
        n_ = std::max(1, static_cast<int>(std::floor(L_ / reach)));
        edge_ = L_ / n_;
        cells_.assign(static_cast<std::size_t>(n_) * n_, {});
        build_stencils();
    }

    double reach() const { return reach_; }
    double cell_edge() const { return edge_; }
    int cells_per_side() const { return n_; }
    std::size_t size() const { return count_; }

    void insert(int id, Position p) {
        auto i = static_cast<std::size_t>(id);
        if (i >= cell_of_.size()) {
            cell_of_.resize(i + 1, -1);
            slot_of_.resize(i + 1, -1);
            pos_.resize(i + 1);
        }
        if (cell_of_[i] >= 0) throw std::logic_error("CellIndex: id already present");
        int c = cell_id(p);
        cell_of_[i] = c;
        slot_of_[i] = static_cast<int>(cells_[c].size());
        cells_[c].push_back(id);
        pos_[i] = p;
        ++count_;
    }

    void erase(int id) {
        auto i = static_cast<std::size_t>(id);
        int c = cell_of_.at(i);
        if (c < 0) throw std::logic_error("CellIndex: id not present");
        auto& bucket = cells_[c];
        int s = slot_of_[i];
        int last = bucket.back();
        bucket[s] = last;
        slot_of_[static_cast<std::size_t>(last)] = s;
        bucket.pop_back();
        cell_of_[i] = -1;
        slot_of_[i] = -1;
        --count_;
    }

    void move(int id, Position p) {
        auto i = static_cast<std::size_t>(id);
        int c = cell_id(p);
        if (c == cell_of_.at(i)) {
            pos_[i] = p;
            return;
        }
        erase(id);
        insert(id, p);
    }

    Position position(int id) const { return pos_.at(static_cast<std::size_t>(id)); }

    // Calls f(id) for every indexed id with torus distance <= r from p, except `exclude`.
    template <class F>
    void for_each_within(Position p, double r, F&& f, int exclude = -1) const {
        if (r > reach_ * (1 + 1e-12)) throw std::invalid_argument("query radius exceeds cell reach");
        double r2 = r * r;
        const auto& st = stencils_[cell_id(p)];
        for (int k = 0; k < st.count; ++k) {
            for (int id : cells_[st.cells[k]]) {
                if (id == exclude) continue;
                if (torus_distance2(p, pos_[static_cast<std::size_t>(id)], L_) <= r2) f(id);
            }
        }
    }

    std::vector<int> neighbors_within(Position p, double r, int exclude = -1) const {
        std::vector<int> out;
        for_each_within(p, r, [&](int id) { out.push_back(id); }, exclude);
        return out;
    }

    std::vector<int> neighbors_of(int id, double r) const {
        return neighbors_within(position(id), r, id);
    }

private:
    struct Stencil {
        std::array<int, 9> cells{};
        int count = 0;
    };

    int cell_id(Position p) const {
        int cx = std::min(n_ - 1, static_cast<int>(p.x / edge_));
        int cy = std::min(n_ - 1, static_cast<int>(p.y / edge_));
        return cx * n_ + cy;
    }

    void build_stencils() {
        stencils_.resize(cells_.size());
        for (int cx = 0; cx < n_; ++cx)
            for (int cy = 0; cy < n_; ++cy) {
                Stencil& st = stencils_[cx * n_ + cy];
                for (int dx = -1; dx <= 1; ++dx)
                    for (int dy = -1; dy <= 1; ++dy) {
                        int c = ((cx + dx + n_) % n_) * n_ + (cy + dy + n_) % n_;
                        // small grids wrap onto the same cell more than once
                        if (std::find(st.cells.begin(), st.cells.begin() + st.count, c) ==
                            st.cells.begin() + st.count)
                            st.cells[st.count++] = c;
                    }
            }
    }

    double L_;
    double reach_;
    int n_ = 1;
    double edge_ = 1.0;
    std::size_t count_ = 0;
    std::vector<std::vector<int>> cells_;
    std::vector<Stencil> stencils_;
    std::vector<int> cell_of_, slot_of_;
    std::vector<Position> pos_;
};

inline CellIndex build_cell_index(const std::vector<Position>& points, double a, const TorusDomain& dom) {
    CellIndex idx(dom, a);
    for (std::size_t i = 0; i < points.size(); ++i) idx.insert(static_cast<int>(i), points[i]);
    return idx;
}

inline std::vector<int> neighbors_within(const CellIndex& index, Position p, double a, int exclude = -1) {
    return index.neighbors_within(p, a, exclude);
}

}  // namespace planar_sis
