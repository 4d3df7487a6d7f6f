#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "netdiff/common.hpp"
#include "netdiff/graph.hpp"
#include "netdiff/rng.hpp"

namespace netdiff {

namespace detail {

// Fenwick tree over non-negative integer node weights; supports point update
// and sampling a node proportionally to its weight in O(log n).
class WeightTree {
public:
    explicit WeightTree(int n) : tree_(static_cast<std::size_t>(n) + 1, 0), size_(n) {}

    void add(int index, std::int64_t delta) {
        for (int i = index + 1; i <= size_; i += i & -i)
            tree_[static_cast<std::size_t>(i)] += delta;
    }

    std::int64_t total() const {
        std::int64_t s = 0;
        for (int i = size_; i > 0; i -= i & -i) s += tree_[static_cast<std::size_t>(i)];
        return s;
    }

    // Smallest index whose prefix sum exceeds `target` (0 <= target < total).
    int find(std::int64_t target) const {
        int pos = 0;
        int bit = 1;
        while ((bit << 1) <= size_) bit <<= 1;
        for (; bit > 0; bit >>= 1) {
            const int next = pos + bit;
            if (next <= size_ && tree_[static_cast<std::size_t>(next)] <= target) {
                pos = next;
                target -= tree_[static_cast<std::size_t>(next)];
            }
        }
        return pos;
    }

private:
    std::vector<std::int64_t> tree_;
    int size_;
};

} // namespace detail

enum class NodeStatus : std::uint8_t { susceptible = 0, infected = 1 };

struct InfectionEvent {
    double t = 0.0;
    std::int32_t node = -1;
    std::int32_t dx_si = 0;
    std::int32_t dx_ss = 0;
    static constexpr int dx_s = -1;
};

// Aggregate counts plus the per-susceptible infected-neighbour tallies that
// drive event selection. One instance is strictly single-threaded.
class EpidemicState {
public:
    // Starts with every node susceptible.
    EpidemicState(const Graph& graph, double beta)
        : graph_(&graph),
          beta_(beta),
          status_(static_cast<std::size_t>(graph.node_count()), NodeStatus::susceptible),
          infected_neighbors_(static_cast<std::size_t>(graph.node_count()), 0),
          weights_(graph.node_count()),
          x_s_(graph.node_count()) {
        for (int v = 0; v < graph.node_count(); ++v)
            x_ss_ += graph.degree(v);
    }

    const Graph& graph() const { return *graph_; }
    double beta() const { return beta_; }
    double time() const { return t_; }
    NodeStatus status(int v) const { return status_[static_cast<std::size_t>(v)]; }
    std::int32_t infected_neighbors(int v) const {
        return infected_neighbors_[static_cast<std::size_t>(v)];
    }

    std::int64_t x_s() const { return x_s_; }
    std::int64_t x_i() const { return static_cast<std::int64_t>(graph_->node_count()) - x_s_; }
    std::int64_t x_si() const { return x_si_; }
    std::int64_t x_ss() const { return x_ss_; }
    std::int64_t x_sdot() const { return x_si_ + x_ss_; }

    // Mark `node` infected at time `when` and maintain all counts exactly.
    InfectionEvent apply_infection(int node, double when) {
        const auto idx = static_cast<std::size_t>(node);
        if (status_[idx] == NodeStatus::infected)
            throw config_error("apply_infection: node is already infected");
        const std::int32_t n_si = infected_neighbors_[idx];
        const std::int32_t n_ss = static_cast<std::int32_t>(graph_->degree(node)) - n_si;

        InfectionEvent ev;
        ev.node = static_cast<std::int32_t>(node);
        ev.t = when;

        status_[idx] = NodeStatus::infected;
        weights_.add(node, -static_cast<std::int64_t>(n_si));
        --x_s_;
        x_si_ -= n_si;
        x_ss_ -= n_ss;
        std::int32_t converted = 0;
        for (auto w : graph_->neighbors(node)) {
            if (status_[static_cast<std::size_t>(w)] != NodeStatus::susceptible) continue;
            ++converted; // an SS contact of w turned into an SI contact
            ++infected_neighbors_[static_cast<std::size_t>(w)];
            weights_.add(w, 1);
        }
        x_si_ += converted;
        x_ss_ -= converted;
        t_ = when;

        ev.dx_si = converted - n_si;
        ev.dx_ss = -(n_ss + converted);
        return ev;
    }

    // One exact jump of the process: exponential waiting time with rate
    // beta * x_si, infecting node chosen proportionally to its SI contacts.
    // Returns nothing once no SI contact remains (or beta == 0).
    std::optional<InfectionEvent> step(Rng& rng) {
        if (x_si_ <= 0 || beta_ <= 0.0) return std::nullopt;
        const double rate = beta_ * static_cast<double>(x_si_);
        const double wait = rng.exponential(rate);
        const auto target =
            static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(x_si_)));
        const int node = weights_.find(target);
        return apply_infection(node, t_ + wait);
    }

    // Recomputes every count from the adjacency structure and compares with
    // the incremental counters; exact equality required.
    bool check_consistency() const {
        std::int64_t s = 0, si = 0, ss = 0;
        for (int v = 0; v < graph_->node_count(); ++v) {
            if (status_[static_cast<std::size_t>(v)] != NodeStatus::susceptible) continue;
            ++s;
            std::int32_t inf = 0, sus = 0;
            for (auto w : graph_->neighbors(v)) {
                if (status_[static_cast<std::size_t>(w)] == NodeStatus::infected) ++inf;
                else ++sus;
            }
            if (inf != infected_neighbors_[static_cast<std::size_t>(v)]) return false;
            si += inf;
            ss += sus;
        }
        return s == x_s_ && si == x_si_ && ss == x_ss_ && ss % 2 == 0 &&
               weights_.total() == x_si_;
    }

private:
    const Graph* graph_;
    double beta_;
    double t_ = 0.0;
    std::vector<NodeStatus> status_;
    std::vector<std::int32_t> infected_neighbors_;
    detail::WeightTree weights_;
    std::int64_t x_s_ = 0;
    std::int64_t x_si_ = 0;
    std::int64_t x_ss_ = 0;

    friend EpidemicState init_epidemic(const Graph& graph, double beta, double alpha_s,
                                       Rng& rng);
};

// Infects round((1 - alpha_s) * n) nodes chosen uniformly without
// replacement; everything else starts susceptible.
inline EpidemicState init_epidemic(const Graph& graph, double beta, double alpha_s,
                                   Rng& rng) {
    if (!(alpha_s > 0.0 && alpha_s <= 1.0))
        throw config_error("init_epidemic: alpha_s must lie in (0, 1]");
    const int n = graph.node_count();
    const auto infected_count =
        static_cast<int>(std::llround((1.0 - alpha_s) * static_cast<double>(n)));

    EpidemicState state(graph, beta);
    std::vector<std::int32_t> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    for (int j = 0; j < infected_count; ++j) {
        const auto pick = j + static_cast<int>(rng.uniform_below(
                                  static_cast<std::uint64_t>(n - j)));
        std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(pick)]);
        state.status_[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] =
            NodeStatus::infected;
    }

    std::int64_t si = 0, sdot = 0;
    for (int v = 0; v < n; ++v) {
        if (state.status_[static_cast<std::size_t>(v)] != NodeStatus::susceptible) continue;
        std::int32_t inf = 0;
        for (auto w : graph.neighbors(v))
            if (state.status_[static_cast<std::size_t>(w)] == NodeStatus::infected) ++inf;
        state.infected_neighbors_[static_cast<std::size_t>(v)] = inf;
        if (inf > 0) state.weights_.add(v, inf);
        si += inf;
        sdot += graph.degree(v);
    }
    state.x_s_ = static_cast<std::int64_t>(n) - infected_count;
    state.x_si_ = si;
    state.x_ss_ = sdot - si;
    return state;
}

struct Counts {
    std::int64_t x_s = 0;
    std::int64_t x_si = 0;
    std::int64_t x_ss = 0;
    std::int64_t x_i = 0;
};

// Event log of one run. Events are strictly increasing in time; replaying
// the deltas reproduces the aggregate counts.
struct Trajectory {
    Counts initial;
    std::vector<InfectionEvent> events;
    double horizon = 0.0;
    int n = 0;
    double beta = 0.0;
    double alpha_s = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t graph_fingerprint = 0;
    std::string dist_descriptor;

    // Right-continuous value at time t (a jump at exactly t is included).
    Counts counts_at(double t) const {
        if (t < 0.0 || t > horizon)
            throw config_error("counts_at: time outside [0, T]");
        Counts c = initial;
        for (const auto& ev : events) {
            if (ev.t > t) break;
            c.x_s += InfectionEvent::dx_s;
            c.x_i -= InfectionEvent::dx_s;
            c.x_si += ev.dx_si;
            c.x_ss += ev.dx_ss;
        }
        return c;
    }

    // Events with t0 <= t <= t1.
    std::vector<InfectionEvent> jump_series(double t0, double t1) const {
        std::vector<InfectionEvent> out;
        for (const auto& ev : events)
            if (ev.t >= t0 && ev.t <= t1) out.push_back(ev);
        return out;
    }

    // Path integral of x_si / x_sdot up to t; exp(-beta * integral) is the
    // empirical counterpart of the mean-field survival variable.
    double si_density_integral(double t) const {
        Counts c = initial;
        double acc = 0.0;
        double prev = 0.0;
        for (const auto& ev : events) {
            const double upto = std::min(ev.t, t);
            if (upto > prev) {
                const auto sdot = c.x_si + c.x_ss;
                if (sdot > 0)
                    acc += (upto - prev) * static_cast<double>(c.x_si) /
                           static_cast<double>(sdot);
                prev = upto;
            }
            if (ev.t > t) return acc;
            c.x_s += InfectionEvent::dx_s;
            c.x_si += ev.dx_si;
            c.x_ss += ev.dx_ss;
        }
        const auto sdot = c.x_si + c.x_ss;
        if (t > prev && sdot > 0)
            acc += (t - prev) * static_cast<double>(c.x_si) / static_cast<double>(sdot);
        return acc;
    }
};

inline Trajectory simulate(const Graph& graph, double beta, double alpha_s, double horizon,
                           Rng& rng) {
    if (!(horizon > 0.0)) throw config_error("simulate: T must be positive");
    EpidemicState state = init_epidemic(graph, beta, alpha_s, rng);

    Trajectory traj;
    traj.initial = Counts{state.x_s(), state.x_si(), state.x_ss(), state.x_i()};
    traj.horizon = horizon;
    traj.n = graph.node_count();
    traj.beta = beta;
    traj.alpha_s = alpha_s;
    traj.graph_fingerprint = graph.fingerprint();

    while (true) {
        auto ev = state.step(rng);
        if (!ev || ev->t > horizon) break;
        traj.events.push_back(*ev);
    }
    return traj;
}

} // namespace netdiff
