#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "netdiff/common.hpp"
#include "netdiff/rng.hpp"

namespace netdiff {

enum class GraphMode { multigraph, erased, rejection_simple };

inline const char* to_string(GraphMode m) {
    switch (m) {
        case GraphMode::multigraph: return "multigraph";
        case GraphMode::erased: return "erased";
        case GraphMode::rejection_simple: return "rejection_simple";
    }
    return "?";
}

inline GraphMode parse_graph_mode(const std::string& s) {
    if (s == "multigraph") return GraphMode::multigraph;
    if (s == "erased") return GraphMode::erased;
    if (s == "rejection_simple") return GraphMode::rejection_simple;
    throw config_error("unknown graph mode '" + s + "'");
}

struct GraphStats {
    std::int64_t edges = 0;
    int max_degree = 0;
    std::int64_t self_loops = 0;   // encountered (multigraph) or removed (erased)
    std::int64_t multi_edges = 0;  // parallel pairs beyond the first copy
    std::map<int, double> realized_degree_pmf;
};

// Undirected multigraph with per-node neighbour lists. A self-loop stores
// the node twice in its own list, so list length always equals the realized
// degree. Immutable once built; safe to share across threads.
class Graph {
public:
    Graph(int n, GraphMode mode) : mode_(mode), adj_(static_cast<std::size_t>(n)) {}

    int node_count() const { return static_cast<int>(adj_.size()); }
    GraphMode mode() const { return mode_; }

    int degree(int v) const { return static_cast<int>(adj_[static_cast<std::size_t>(v)].size()); }
    const std::vector<std::int32_t>& neighbors(int v) const {
        return adj_[static_cast<std::size_t>(v)];
    }

    std::int64_t edge_count() const {
        std::int64_t half_edges = 0;
        for (const auto& list : adj_) half_edges += static_cast<std::int64_t>(list.size());
        return half_edges / 2;
    }

    std::int64_t self_loops() const { return self_loops_; }
    std::int64_t multi_edges() const { return multi_edges_; }

    GraphStats stats() const {
        GraphStats s;
        s.edges = edge_count();
        s.self_loops = self_loops_;
        s.multi_edges = multi_edges_;
        std::map<int, std::int64_t> hist;
        for (int v = 0; v < node_count(); ++v) {
            const int d = degree(v);
            s.max_degree = std::max(s.max_degree, d);
            ++hist[d];
        }
        for (const auto& [d, count] : hist)
            s.realized_degree_pmf[d] =
                static_cast<double>(count) / static_cast<double>(node_count());
        return s;
    }

    // Order-independent structural hash (FNV-1a over sorted neighbour lists).
    std::uint64_t fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&h](std::uint64_t value) {
            h ^= value;
            h *= 0x100000001b3ULL;
        };
        mix(static_cast<std::uint64_t>(node_count()));
        for (int v = 0; v < node_count(); ++v) {
            auto sorted = adj_[static_cast<std::size_t>(v)];
            std::sort(sorted.begin(), sorted.end());
            mix(0xffffffffffffffffULL);
            for (auto w : sorted) mix(static_cast<std::uint64_t>(w));
        }
        return h;
    }

    // One "u,v" line per edge (self-loops once, parallel edges repeated).
    void write_edge_list(std::ostream& out) const {
        out << "u,v\n";
        for (int v = 0; v < node_count(); ++v) {
            int self_halves = 0;
            for (auto w : adj_[static_cast<std::size_t>(v)]) {
                if (w > v) out << v << "," << w << "\n";
                else if (w == v) ++self_halves;
            }
            for (int j = 0; j < self_halves / 2; ++j) out << v << "," << v << "\n";
        }
    }

    friend Graph build_configuration_model(const std::vector<int>& degrees,
                                           GraphMode mode, Rng& rng);

private:
    void add_edge(int u, int v) {
        adj_[static_cast<std::size_t>(u)].push_back(v);
        if (u != v) adj_[static_cast<std::size_t>(v)].push_back(u);
        else adj_[static_cast<std::size_t>(u)].push_back(v);
    }

    GraphMode mode_;
    std::vector<std::vector<std::int32_t>> adj_;
    std::int64_t self_loops_ = 0;
    std::int64_t multi_edges_ = 0;
};

namespace detail {

// Uniform pairing: Fisher-Yates shuffle of the half-edge array, then pair
// consecutive entries. Exactly uniform over perfect matchings.
inline std::vector<std::pair<int, int>> pair_half_edges(const std::vector<int>& degrees,
                                                        Rng& rng) {
    std::vector<std::int32_t> half_edges;
    for (std::size_t v = 0; v < degrees.size(); ++v)
        for (int j = 0; j < degrees[v]; ++j)
            half_edges.push_back(static_cast<std::int32_t>(v));
    for (std::size_t i = half_edges.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
        std::swap(half_edges[i - 1], half_edges[j]);
    }
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(half_edges.size() / 2);
    for (std::size_t i = 0; i + 1 < half_edges.size(); i += 2)
        pairs.emplace_back(half_edges[i], half_edges[i + 1]);
    return pairs;
}

} // namespace detail

inline Graph build_configuration_model(const std::vector<int>& degrees, GraphMode mode,
                                       Rng& rng) {
    std::int64_t total = 0;
    for (int d : degrees) {
        if (d < 0) throw config_error("configuration model: negative degree");
        total += d;
    }
    if (total % 2 != 0) throw config_error("configuration model: odd degree sum");

    const int n = static_cast<int>(degrees.size());
    const std::int64_t max_attempts = 10 * std::max<std::int64_t>(n, 1);

    for (std::int64_t attempt = 0;; ++attempt) {
        Graph g(n, mode);
        auto pairs = detail::pair_half_edges(degrees, rng);

        std::unordered_set<std::uint64_t> seen;
        bool simple = true;
        for (const auto& [u, v] : pairs) {
            const bool loop = (u == v);
            const auto key = static_cast<std::uint64_t>(std::min(u, v)) << 32 |
                             static_cast<std::uint64_t>(std::max(u, v));
            const bool duplicate = !seen.insert(key).second;
            if (loop) ++g.self_loops_;
            if (duplicate && !loop) ++g.multi_edges_;
            switch (mode) {
                case GraphMode::multigraph:
                    g.add_edge(u, v);
                    break;
                case GraphMode::erased:
                    if (!loop && !duplicate) g.add_edge(u, v);
                    break;
                case GraphMode::rejection_simple:
                    if (loop || duplicate) simple = false;
                    else g.add_edge(u, v);
                    break;
            }
            if (!simple) break;
        }

        if (mode != GraphMode::rejection_simple || simple) return g;
        if (attempt + 1 >= max_attempts)
            throw config_error("configuration model: rejection cap exceeded, no simple pairing found");
    }
}

inline GraphStats graph_stats(const Graph& g) { return g.stats(); }

} // namespace netdiff
