#pragma once

#include <algorithm>
#include <unordered_map>
#include <vector>

#include "dygmamba/graph.hpp"

namespace dygmamba {

inline constexpr double kSentinelDelta = 1e10;

struct NeighborEntry {
    NodeId neighbor = 0;       // opposite endpoint
    double ts = 0.0;
    int32_t edge_feat_row = -1;
};

// A node's most recent one-hop interactions before query_ts (both directions),
// truncated to the rho most recent, plus the terminal (owner, query_ts) self
// entry that every sequence carries.
struct NeighborSequence {
    NodeId owner = 0;
    double query_ts = 0.0;
    std::vector<NeighborEntry> entries;  // chronological, all ts < query_ts

    int length_with_self() const { return int(entries.size()) + 1; }
};

// Gaps between the k most recent co-interactions of a pair and the query
// time. Exactly k slots; missing ones hold the sentinel on the old side so
// the final slot always means "time since the last co-interaction".
struct TimeDeltaSequence {
    std::vector<double> deltas;
    int found_count = 0;
};

inline NeighborSequence recent_neighbors(const TemporalGraph& g, NodeId node, double t, int rho) {
    require(rho >= 1, ErrorKind::config, "recent_neighbors: rho must be >= 1");
    g.check_node(node);
    NeighborSequence seq;
    seq.owner = node;
    seq.query_ts = t;
    const auto& idx = g.per_node_index[node];
    auto it = std::upper_bound(idx.begin(), idx.end(), t,
                               [&g](double tt, int32_t i) { return g.interactions[i].ts >= tt; });
    auto begin = it - idx.begin() > rho ? it - rho : idx.begin();
    for (auto p = begin; p != it; ++p) {
        const Interaction& e = g.interactions[*p];
        seq.entries.push_back({e.src == node ? e.dst : e.src, e.ts, e.edge_feat_row});
    }
    return seq;
}

// Number of interactions between u and v (either direction) strictly before t,
// over the full available history.
inline int pair_history_count(const TemporalGraph& g, NodeId u, NodeId v, double t) {
    g.check_node(u);
    g.check_node(v);
    const auto& iu = g.per_node_index[u];
    const auto& iv = g.per_node_index[v];
    const auto& idx = iu.size() <= iv.size() ? iu : iv;
    int count = 0;
    for (int32_t i : idx) {
        const Interaction& e = g.interactions[i];
        if (e.ts >= t) break;
        if ((e.src == u && e.dst == v) || (e.src == v && e.dst == u)) ++count;
    }
    return count;
}

inline TimeDeltaSequence co_interaction_deltas(const TemporalGraph& g, NodeId u, NodeId v,
                                               double t, int k) {
    require(k >= 1, ErrorKind::config, "co_interaction_deltas: k must be >= 1");
    g.check_node(u);
    g.check_node(v);
    const auto& iu = g.per_node_index[u];
    const auto& iv = g.per_node_index[v];
    const auto& idx = iu.size() <= iv.size() ? iu : iv;
    auto it = std::upper_bound(idx.begin(), idx.end(), t,
                               [&g](double tt, int32_t i) { return g.interactions[i].ts >= tt; });
    // walk backwards collecting the k most recent co-interaction timestamps
    std::vector<double> ts;
    for (auto p = it; p != idx.begin() && int(ts.size()) < k;) {
        --p;
        const Interaction& e = g.interactions[*p];
        if ((e.src == u && e.dst == v) || (e.src == v && e.dst == u)) ts.push_back(e.ts);
    }
    std::reverse(ts.begin(), ts.end());  // oldest first

    TimeDeltaSequence out;
    out.found_count = int(ts.size());
    out.deltas.assign(k, kSentinelDelta);
    if (!ts.empty()) {
        // gaps t1-t0, ..., t - t_{m-1}, right-aligned
        const int m = int(ts.size());
        for (int i = 0; i + 1 < m; ++i) out.deltas[k - m + i] = ts[i + 1] - ts[i];
        out.deltas[k - 1] = t - ts[m - 1];
    }
    return out;
}

// Interaction-frequency features for both sequences. Counts are taken over
// the full appended sequences (each owner contributes one occurrence), and
// column 0 / column 1 always hold the count in u's / v's sequence. The
// appended self rows are overridden with [0, pair_history_count]. Output has
// one row per entry plus the self row.
inline std::pair<Tensor, Tensor> cooccurrence_counts(const NeighborSequence& seq_u,
                                                     const NeighborSequence& seq_v,
                                                     int pair_history) {
    require(seq_u.query_ts == seq_v.query_ts, ErrorKind::validation,
            "cooccurrence_counts: sequences must share the query timestamp");
    std::unordered_map<NodeId, int> mu, mv;
    for (const auto& e : seq_u.entries) ++mu[e.neighbor];
    ++mu[seq_u.owner];
    for (const auto& e : seq_v.entries) ++mv[e.neighbor];
    ++mv[seq_v.owner];

    auto count = [](const std::unordered_map<NodeId, int>& m, NodeId x) {
        auto it = m.find(x);
        return it == m.end() ? 0 : it->second;
    };
    auto build = [&](const NeighborSequence& seq) {
        Tensor c(seq.length_with_self(), 2);
        for (size_t i = 0; i < seq.entries.size(); ++i) {
            c.at(int(i), 0) = count(mu, seq.entries[i].neighbor);
            c.at(int(i), 1) = count(mv, seq.entries[i].neighbor);
        }
        c.at(c.rows - 1, 0) = 0.0;
        c.at(c.rows - 1, 1) = double(pair_history);
        return c;
    };
    return {build(seq_u), build(seq_v)};
}

}  // namespace dygmamba
