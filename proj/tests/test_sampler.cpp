#include <catch_amalgamated.hpp>

#include <map>

#include "dygmamba/sampler.hpp"
#include "testutil.hpp"

using namespace dygmamba;

namespace {

TemporalGraph make_graph(std::vector<Interaction> es, int num_nodes) {
    TemporalGraph g;
    g.num_nodes = num_nodes;
    g.d_N = g.d_E = 1;
    g.interactions = std::move(es);
    std::stable_sort(g.interactions.begin(), g.interactions.end(),
                     [](const Interaction& a, const Interaction& b) { return a.ts < b.ts; });
    g.node_features = Tensor(num_nodes, 1);
    g.edge_features = Tensor(int(g.interactions.size()), 1);
    g.build_index();
    g.validate();
    return g;
}

// brute-force counting oracle over the appended sequences
std::pair<Tensor, Tensor> counts_oracle(const NeighborSequence& su, const NeighborSequence& sv,
                                        int pair_history) {
    auto nodes_with_self = [](const NeighborSequence& s) {
        std::vector<NodeId> out;
        for (const auto& e : s.entries) out.push_back(e.neighbor);
        out.push_back(s.owner);
        return out;
    };
    auto count_in = [](const std::vector<NodeId>& xs, NodeId x) {
        int c = 0;
        for (NodeId y : xs) c += y == x;
        return c;
    };
    std::vector<NodeId> mu = nodes_with_self(su), mv = nodes_with_self(sv);
    auto build = [&](const NeighborSequence& s) {
        Tensor t(int(s.entries.size()) + 1, 2);
        for (size_t i = 0; i < s.entries.size(); ++i) {
            t.at(int(i), 0) = count_in(mu, s.entries[i].neighbor);
            t.at(int(i), 1) = count_in(mv, s.entries[i].neighbor);
        }
        t.at(t.rows - 1, 0) = 0;
        t.at(t.rows - 1, 1) = pair_history;
        return t;
    };
    return {build(su), build(sv)};
}

}  // namespace

TEST_CASE("recent_neighbors: empty history keeps only the self entry", "[sampler]") {
    TemporalGraph g = make_graph({{0, 1, 1.0, 0}}, 3);
    NeighborSequence s = recent_neighbors(g, 2, 5.0, 4);
    CHECK(s.entries.empty());
    CHECK(s.owner == 2);
    CHECK(s.query_ts == 5.0);
    CHECK(s.length_with_self() == 1);
    CHECK_THROWS_AS(recent_neighbors(g, 9, 5.0, 4), Error);
}

TEST_CASE("recent_neighbors: keeps the latest rho, chronological", "[sampler]") {
    TemporalGraph g = make_graph({{0, 1, 1.0, 0},
                                  {2, 0, 2.0, 1},
                                  {0, 3, 3.0, 2},
                                  {4, 0, 4.0, 3},
                                  {0, 5, 5.0, 4}},
                                 6);
    NeighborSequence s = recent_neighbors(g, 0, 9.0, 3);
    REQUIRE(s.entries.size() == 3);
    CHECK(s.entries[0].neighbor == 3);
    CHECK(s.entries[1].neighbor == 4);
    CHECK(s.entries[2].neighbor == 5);
    CHECK(s.entries[0].ts == 3.0);
    CHECK(s.entries[2].ts == 5.0);
}

TEST_CASE("recent_neighbors: equals sort-then-tail of the history slice", "[sampler]") {
    Rng rng(11);
    std::vector<Interaction> es;
    double t = 0;
    for (int i = 0; i < 120; ++i) {
        t += rng.uniform(0.0, 1.0);
        es.push_back({NodeId(rng.uniform_index(7)), NodeId(rng.uniform_index(7)), t, int32_t(i)});
    }
    TemporalGraph g = make_graph(std::move(es), 7);
    for (int trial = 0; trial < 25; ++trial) {
        NodeId n = NodeId(rng.uniform_index(7));
        double q = rng.uniform(0.0, t + 1.0);
        NeighborSequence s = recent_neighbors(g, n, q, 8);
        auto idx = g.slice_before(n, q);  // oracle: brute slice, tail 8
        size_t start = idx.size() > 8 ? idx.size() - 8 : 0;
        REQUIRE(s.entries.size() == idx.size() - start);
        for (size_t i = start; i < idx.size(); ++i) {
            const Interaction& e = g.interactions[idx[i]];
            const NeighborEntry& got = s.entries[i - start];
            CHECK(got.ts == e.ts);
            CHECK(got.neighbor == (e.src == n ? e.dst : e.src));
            CHECK(got.edge_feat_row == e.edge_feat_row);
        }
        for (size_t i = 1; i < s.entries.size(); ++i) CHECK(s.entries[i - 1].ts <= s.entries[i].ts);
    }
}

TEST_CASE("co_interaction_deltas: sentinel padding on the old side", "[sampler]") {
    TemporalGraph g = make_graph({{0, 1, 3.0, 0}, {0, 2, 4.0, 1}}, 3);
    TimeDeltaSequence d = co_interaction_deltas(g, 0, 1, 10.0, 2);
    CHECK(d.found_count == 1);
    REQUIRE(d.deltas.size() == 2);
    CHECK(d.deltas[0] == 1e10);
    CHECK(d.deltas[1] == 7.0);
}

TEST_CASE("co_interaction_deltas: no history means all sentinels", "[sampler]") {
    TemporalGraph g = make_graph({{0, 1, 3.0, 0}}, 4);
    TimeDeltaSequence d = co_interaction_deltas(g, 2, 3, 5.0, 3);
    CHECK(d.found_count == 0);
    for (double x : d.deltas) CHECK(x == 1e10);
}

TEST_CASE("co_interaction_deltas: gaps between consecutive co-interactions", "[sampler]") {
    TemporalGraph g = make_graph({{0, 1, 1.0, 0}, {1, 0, 4.0, 1}, {0, 1, 9.0, 2}}, 2);
    TimeDeltaSequence d = co_interaction_deltas(g, 0, 1, 11.0, 3);
    CHECK(d.found_count == 3);
    CHECK(d.deltas == std::vector<double>{3.0, 5.0, 2.0});
    // both directions count; truncation keeps the nearest k
    TimeDeltaSequence d2 = co_interaction_deltas(g, 0, 1, 11.0, 2);
    CHECK(d2.found_count == 2);
    CHECK(d2.deltas == std::vector<double>{5.0, 2.0});
}

TEST_CASE("co_interaction_deltas: full windows telescope to t - t_first", "[sampler]") {
    Rng rng(12);
    std::vector<Interaction> es;
    double t = 0;
    for (int i = 0; i < 40; ++i) {
        t += rng.uniform(0.1, 1.0);
        es.push_back({0, 1, t, int32_t(i)});
    }
    TemporalGraph g = make_graph(std::move(es), 2);
    for (int k : {1, 3, 7}) {
        double q = t + 2.0;
        TimeDeltaSequence d = co_interaction_deltas(g, 0, 1, q, k);
        REQUIRE(d.found_count == k);
        double sum = 0;
        for (double x : d.deltas) sum += x;
        // oldest co-interaction in the window is the k-th most recent
        const auto& idx = g.per_node_index[0];
        double t_first = g.interactions[idx[idx.size() - k]].ts;
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(q - t_first, 1e-9));
    }
}

TEST_CASE("cooccurrence_counts reproduces the worked frequency example", "[sampler]") {
    // u's neighbors {a, v, a}; v's neighbors {b, b, u, a}; one u-v co-interaction
    const NodeId u = 0, v = 1, a = 2, b = 3;
    TemporalGraph g = make_graph({{v, b, 0.5, 0},
                                  {u, a, 1.0, 1},
                                  {v, b, 1.5, 2},
                                  {u, v, 2.0, 3},
                                  {v, a, 2.5, 4},
                                  {u, a, 3.0, 5}},
                                 4);
    NeighborSequence su = recent_neighbors(g, u, 4.0, 10);
    NeighborSequence sv = recent_neighbors(g, v, 4.0, 10);
    REQUIRE(su.entries.size() == 3);
    REQUIRE(sv.entries.size() == 4);
    int pair_hist = pair_history_count(g, u, v, 4.0);
    CHECK(pair_hist == 1);
    auto [cu, cv] = cooccurrence_counts(su, sv, pair_hist);
    Tensor expect_u = Tensor::from_rows(4, 2, {2, 1, 1, 1, 2, 1, 0, 1});
    Tensor expect_v = Tensor::from_rows(5, 2, {0, 2, 0, 2, 1, 1, 2, 1, 0, 1});
    CHECK(cu.v == expect_u.v);
    CHECK(cv.v == expect_v.v);
}

TEST_CASE("cooccurrence_counts: disjoint neighbors zero the cross column", "[sampler]") {
    // u interacts with {2,3}, v with {4,5}; u and v never meet
    TemporalGraph g = make_graph({{0, 2, 1.0, 0}, {0, 3, 2.0, 1}, {1, 4, 1.5, 2}, {1, 5, 2.5, 3}}, 6);
    NeighborSequence su = recent_neighbors(g, 0, 5.0, 10);
    NeighborSequence sv = recent_neighbors(g, 1, 5.0, 10);
    auto [cu, cv] = cooccurrence_counts(su, sv, 0);
    for (int i = 0; i + 1 < cu.rows; ++i) CHECK(cu.at(i, 1) == 0.0);
    CHECK(cu.at(cu.rows - 1, 1) == 0.0);  // pair history is zero here
    for (int i = 0; i + 1 < cv.rows; ++i) CHECK(cv.at(i, 0) == 0.0);
}

TEST_CASE("cooccurrence_counts: random sequences match nested-loop counting", "[sampler]") {
    Rng rng(13);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<Interaction> es;
        double t = 0;
        for (int i = 0; i < 18; ++i) {
            t += rng.uniform(0.1, 1.0);
            es.push_back({NodeId(rng.uniform_index(5)), NodeId(rng.uniform_index(5)), t, int32_t(i)});
        }
        TemporalGraph g = make_graph(std::move(es), 5);
        NodeId u = NodeId(rng.uniform_index(5)), v = NodeId(rng.uniform_index(5));
        double q = t + 1.0;
        NeighborSequence su = recent_neighbors(g, u, q, 6);
        NeighborSequence sv = recent_neighbors(g, v, q, 6);
        int ph = pair_history_count(g, u, v, q);
        auto [cu, cv] = cooccurrence_counts(su, sv, ph);
        auto [ou, ov] = counts_oracle(su, sv, ph);
        CHECK(cu.v == ou.v);
        CHECK(cv.v == ov.v);
        // recount self-consistency on the own column
        for (size_t i = 0; i < su.entries.size(); ++i) {
            int m = 0;
            for (const auto& e : su.entries) m += e.neighbor == su.entries[i].neighbor;
            m += su.owner == su.entries[i].neighbor;
            CHECK(cu.at(int(i), 0) == double(m));
        }
    }
}

TEST_CASE("cooccurrence_counts requires a shared query timestamp", "[sampler]") {
    TemporalGraph g = make_graph({{0, 1, 1.0, 0}}, 2);
    NeighborSequence a = recent_neighbors(g, 0, 2.0, 4);
    NeighborSequence b = recent_neighbors(g, 1, 3.0, 4);
    CHECK_THROWS_AS(cooccurrence_counts(a, b, 0), Error);
}
