#include <catch_amalgamated.hpp>

#include <set>

#include "dygmamba/graph.hpp"
#include "testutil.hpp"

using namespace dygmamba;
using testutil::TempDir;
using testutil::write_file;

namespace {

LoadedGraph load_csv(const std::string& body, int d_N = 1, int d_E = 1) {
    TempDir tmp("graph");
    write_file(tmp.path("edges.csv"), body);
    return load_graph(tmp.path("edges.csv"), std::nullopt, std::nullopt, d_N, d_E);
}

// brute-force reference for slice_before
std::vector<int32_t> slice_oracle(const TemporalGraph& g, NodeId n, double t) {
    std::vector<int32_t> out;
    for (int32_t i = 0; i < int32_t(g.interactions.size()); ++i) {
        const auto& e = g.interactions[i];
        if ((e.src == n || e.dst == n) && e.ts < t) out.push_back(i);
    }
    return out;
}

TemporalGraph random_graph(int num_nodes, int num_edges, uint64_t seed) {
    Rng rng(seed);
    TemporalGraph g;
    g.num_nodes = num_nodes;
    g.d_N = 1;
    g.d_E = 1;
    double t = 0.0;
    for (int i = 0; i < num_edges; ++i) {
        t += rng.uniform(0.0, 2.0);
        g.interactions.push_back({NodeId(rng.uniform_index(num_nodes)),
                                  NodeId(rng.uniform_index(num_nodes)), t, int32_t(i)});
    }
    g.node_features = Tensor(num_nodes, 1, 0.0);
    g.edge_features = Tensor(num_edges, 1, 0.0);
    g.build_index();
    g.validate();
    return g;
}

}  // namespace

TEST_CASE("load_graph: basic stream and per-node index", "[graph]") {
    auto lg = load_csv("src,dst,ts\n0,1,1.0\n0,2,2.0\n1,2,2.0\n");
    const TemporalGraph& g = lg.graph;
    CHECK(g.num_nodes == 3);
    CHECK(g.interactions.size() == 3);
    CHECK(g.per_node_index[0] == std::vector<int32_t>{0, 1});
    CHECK(g.d_N == 1);
    for (size_t i = 1; i < g.interactions.size(); ++i)
        CHECK(g.interactions[i - 1].ts <= g.interactions[i].ts);
}

TEST_CASE("load_graph: empty body is a valid empty graph", "[graph]") {
    auto lg = load_csv("src,dst,ts\n");
    CHECK(lg.graph.interactions.empty());
    CHECK(lg.graph.num_nodes == 0);
}

TEST_CASE("load_graph: malformed rows carry line numbers", "[graph]") {
    try {
        load_csv("src,dst,ts\n0,1,1.0\n0,zzz,2.0\n");
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::parse);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(load_csv("src;dst;ts\n"), Error);
    CHECK_THROWS_AS(load_csv("src,dst,ts\n0,1\n"), Error);
}

TEST_CASE("load_graph: negative timestamps are rejected", "[graph]") {
    try {
        load_csv("src,dst,ts\n0,1,-3.0\n");
        FAIL("expected validation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::validation);
    }
}

TEST_CASE("load_graph: arbitrary ids are densified in first-appearance order", "[graph]") {
    TempDir tmp("remap");
    write_file(tmp.path("edges.csv"), "src,dst,ts\n100,7,1.0\n7,42,2.0\n");
    auto lg = load_graph(tmp.path("edges.csv"), std::nullopt, std::nullopt, 1, 1);
    CHECK(lg.id_map.dense_to_raw == std::vector<int64_t>{100, 7, 42});
    CHECK(lg.graph.interactions[0].src == 0);
    CHECK(lg.graph.interactions[0].dst == 1);
    write_id_map(lg.id_map, tmp.path("id_map.csv"));
    CHECK(testutil::read_file(tmp.path("id_map.csv")) ==
          "dense_id,raw_id\n0,100\n1,7\n2,42\n");
}

TEST_CASE("load_graph: ties preserve input order under the stable sort", "[graph]") {
    auto lg = load_csv("src,dst,ts\n0,1,5.0\n2,3,5.0\n1,3,5.0\n");
    const auto& es = lg.graph.interactions;
    CHECK(es[0].edge_feat_row == 0);
    CHECK(es[1].edge_feat_row == 1);
    CHECK(es[2].edge_feat_row == 2);
}

TEST_CASE("load_graph: feature files attach by id and validate counts", "[graph]") {
    TempDir tmp("feat");
    write_file(tmp.path("edges.csv"), "src,dst,ts\n10,20,1.0\n20,10,2.0\n");
    write_file(tmp.path("nodes.csv"), "id,f0,f1\n20,3.0,4.0\n10,1.0,2.0\n");
    write_file(tmp.path("edges_feat.csv"), "id,f0\n0,7.5\n1,8.5\n");
    auto lg = load_graph(tmp.path("edges.csv"), tmp.path("nodes.csv"), tmp.path("edges_feat.csv"), 2, 1);
    // node 10 is dense id 0
    CHECK(lg.graph.node_features.at(0, 0) == 1.0);
    CHECK(lg.graph.node_features.at(1, 1) == 4.0);
    CHECK(lg.graph.edge_features.at(1, 0) == 8.5);

    write_file(tmp.path("short.csv"), "id,f0,f1\n10,1.0,2.0\n");
    try {
        load_graph(tmp.path("edges.csv"), tmp.path("short.csv"), std::nullopt, 2, 1);
        FAIL("expected dimension error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::dimension);
    }
}

TEST_CASE("load_graph: missing feature files yield zero features", "[graph]") {
    auto lg = load_csv("src,dst,ts\n0,1,1.0\n", 3, 2);
    for (double x : lg.graph.node_features.v) CHECK(x == 0.0);
    for (double x : lg.graph.edge_features.v) CHECK(x == 0.0);
    CHECK(lg.graph.node_features.cols == 3);
    CHECK(lg.graph.edge_features.cols == 2);
}

TEST_CASE("chronological_split: floor boundaries on distinct timestamps", "[graph]") {
    TemporalGraph g = random_graph(5, 10, 1);
    DataSplit s = chronological_split(g, 0.7, 0.15, 0.15, 0.0, 0);
    CHECK(s.train_end == 7);
    CHECK(s.val_end == 8);
    CHECK(s.size == 10);
    CHECK(s.train_boundary_ts == g.interactions[6].ts);
    CHECK(s.val_boundary_ts == g.interactions[7].ts);
}

TEST_CASE("chronological_split: shared timestamp degenerates", "[graph]") {
    TemporalGraph g;
    g.num_nodes = 2;
    g.d_N = g.d_E = 1;
    for (int i = 0; i < 10; ++i) g.interactions.push_back({0, 1, 4.0, i});
    g.node_features = Tensor(2, 1);
    g.edge_features = Tensor(10, 1);
    g.build_index();
    try {
        chronological_split(g, 0.7, 0.15, 0.15, 0.0, 0);
        FAIL("expected degenerate split");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate_split);
    }
}

TEST_CASE("chronological_split: boundaries never cut equal-timestamp runs", "[graph]") {
    TemporalGraph g;
    g.num_nodes = 4;
    g.d_N = g.d_E = 1;
    // timestamps: 0,1,2,3,4,5,6,6,6,9 - floor boundary at 7 lands inside the run of 6s
    std::vector<double> ts = {0, 1, 2, 3, 4, 5, 6, 6, 6, 9};
    for (size_t i = 0; i < ts.size(); ++i) g.interactions.push_back({0, 1, ts[i], int32_t(i)});
    g.node_features = Tensor(4, 1);
    g.edge_features = Tensor(10, 1);
    g.build_index();
    DataSplit s = chronological_split(g, 0.7, 0.15, 0.15, 0.0, 0);
    CHECK(s.train_end == 9);  // pushed past the tied run
    CHECK(g.interactions[s.train_end - 1].ts != g.interactions[s.train_end].ts);
}

TEST_CASE("chronological_split: bad ratios are config errors", "[graph]") {
    TemporalGraph g = random_graph(5, 10, 2);
    CHECK_THROWS_AS(chronological_split(g, 0.5, 0.2, 0.2, 0.0, 0), Error);
    CHECK_THROWS_AS(chronological_split(g, 0.7, 0.15, 0.15, 1.5, 0), Error);
}

TEST_CASE("chronological_split: unseen sampling matches an independent replay", "[graph]") {
    TemporalGraph g = random_graph(60, 1000, 7);
    DataSplit s = chronological_split(g, 0.7, 0.15, 0.15, 0.1, 7);
    // replay the documented sampler: eval-only candidates, shuffled, floor(frac*n)
    std::vector<char> in_train(g.num_nodes, 0), in_eval(g.num_nodes, 0);
    for (int32_t i = 0; i < s.train_end; ++i) {
        in_train[g.interactions[i].src] = 1;
        in_train[g.interactions[i].dst] = 1;
    }
    for (int32_t i = s.train_end; i < s.size; ++i) {
        in_eval[g.interactions[i].src] = 1;
        in_eval[g.interactions[i].dst] = 1;
    }
    std::vector<NodeId> cand;
    for (NodeId v = 0; v < g.num_nodes; ++v)
        if (in_eval[v] && !in_train[v]) cand.push_back(v);
    Rng rng(7);
    rng.shuffle(cand);
    cand.resize(size_t(0.1 * double(cand.size())));
    std::sort(cand.begin(), cand.end());
    CHECK(s.unseen_nodes == cand);
    for (NodeId v : s.unseen_nodes)
        CHECK(!in_train[v]);

    // determinism
    DataSplit s2 = chronological_split(g, 0.7, 0.15, 0.15, 0.1, 7);
    CHECK(s2.unseen_nodes == s.unseen_nodes);
    CHECK(s2.train_end == s.train_end);
}

TEST_CASE("slice_before: strictness and oracle equivalence", "[graph]") {
    auto lg = load_csv("src,dst,ts\n0,1,1.0\n0,2,2.0\n0,1,5.0\n");
    const TemporalGraph& g = lg.graph;
    CHECK(g.slice_before(2, 1.5).empty());
    CHECK(g.slice_before(0, 5.0) == std::vector<int32_t>{0, 1});  // ts 5 excluded
    CHECK_THROWS_AS(g.slice_before(99, 1.0), Error);

    TemporalGraph r = random_graph(8, 50, 3);
    Rng rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        NodeId n = NodeId(rng.uniform_index(8));
        double t = rng.uniform(0.0, 60.0);
        CHECK(r.slice_before(n, t) == slice_oracle(r, n, t));
    }
}

TEST_CASE("slice_before partitions the per-node index", "[graph]") {
    TemporalGraph g = random_graph(6, 80, 5);
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        NodeId n = NodeId(rng.uniform_index(6));
        double t = rng.uniform(0.0, 100.0);
        auto before = g.slice_before(n, t);
        std::vector<int32_t> after;
        for (int32_t i : g.per_node_index[n])
            if (g.interactions[i].ts >= t) after.push_back(i);
        std::vector<int32_t> merged = before;
        merged.insert(merged.end(), after.begin(), after.end());
        CHECK(merged == g.per_node_index[n]);
    }
}

TEST_CASE("split ranges cover the stream exactly once", "[graph]") {
    TemporalGraph g = random_graph(10, 200, 9);
    DataSplit s = chronological_split(g, 0.7, 0.15, 0.15, 0.05, 1);
    CHECK(0 < s.train_end);
    CHECK(s.train_end < s.val_end);
    CHECK(s.val_end < s.size);
    CHECK(s.size == 200);
    CHECK(g.interactions[s.train_end - 1].ts <= g.interactions[s.train_end].ts);
    CHECK(g.interactions[s.val_end - 1].ts <= g.interactions[s.val_end].ts);
}
