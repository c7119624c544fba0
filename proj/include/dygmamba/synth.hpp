#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "dygmamba/graph.hpp"
#include "dygmamba/rng.hpp"

namespace dygmamba {

struct SynthSpec {
    int num_pairs = 40;
    double period = 1.0;
    double decay = 1.1;
    int noise_edges = 2000;
    double horizon = 100.0;
    uint64_t seed = 0;
};

struct SynthResult {
    TemporalGraph graph;
    std::vector<std::pair<NodeId, NodeId>> planted;  // (user, item) node ids
    int num_users = 0;
    int num_items = 0;
};

// Bipartite stream with planted recurring pairs and background noise. Pair i
// is (user i, item i) and fires at geometrically stretching intervals:
// t = 0, then gaps period, period*decay, period*decay^2, ... while t stays
// within the horizon. Noise edges are a uniform without-replacement sample of
// the non-planted (user, item) combinations, each at one uniform timestamp;
// the item universe is sized just large enough to hold them, so by late
// stream times almost every corrupted pair has been seen exactly once while
// noise events themselves are first occurrences.
inline SynthResult synth_dataset(const SynthSpec& spec, int d_N = 1, int d_E = 1) {
    require(spec.num_pairs >= 1, ErrorKind::config, "synth: num_pairs must be >= 1");
    require(spec.period > 0.0, ErrorKind::config, "synth: period must be positive");
    require(spec.decay >= 1.0, ErrorKind::config, "synth: decay must be >= 1");
    require(spec.noise_edges >= 0, ErrorKind::config, "synth: noise_edges must be >= 0");
    require(spec.horizon >= 0.0, ErrorKind::validation,
            "synth: horizon too short for one event per pair");

    const int U = spec.num_pairs;
    const long needed = (long(spec.noise_edges) + U + U - 1) / U;  // ceil((noise+U)/U)
    const int I = int(std::max(long(U), needed));

    SynthResult out;
    out.num_users = U;
    out.num_items = I;
    TemporalGraph& g = out.graph;
    g.num_nodes = U + I;
    g.d_N = d_N;
    g.d_E = d_E;

    for (int i = 0; i < U; ++i) {
        const NodeId user = i, item = NodeId(U + i);
        out.planted.push_back({user, item});
        double t = 0.0, gap = spec.period;
        while (t <= spec.horizon) {
            g.interactions.push_back({user, item, t, -1});
            t += gap;
            gap *= spec.decay;
        }
    }

    Rng rng(splitmix64(spec.seed ^ 0x73796e7468ULL));
    if (spec.noise_edges > 0) {
        std::vector<int64_t> combos;
        combos.reserve(size_t(U) * I - U);
        for (int u = 0; u < U; ++u)
            for (int j = 0; j < I; ++j)
                if (j != u) combos.push_back(int64_t(u) * I + j);
        require(size_t(spec.noise_edges) <= combos.size(), ErrorKind::config,
                "synth: noise_edges exceeds available distinct pairs");
        rng.shuffle(combos);
        for (int e = 0; e < spec.noise_edges; ++e) {
            const int64_t c = combos[e];
            g.interactions.push_back(
                {NodeId(c / I), NodeId(U + c % I), rng.uniform(0.0, spec.horizon), -1});
        }
    }

    std::stable_sort(g.interactions.begin(), g.interactions.end(),
                     [](const Interaction& a, const Interaction& b) { return a.ts < b.ts; });
    g.node_features = Tensor(g.num_nodes, d_N, 0.0);
    g.edge_features = Tensor(int(g.interactions.size()), d_E, 0.0);
    g.build_index();
    g.validate();
    return out;
}

inline void write_edge_csv(const TemporalGraph& g, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot write " + path);
    out << "src,dst,ts\n";
    char buf[64];
    for (const auto& e : g.interactions) {
        std::snprintf(buf, sizeof buf, "%.17g", e.ts);
        out << e.src << "," << e.dst << "," << buf << "\n";
    }
    require(out.good(), ErrorKind::io, "write failed: " + path);
}

}  // namespace dygmamba
