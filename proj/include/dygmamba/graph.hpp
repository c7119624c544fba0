#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dygmamba/errors.hpp"
#include "dygmamba/rng.hpp"
#include "dygmamba/tensor.hpp"

namespace dygmamba {

using NodeId = int32_t;

struct Interaction {
    NodeId src = 0;
    NodeId dst = 0;
    double ts = 0.0;
    int32_t edge_feat_row = -1;  // -1: no attached edge feature
};

// Immutable chronological interaction stream with dense node ids, feature
// tables and a per-node index. Construction is single-threaded; afterwards
// the structure is read-only and safe to share across threads.
struct TemporalGraph {
    std::vector<Interaction> interactions;
    Tensor node_features;  // num_nodes x d_N (zero when non-attributed)
    Tensor edge_features;  // num_interactions x d_E (rows follow input order)
    std::vector<std::vector<int32_t>> per_node_index;
    int num_nodes = 0;
    int d_N = 0;
    int d_E = 0;

    void check_node(NodeId n) const {
        require(n >= 0 && n < num_nodes, ErrorKind::id,
                "invalid node id " + std::to_string(n));
    }

    void build_index() {
        per_node_index.assign(num_nodes, {});
        for (int32_t i = 0; i < int32_t(interactions.size()); ++i) {
            const Interaction& e = interactions[i];
            per_node_index[e.src].push_back(i);
            if (e.dst != e.src) per_node_index[e.dst].push_back(i);
        }
    }

    void validate() const {
        for (size_t i = 0; i < interactions.size(); ++i) {
            const Interaction& e = interactions[i];
            require(e.src >= 0 && e.src < num_nodes && e.dst >= 0 && e.dst < num_nodes,
                    ErrorKind::validation, "interaction " + std::to_string(i) + ": node id out of range");
            require(e.ts >= 0.0, ErrorKind::validation,
                    "interaction " + std::to_string(i) + ": negative timestamp");
            if (i > 0)
                require(interactions[i - 1].ts <= e.ts, ErrorKind::validation,
                        "interactions not chronologically ordered at " + std::to_string(i));
        }
    }

    // Interaction indices involving `node` with ts strictly before t,
    // chronological.
    std::vector<int32_t> slice_before(NodeId node, double t) const {
        check_node(node);
        const auto& idx = per_node_index[node];
        auto it = std::upper_bound(idx.begin(), idx.end(), t,
                                   [this](double tt, int32_t i) { return interactions[i].ts >= tt; });
        // upper_bound with this predicate finds the first entry with ts >= t
        return std::vector<int32_t>(idx.begin(), it);
    }
};

struct DataSplit {
    // [train_begin=0, train_end), [train_end, val_end), [val_end, size)
    int32_t train_end = 0;
    int32_t val_end = 0;
    int32_t size = 0;
    std::vector<NodeId> unseen_nodes;  // sorted
    double train_boundary_ts = 0.0;
    double val_boundary_ts = 0.0;

    bool is_unseen(NodeId n) const {
        return std::binary_search(unseen_nodes.begin(), unseen_nodes.end(), n);
    }
};

struct IdMap {
    std::vector<int64_t> dense_to_raw;  // dense id -> original id
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    for (auto& s : out) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
        size_t b = s.find_first_not_of(" \t");
        if (b == std::string::npos)
            s.clear();
        else if (b > 0)
            s = s.substr(b);
    }
    return out;
}

inline double parse_double(const std::string& s, size_t line_no, const std::string& what) {
    double x = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size())
        raise(ErrorKind::parse, "line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    return x;
}

inline int64_t parse_int(const std::string& s, size_t line_no, const std::string& what) {
    int64_t x = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size())
        raise(ErrorKind::parse, "line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    return x;
}

}  // namespace detail

struct LoadedGraph {
    TemporalGraph graph;
    IdMap id_map;
};

// Loads `src,dst,ts` CSV. Arbitrary integer node ids are remapped to dense
// 0..num_nodes-1 in order of first appearance; the mapping is returned.
// Missing feature files yield zero features of the configured dims. Rows are
// stably sorted by timestamp, so input order is preserved among ties.
inline LoadedGraph load_graph(const std::string& edge_csv_path,
                              const std::optional<std::string>& node_feat_path,
                              const std::optional<std::string>& edge_feat_path,
                              int d_N, int d_E) {
    require(d_N >= 0 && d_E >= 0, ErrorKind::config, "load_graph: negative feature dims");
    std::ifstream in(edge_csv_path);
    require(in.good(), ErrorKind::io, "cannot open " + edge_csv_path);

    std::string line;
    size_t line_no = 0;
    require(bool(std::getline(in, line)), ErrorKind::parse, "empty edge file (missing header)");
    ++line_no;
    {
        auto hdr = detail::split_csv_line(line);
        require(hdr.size() == 3 && hdr[0] == "src" && hdr[1] == "dst" && hdr[2] == "ts",
                ErrorKind::parse, "edge CSV header must be 'src,dst,ts'");
    }

    LoadedGraph out;
    TemporalGraph& g = out.graph;
    std::unordered_map<int64_t, NodeId> raw_to_dense;
    auto remap = [&](int64_t raw) {
        auto [it, inserted] = raw_to_dense.try_emplace(raw, NodeId(out.id_map.dense_to_raw.size()));
        if (inserted) out.id_map.dense_to_raw.push_back(raw);
        return it->second;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line);
        require(f.size() == 3, ErrorKind::parse,
                "line " + std::to_string(line_no) + ": expected 3 fields, got " + std::to_string(f.size()));
        Interaction e;
        e.src = remap(detail::parse_int(f[0], line_no, "src"));
        e.dst = remap(detail::parse_int(f[1], line_no, "dst"));
        e.ts = detail::parse_double(f[2], line_no, "ts");
        require(e.ts >= 0.0, ErrorKind::validation,
                "line " + std::to_string(line_no) + ": negative timestamp");
        e.edge_feat_row = int32_t(g.interactions.size());  // pre-sort row id
        g.interactions.push_back(e);
    }
    g.num_nodes = int(out.id_map.dense_to_raw.size());

    std::stable_sort(g.interactions.begin(), g.interactions.end(),
                     [](const Interaction& a, const Interaction& b) { return a.ts < b.ts; });

    g.d_N = d_N;
    g.d_E = d_E;
    g.node_features = Tensor(g.num_nodes, d_N, 0.0);
    g.edge_features = Tensor(int(g.interactions.size()), d_E, 0.0);

    auto load_features = [&](const std::string& path, Tensor& dst, bool node_ids, const char* what) {
        std::ifstream fin(path);
        require(fin.good(), ErrorKind::io, std::string("cannot open ") + path);
        std::string fline;
        size_t fline_no = 0;
        require(bool(std::getline(fin, fline)), ErrorKind::parse, std::string(what) + ": missing header");
        ++fline_no;
        size_t rows_seen = 0;
        while (std::getline(fin, fline)) {
            ++fline_no;
            if (fline.empty()) continue;
            auto f = detail::split_csv_line(fline);
            require(int(f.size()) == dst.cols + 1, ErrorKind::dimension,
                    std::string(what) + " line " + std::to_string(fline_no) + ": expected " +
                        std::to_string(dst.cols + 1) + " fields");
            int64_t raw = detail::parse_int(f[0], fline_no, "id");
            int row;
            if (node_ids) {
                auto it = raw_to_dense.find(raw);
                require(it != raw_to_dense.end(), ErrorKind::id,
                        std::string(what) + " line " + std::to_string(fline_no) + ": unknown node id");
                row = it->second;
            } else {
                require(raw >= 0 && raw < dst.rows, ErrorKind::dimension,
                        std::string(what) + " line " + std::to_string(fline_no) + ": row id out of range");
                row = int(raw);
            }
            for (int j = 0; j < dst.cols; ++j)
                dst.at(row, j) = detail::parse_double(f[j + 1], fline_no, "feature");
            ++rows_seen;
        }
        require(rows_seen == size_t(dst.rows), ErrorKind::dimension,
                std::string(what) + ": row count " + std::to_string(rows_seen) + " != expected " +
                    std::to_string(dst.rows));
    };

    if (node_feat_path) load_features(*node_feat_path, g.node_features, true, "node features");
    if (edge_feat_path) load_features(*edge_feat_path, g.edge_features, false, "edge features");

    g.build_index();
    g.validate();
    return out;
}

inline void write_id_map(const IdMap& m, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot write " + path);
    out << "dense_id,raw_id\n";
    for (size_t i = 0; i < m.dense_to_raw.size(); ++i)
        out << i << "," << m.dense_to_raw[i] << "\n";
}

// Chronological 3-way split at floor(r1*n) / floor((r1+r2)*n), with each
// boundary moved forward so interactions sharing a timestamp never straddle
// it. Unseen nodes for the inductive setting are drawn (seeded) from the
// nodes that appear only after the training boundary, which keeps the train
// range free of them without filtering edges.
inline DataSplit chronological_split(const TemporalGraph& g, double r1, double r2, double r3,
                                     double unseen_fraction, uint64_t seed) {
    require(std::abs(r1 + r2 + r3 - 1.0) < 1e-9, ErrorKind::config, "split ratios must sum to 1");
    require(r1 > 0 && r2 > 0 && r3 > 0, ErrorKind::config, "split ratios must be positive");
    require(unseen_fraction >= 0.0 && unseen_fraction < 1.0, ErrorKind::config,
            "unseen_fraction must be in [0, 1)");
    const int32_t n = int32_t(g.interactions.size());
    require(n > 0, ErrorKind::degenerate_split, "cannot split an empty stream");

    auto advance_past_ties = [&](int32_t b) {
        while (b > 0 && b < n && g.interactions[b - 1].ts == g.interactions[b].ts) ++b;
        return b;
    };
    int32_t i1 = advance_past_ties(int32_t(std::floor(r1 * n)));
    int32_t i2 = advance_past_ties(std::max(i1, int32_t(std::floor((r1 + r2) * n))));
    require(i1 > 0 && i1 < i2 && i2 < n, ErrorKind::degenerate_split,
            "no valid chronological boundary (equal timestamps span a split)");

    DataSplit s;
    s.train_end = i1;
    s.val_end = i2;
    s.size = n;
    s.train_boundary_ts = g.interactions[i1 - 1].ts;
    s.val_boundary_ts = g.interactions[i2 - 1].ts;

    std::vector<char> in_train(g.num_nodes, 0), in_eval(g.num_nodes, 0);
    for (int32_t i = 0; i < i1; ++i) {
        in_train[g.interactions[i].src] = 1;
        in_train[g.interactions[i].dst] = 1;
    }
    for (int32_t i = i1; i < n; ++i) {
        in_eval[g.interactions[i].src] = 1;
        in_eval[g.interactions[i].dst] = 1;
    }
    std::vector<NodeId> candidates;
    for (NodeId v = 0; v < g.num_nodes; ++v)
        if (in_eval[v] && !in_train[v]) candidates.push_back(v);

    size_t want = size_t(std::floor(unseen_fraction * double(candidates.size())));
    Rng rng(seed);
    rng.shuffle(candidates);
    candidates.resize(want);
    std::sort(candidates.begin(), candidates.end());
    s.unseen_nodes = std::move(candidates);
    return s;
}

}  // namespace dygmamba
