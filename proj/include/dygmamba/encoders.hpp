#pragma once

#include <cmath>
#include <vector>

#include "dygmamba/mlp.hpp"
#include "dygmamba/sampler.hpp"
#include "dygmamba/tape.hpp"

namespace dygmamba {

// Trainable cosine time encoding: sqrt(1/d_T) * cos(omega_i * delta + phi_i).
// Frequencies are initialized log-spaced over nine decades, phases at zero.
// missing_gap is the learned row standing in for absent co-interaction gaps
// (initialized to what the fresh encoder yields for the sentinel value).
struct TimeEncoder {
    Parameter omega;        // 1 x d_T
    Parameter phi;          // 1 x d_T
    Parameter missing_gap;  // 1 x d_T

    int dim() const { return omega.value.cols; }

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&omega);
        out.push_back(&phi);
        out.push_back(&missing_gap);
    }
};

inline TimeEncoder make_time_encoder(const std::string& name, int d_T) {
    require(d_T >= 1, ErrorKind::config, "time encoder: d_T must be >= 1");
    Tensor w(1, d_T);
    for (int i = 0; i < d_T; ++i)
        w.at(0, i) = d_T == 1 ? 1.0 : std::pow(10.0, -9.0 * double(i) / double(d_T - 1));
    TimeEncoder te;
    te.omega = Parameter(name + ".omega", std::move(w));
    te.phi = Parameter(name + ".phi", Tensor(1, d_T, 0.0));
    Tensor miss(1, d_T);
    const double s = std::sqrt(1.0 / d_T);
    for (int i = 0; i < d_T; ++i) miss.at(0, i) = s * std::cos(te.omega.value.at(0, i) * 1e10);
    te.missing_gap = Parameter(name + ".missing_gap", std::move(miss));
    return te;
}

inline std::vector<double> encode_time(const TimeEncoder& te, double delta) {
    require(std::isfinite(delta), ErrorKind::numeric, "encode_time: non-finite delta");
    const int d = te.dim();
    const double s = std::sqrt(1.0 / d);
    std::vector<double> out(d);
    for (int i = 0; i < d; ++i)
        out[i] = s * std::cos(te.omega.value.at(0, i) * delta + te.phi.value.at(0, i));
    return out;
}

inline Var encode_time_rows(Tape& t, TimeEncoder& te, std::vector<double> deltas) {
    return t.time_encoding(t.leaf(te.omega), t.leaf(te.phi), std::move(deltas));
}

// Variant for gap sequences that may carry sentinel slots.
inline Var encode_gap_rows(Tape& t, TimeEncoder& te, const std::vector<double>& deltas) {
    std::vector<char> missing(deltas.size());
    for (size_t i = 0; i < deltas.size(); ++i) missing[i] = deltas[i] >= kSentinelDelta;
    return t.time_encoding(t.leaf(te.omega), t.leaf(te.phi), deltas, std::move(missing),
                           t.leaf(te.missing_gap));
}

// The four aligned feature channels of one neighbor sequence, as tape vars.
// Row count is len(entries) + 1; the last row is the appended self entry.
struct BundleVars {
    Var X;  // L x d_N node features
    Var E;  // L x d_E edge features
    Var T;  // L x d_T time encodings
    Var F;  // L x d_F frequency encodings
    int rows = 0;
};

// Assembles the channels for a neighbor sequence: node features of each
// neighbor (owner's features in the self row), edge features (zero self row),
// time encodings of query_ts - entry_ts (zero delta for the self row), and
// the frequency channel f(counts[:,0]) + f(counts[:,1]).
inline BundleVars assemble_bundle(Tape& t, const TemporalGraph& g, const NeighborSequence& seq,
                                  const Tensor& counts, TimeEncoder& te, MLP& freq_mlp) {
    const int L = seq.length_with_self();
    require(counts.rows == L && counts.cols == 2, ErrorKind::dimension,
            "assemble_bundle: counts must be L x 2");

    Tensor X(L, g.d_N), E(L, g.d_E);
    std::vector<double> deltas(L);
    Tensor c0(L, 1), c1(L, 1);
    for (int i = 0; i < L; ++i) {
        const bool self_row = i == L - 1;
        const NodeId node = self_row ? seq.owner : seq.entries[i].neighbor;
        for (int j = 0; j < g.d_N; ++j) X.at(i, j) = g.node_features.at(node, j);
        if (!self_row && seq.entries[i].edge_feat_row >= 0)
            for (int j = 0; j < g.d_E; ++j)
                E.at(i, j) = g.edge_features.at(seq.entries[i].edge_feat_row, j);
        deltas[i] = self_row ? 0.0 : seq.query_ts - seq.entries[i].ts;
        c0.at(i, 0) = counts.at(i, 0);
        c1.at(i, 0) = counts.at(i, 1);
    }

    BundleVars b;
    b.rows = L;
    b.X = t.constant(std::move(X));
    b.E = t.constant(std::move(E));
    b.T = encode_time_rows(t, te, std::move(deltas));
    b.F = t.add(apply_mlp(t, freq_mlp, t.constant(std::move(c0))),
                apply_mlp(t, freq_mlp, t.constant(std::move(c1))));
    return b;
}

struct PatchedVars {
    Var X, E, T, F;
    int rows = 0;
};

// Groups p temporally adjacent rows per channel into flattened patch rows,
// zero-padding at the tail so the self row stays inside the last real patch.
inline PatchedVars patch(Tape& t, const BundleVars& b, int p) {
    PatchedVars out;
    out.X = t.patch_rows(b.X, p);
    out.E = t.patch_rows(b.E, p);
    out.T = t.patch_rows(b.T, p);
    out.F = t.patch_rows(b.F, p);
    out.rows = t.val(out.X).rows;
    return out;
}

// H = [f_N(Xp) || f_E(Ep) || f_T(Tp) || f_F(Fp)], width 4d.
inline Var project_concat(Tape& t, const PatchedVars& pb, MLP& f_n, MLP& f_e, MLP& f_t, MLP& f_f) {
    return t.concat_cols({apply_mlp(t, f_n, pb.X), apply_mlp(t, f_e, pb.E),
                          apply_mlp(t, f_t, pb.T), apply_mlp(t, f_f, pb.F)});
}

}  // namespace dygmamba
