#pragma once

#include <vector>

#include "dygmamba/mlp.hpp"
#include "dygmamba/tape.hpp"

namespace dygmamba {

// Pattern-driven information selection: maps the compressed co-interaction
// pattern into the node channel space and uses it, crossed with the opposite
// endpoint's summary, as a key that softmax-weights each endpoint's sequence.
struct SelectionHead {
    MLP f_map2;  // gamma_d -> 4d
    MLP f_map3;  // 4d -> 1, applied row-wise
    MLP f_agg;   // 4d -> 4d
    MLP f_out1;  // 4d -> d_N (shared by both endpoints)
    MLP f_out2;  // gamma_d -> d_N

    void collect(std::vector<Parameter*>& out) {
        f_map2.collect(out);
        f_map3.collect(out);
        f_agg.collect(out);
        f_out1.collect(out);
        f_out2.collect(out);
    }
};

inline SelectionHead make_selection_head(const std::string& name, int four_d, int gamma_d,
                                         int d_N, Rng& rng) {
    SelectionHead h;
    h.f_map2 = make_linear(name + ".f_map2", gamma_d, four_d, rng);
    h.f_map3 = make_linear(name + ".f_map3", four_d, 1, rng);
    h.f_agg = make_linear(name + ".f_agg", four_d, four_d, rng);
    h.f_out1 = make_linear(name + ".f_out1", four_d, d_N, rng);
    h.f_out2 = make_linear(name + ".f_out2", gamma_d, d_N, rng);
    return h;
}

// Column-wise mean over the k pattern rows.
inline Var temporal_pattern(Tape& t, Var h_uv_rows) {
    require(t.val(h_uv_rows).rows >= 1, ErrorKind::dimension, "temporal_pattern: empty input");
    return t.mean_rows(h_uv_rows);
}

struct Selected {
    Var h_u;  // 1 x 4d
    Var h_v;  // 1 x 4d
};

// h~_uv = f_map2(h_uv)
// h~_th = w^T H_th with w = f_map3(H_th) row-wise
// alpha_u = f_agg(h~_v) * h~_uv   (elementwise; symmetric for v)
// h_th = softmax(H_th alpha_th)^T H_th
inline Selected select(Tape& t, SelectionHead& head, Var H_u, Var H_v, Var h_uv) {
    Var key_base = apply_mlp(t, head.f_map2, h_uv);  // 1 x 4d

    auto summary = [&](Var H) {
        Var w = apply_mlp(t, head.f_map3, H);  // L x 1
        return t.matmul_tn(w, H);              // 1 x 4d
    };
    Var sum_u = summary(H_u);
    Var sum_v = summary(H_v);

    Var alpha_u = t.mul(apply_mlp(t, head.f_agg, sum_v), key_base);
    Var alpha_v = t.mul(apply_mlp(t, head.f_agg, sum_u), key_base);

    auto weighted = [&](Var H, Var alpha) {
        Var beta = t.softmax_vec(t.matmul_nt(H, alpha));  // L x 1
        return t.matmul_tn(beta, H);                      // 1 x 4d
    };
    return Selected{weighted(H_u, alpha_u), weighted(H_v, alpha_v)};
}

struct OutputHeads {
    Var o_u;   // 1 x d_N
    Var o_v;   // 1 x d_N
    Var o_uv;  // 1 x d_N
};

inline OutputHeads output_heads(Tape& t, SelectionHead& head, Var h_u, Var h_v, Var h_uv) {
    return OutputHeads{apply_mlp(t, head.f_out1, h_u), apply_mlp(t, head.f_out1, h_v),
                       apply_mlp(t, head.f_out2, h_uv)};
}

}  // namespace dygmamba
