#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dygmamba/encoders.hpp"
#include "dygmamba/mlp.hpp"
#include "dygmamba/scan.hpp"
#include "dygmamba/tape.hpp"

namespace dygmamba {

// One input-dependent state-space layer. The projections map each position's
// channel vector to the scan's input/output couplings and step size; the
// state coefficients are kept negative by training their log magnitudes.
// Node-level blocks also carry the residual MLP and layer norm; time-level
// blocks leave them empty.
struct SelectiveBlock {
    Parameter b_proj;   // C_in x d_state
    Parameter c_proj;   // C_in x d_state
    Parameter dt_proj;  // C_in x 1
    Parameter dt_bias;  // 1 x C_in
    Parameter a_log;    // C_in x d_state; A = -exp(a_log)
    MLP mlp;            // C_in -> C_in (node-level only)
    Parameter ln_gain;  // 1 x C_in (node-level only)
    Parameter ln_bias;  // 1 x C_in
    int channels = 0;
    int d_state = 0;
    bool has_mlp = false;

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&b_proj);
        out.push_back(&c_proj);
        out.push_back(&dt_proj);
        out.push_back(&dt_bias);
        out.push_back(&a_log);
        if (has_mlp) {
            mlp.collect(out);
            out.push_back(&ln_gain);
            out.push_back(&ln_bias);
        }
    }
};

inline SelectiveBlock make_selective_block(const std::string& name, int channels, int d_state,
                                           bool with_mlp, Rng& rng) {
    require(channels >= 1 && d_state >= 1, ErrorKind::config, "selective block: bad widths");
    SelectiveBlock b;
    b.channels = channels;
    b.d_state = d_state;
    b.has_mlp = with_mlp;
    b.b_proj = Parameter(name + ".b_proj", glorot_uniform(channels, d_state, rng));
    b.c_proj = Parameter(name + ".c_proj", glorot_uniform(channels, d_state, rng));
    b.dt_proj = Parameter(name + ".dt_proj", glorot_uniform(channels, 1, rng));
    b.dt_bias = Parameter(name + ".dt_bias", Tensor(1, channels, 0.0));
    Tensor alog(channels, d_state);
    for (int c = 0; c < channels; ++c)
        for (int n = 0; n < d_state; ++n) alog.at(c, n) = std::log(double(n + 1));
    b.a_log = Parameter(name + ".a_log", std::move(alog));
    if (with_mlp) {
        b.mlp = make_linear(name + ".mlp", channels, channels, rng);
        b.ln_gain = Parameter(name + ".ln_gain", Tensor(1, channels, 1.0));
        b.ln_bias = Parameter(name + ".ln_bias", Tensor(1, channels, 0.0));
    }
    return b;
}

struct InputParams {
    Var B;      // L x d_state
    Var C;      // L x d_state
    Var Delta;  // L x C_in, strictly positive
};

// B = H W_B, C = H W_C, Delta = softplus(broadcast(H W_dt) + dt_bias).
inline InputParams input_params(Tape& t, SelectiveBlock& blk, Var H) {
    require(t.val(H).cols == blk.channels, ErrorKind::dimension,
            "input_params: H width != block channels");
    InputParams p;
    p.B = t.matmul(H, t.leaf(blk.b_proj));
    p.C = t.matmul(H, t.leaf(blk.c_proj));
    Var raw = t.matmul(H, t.leaf(blk.dt_proj));  // L x 1
    p.Delta = t.softplus_(t.col_plus_row(raw, t.leaf(blk.dt_bias)));
    return p;
}

// The SSM term of one layer (the residual add is the caller's job).
inline Var selective_scan(Tape& t, SelectiveBlock& blk, Var H) {
    InputParams p = input_params(t, blk, H);
    Var a = t.neg_exp(t.leaf(blk.a_log));
    return t.selective_scan(H, p.B, p.C, p.Delta, a);
}

// Plain-tensor forward of one block (no trace); the benchmark path.
inline Tensor selective_scan_values(SelectiveBlock& blk, const Tensor& H) {
    Tape t(false);
    return t.val(selective_scan(t, blk, t.constant(H)));
}

// Forward-path instrumentation. A model instance is driven by one thread at
// a time, so plain counters suffice.
struct BlockCounters {
    uint64_t scan_evals = 0;
    uint64_t time_block_evals = 0;
    uint64_t select_evals = 0;
};

// l_N layers of: H += scan(H); H += mlp(layer_norm(H)). skip_scan drops the
// scan residual (ablation variant B). Dropout, when active, follows each MLP
// output and each residual.
inline Var node_block_forward(Tape& t, std::vector<SelectiveBlock>& blocks, Var H,
                              bool skip_scan = false, BlockCounters* counters = nullptr,
                              double dropout = 0.0, Rng* rng = nullptr) {
    auto maybe_drop = [&](Var x) { return dropout > 0.0 && rng ? t.dropout(x, dropout, *rng) : x; };
    for (auto& blk : blocks) {
        if (!skip_scan) {
            H = maybe_drop(t.add(H, selective_scan(t, blk, H)));
            if (counters) ++counters->scan_evals;
        }
        Var normed = t.layer_norm(H, t.leaf(blk.ln_gain), t.leaf(blk.ln_bias));
        H = maybe_drop(t.add(H, maybe_drop(apply_mlp(t, blk.mlp, normed))));
    }
    return H;
}

// Encodes the co-interaction gap sequence and runs l_T scan-residual layers
// over it (no layer norm or MLP residual at the time level).
inline Var time_block_forward(Tape& t, std::vector<SelectiveBlock>& blocks,
                              const TimeDeltaSequence& deltas, TimeEncoder& te, MLP& f_map1,
                              BlockCounters* counters = nullptr, double dropout = 0.0,
                              Rng* rng = nullptr) {
    Var rows = apply_mlp(t, f_map1, encode_gap_rows(t, te, deltas.deltas));
    if (dropout > 0.0 && rng) rows = t.dropout(rows, dropout, *rng);
    for (auto& blk : blocks) {
        rows = t.add(rows, selective_scan(t, blk, rows));
        if (counters) {
            ++counters->scan_evals;
            ++counters->time_block_evals;
        }
    }
    return rows;
}

}  // namespace dygmamba
