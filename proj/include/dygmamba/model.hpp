#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dygmamba/encoders.hpp"
#include "dygmamba/graph.hpp"
#include "dygmamba/mlp.hpp"
#include "dygmamba/sampler.hpp"
#include "dygmamba/selector.hpp"
#include "dygmamba/ssm.hpp"
#include "dygmamba/tape.hpp"

namespace dygmamba {

enum class Variant { full, a, b };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::a: return "a";
        case Variant::b: return "b";
    }
    return "?";
}

struct ModelConfig {
    int rho = 32;        // sampled one-hop temporal neighbors
    int patch = 1;       // neighbors per patch
    int k = 5;           // co-interaction gaps
    int d = 50;          // per-channel embedding width
    int d_ssm = 16;      // scan state size
    double gamma = 0.5;  // time-level width fraction
    int l_n = 2;         // node-level layers
    int l_t = 2;         // time-level layers
    int d_n = 172;
    int d_e = 172;
    int d_t = 100;
    int d_f = 50;
    double dropout = 0.1;
    Variant variant = Variant::full;
    uint64_t seed = 0;

    int four_d() const { return 4 * d; }
    int gamma_d() const { return std::max(1, int(gamma * d)); }

    void validate() const {
        require(rho >= 1 && patch >= 1 && k >= 1 && d >= 1, ErrorKind::config,
                "model config: rho, patch, k, d must be >= 1");
        require(d_ssm >= 1 && l_n >= 0 && l_t >= 0, ErrorKind::config,
                "model config: d_ssm >= 1, layer counts >= 0");
        require(gamma > 0.0 && gamma <= 1.0, ErrorKind::config, "model config: gamma in (0, 1]");
        require(d_n >= 1 && d_e >= 1 && d_t >= 1 && d_f >= 1, ErrorKind::config,
                "model config: feature dims must be >= 1");
        require(dropout >= 0.0 && dropout < 1.0, ErrorKind::config, "model config: dropout in [0, 1)");
    }
};

struct Query {
    NodeId u = 0;
    NodeId v = 0;
    double ts = 0.0;
};

// End-to-end link predictor: neighbor sequences -> feature channels ->
// patched projection -> node-level scan stack (per endpoint), co-interaction
// gaps -> time-level scan stack -> pattern-driven selection -> probability.
class Model {
public:
    ModelConfig config;
    TimeEncoder time_encoder;
    MLP freq_mlp;                             // 1 -> d_F
    MLP f_n, f_e, f_t, f_f;                   // p*d_* -> d
    std::vector<SelectiveBlock> node_blocks;  // l_N blocks at 4d
    std::vector<SelectiveBlock> time_blocks;  // l_T blocks at gamma_d
    MLP f_map1;                               // d_T -> gamma_d
    SelectionHead head;
    MLP f_lp;  // 3*d_N -> 1
    BlockCounters counters;

    static Model init(const ModelConfig& cfg) {
        cfg.validate();
        Model m;
        m.config = cfg;
        Rng rng = Rng(cfg.seed).fork(0x6d6f64656cULL);
        m.time_encoder = make_time_encoder("time_encoder", cfg.d_t);
        m.freq_mlp = make_mlp_hidden("freq_mlp", 1, cfg.d_f, cfg.d_f, rng);
        m.f_n = make_linear("f_n", cfg.patch * cfg.d_n, cfg.d, rng);
        m.f_e = make_linear("f_e", cfg.patch * cfg.d_e, cfg.d, rng);
        m.f_t = make_linear("f_t", cfg.patch * cfg.d_t, cfg.d, rng);
        m.f_f = make_linear("f_f", cfg.patch * cfg.d_f, cfg.d, rng);
        for (int i = 0; i < cfg.l_n; ++i)
            m.node_blocks.push_back(
                make_selective_block("node_block" + std::to_string(i), cfg.four_d(), cfg.d_ssm, true, rng));
        for (int i = 0; i < cfg.l_t; ++i)
            m.time_blocks.push_back(
                make_selective_block("time_block" + std::to_string(i), cfg.gamma_d(), cfg.d_ssm, false, rng));
        m.f_map1 = make_linear("f_map1", cfg.d_t, cfg.gamma_d(), rng);
        m.head = make_selection_head("head", cfg.four_d(), cfg.gamma_d(), cfg.d_n, rng);
        m.f_lp = make_mlp_hidden("f_lp", 3 * cfg.d_n, cfg.d_n, 1, rng);
        m.dropout_rng_ = rng.fork(0x64726f70ULL);
        return m;
    }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> out;
        time_encoder.collect(out);
        freq_mlp.collect(out);
        f_n.collect(out);
        f_e.collect(out);
        f_t.collect(out);
        f_f.collect(out);
        for (auto& b : node_blocks) b.collect(out);
        for (auto& b : time_blocks) b.collect(out);
        f_map1.collect(out);
        head.collect(out);
        f_lp.collect(out);
        return out;
    }

    // Probability that interaction (u, v, t) exists, as a tape node.
    Var forward_prob(Tape& tape, const TemporalGraph& g, NodeId u, NodeId v, double t,
                     bool training = false) {
        g.check_node(u);
        g.check_node(v);
        const double rate = training ? config.dropout : 0.0;
        Rng* rng = rate > 0.0 ? &dropout_rng_ : nullptr;
        auto drop = [&](Var x) { return rng ? tape.dropout(x, rate, *rng) : x; };

        NeighborSequence seq_u = recent_neighbors(g, u, t, config.rho);
        NeighborSequence seq_v = recent_neighbors(g, v, t, config.rho);
        const int pair_count = pair_history_count(g, u, v, t);
        auto [counts_u, counts_v] = cooccurrence_counts(seq_u, seq_v, pair_count);

        auto encode_side = [&](const NeighborSequence& seq, const Tensor& counts) {
            BundleVars bundle = assemble_bundle(tape, g, seq, counts, time_encoder, freq_mlp);
            PatchedVars pv = patch(tape, bundle, config.patch);
            PatchedVars pd{drop(pv.X), drop(pv.E), drop(pv.T), drop(pv.F), pv.rows};
            Var H = project_concat(tape, pd, f_n, f_e, f_t, f_f);
            return node_block_forward(tape, node_blocks, H, config.variant == Variant::b,
                                      &counters, rate, rng);
        };
        Var H_u = encode_side(seq_u, counts_u);
        Var H_v = encode_side(seq_v, counts_v);

        Var o_u, o_v, o_uv;
        if (config.variant == Variant::a) {
            // no temporal pattern: selection degrades to mean pooling and the
            // pattern head contributes nothing
            o_u = drop(apply_mlp(tape, head.f_out1, tape.mean_rows(H_u)));
            o_v = drop(apply_mlp(tape, head.f_out1, tape.mean_rows(H_v)));
            o_uv = tape.constant(Tensor(1, config.d_n, 0.0));
        } else {
            TimeDeltaSequence gaps = co_interaction_deltas(g, u, v, t, config.k);
            Var pattern_rows =
                time_block_forward(tape, time_blocks, gaps, time_encoder, f_map1, &counters, rate, rng);
            Var h_uv = temporal_pattern(tape, pattern_rows);
            Selected sel = select(tape, head, H_u, H_v, h_uv);
            ++counters.select_evals;
            OutputHeads oh = output_heads(tape, head, sel.h_u, sel.h_v, h_uv);
            o_u = drop(oh.o_u);
            o_v = drop(oh.o_v);
            o_uv = drop(oh.o_uv);
        }
        Var logit = apply_mlp(tape, f_lp, tape.concat_cols({o_u, o_v, o_uv}));
        return tape.sigmoid_(logit);
    }

    // Inference-only probability (no trace, no dropout).
    double predict(const TemporalGraph& g, NodeId u, NodeId v, double t) {
        Tape tape(false);
        return tape.val(forward_prob(tape, g, u, v, t)).v[0];
    }

    // Mean binary cross-entropy over positives (label 1) and negatives
    // (label 0); probabilities are clamped to [1e-12, 1 - 1e-12] before log.
    // with_grad additionally backpropagates each element's contribution into
    // the parameter gradients (per-element traces, fixed order).
    double batch_loss(const TemporalGraph& g, const std::vector<Query>& positives,
                      const std::vector<Query>& negatives, bool with_grad = false,
                      bool training = false) {
        require(!positives.empty(), ErrorKind::batch, "batch_loss: empty batch");
        require(positives.size() == negatives.size(), ErrorKind::batch,
                "batch_loss: need one negative per positive");
        const double inv = 1.0 / double(positives.size() + negatives.size());
        double total = 0.0;
        Tape tape(with_grad);
        for (size_t i = 0; i < positives.size() * 2; ++i) {
            const Query& q = i % 2 == 0 ? positives[i / 2] : negatives[i / 2];
            const bool positive = i % 2 == 0;
            tape.reset();
            Var prob = forward_prob(tape, g, q.u, q.v, q.ts, training);
            Var pc = tape.clamp(prob, 1e-12, 1.0 - 1e-12);
            Var nll = positive ? tape.scale(tape.log_(pc), -1.0)
                               : tape.scale(tape.log_(tape.affine(pc, -1.0, 1.0)), -1.0);
            Var contrib = tape.scale(nll, inv);
            total += tape.val(contrib).v[0];
            if (with_grad) tape.backward(contrib);
        }
        return total;
    }

    void reset_counters() {
        counters.scan_evals = 0;
        counters.time_block_evals = 0;
        counters.select_evals = 0;
    }

private:
    Rng dropout_rng_{0};
};

}  // namespace dygmamba
