#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dygmamba/rng.hpp"
#include "dygmamba/tape.hpp"
#include "dygmamba/tensor.hpp"

namespace dygmamba {

enum class Activation { none, tanh };

struct MlpLayer {
    Parameter weight;  // in x out
    Parameter bias;    // 1 x out
    Activation act = Activation::none;
};

// Affine(+activation) chain applied row-wise. A single-layer instance is a
// plain affine map; deeper stacks interleave tanh.
struct MLP {
    std::vector<MlpLayer> layers;

    int in_width() const { return layers.empty() ? 0 : layers.front().weight.value.rows; }
    int out_width() const { return layers.empty() ? 0 : layers.back().weight.value.cols; }

    void collect(std::vector<Parameter*>& out) {
        for (auto& l : layers) {
            out.push_back(&l.weight);
            out.push_back(&l.bias);
        }
    }
};

inline Tensor glorot_uniform(int rows, int cols, Rng& rng) {
    Tensor t(rows, cols);
    const double bound = std::sqrt(6.0 / (rows + cols));
    for (double& x : t.v) x = rng.uniform(-bound, bound);
    return t;
}

// widths = {in, h1, ..., out}; acts has widths.size()-1 entries.
inline MLP make_mlp(const std::string& name, const std::vector<int>& widths,
                    const std::vector<Activation>& acts, Rng& rng) {
    require(widths.size() >= 2 && acts.size() == widths.size() - 1, ErrorKind::config,
            "make_mlp: widths/activations mismatch for " + name);
    MLP m;
    for (size_t i = 0; i + 1 < widths.size(); ++i) {
        MlpLayer l;
        l.weight = Parameter(name + ".w" + std::to_string(i), glorot_uniform(widths[i], widths[i + 1], rng));
        l.bias = Parameter(name + ".b" + std::to_string(i), Tensor(1, widths[i + 1], 0.0));
        l.act = acts[i];
        m.layers.push_back(std::move(l));
    }
    return m;
}

// Convenience: in -> hidden(tanh) -> out.
inline MLP make_mlp_hidden(const std::string& name, int in, int hidden, int out, Rng& rng) {
    return make_mlp(name, {in, hidden, out}, {Activation::tanh, Activation::none}, rng);
}

// Convenience: single affine layer.
inline MLP make_linear(const std::string& name, int in, int out, Rng& rng) {
    return make_mlp(name, {in, out}, {Activation::none}, rng);
}

inline Var apply_mlp(Tape& t, MLP& m, Var x) {
    require(!m.layers.empty(), ErrorKind::config, "apply_mlp: empty MLP");
    require(t.val(x).cols == m.in_width(), ErrorKind::dimension,
            "apply_mlp: input width " + std::to_string(t.val(x).cols) + " != " +
                std::to_string(m.in_width()));
    Var h = x;
    for (auto& l : m.layers) {
        h = t.add_row(t.matmul(h, t.leaf(l.weight)), t.leaf(l.bias));
        if (l.act == Activation::tanh) h = t.tanh_(h);
    }
    return h;
}

// Forward evaluation on plain tensors (no trace); used by inference-only
// paths and tests.
inline Tensor eval_mlp(MLP& m, const Tensor& x) {
    Tape t(false);
    Var out = apply_mlp(t, m, t.constant(x));
    return t.val(out);
}

}  // namespace dygmamba
