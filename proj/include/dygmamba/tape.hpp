#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "dygmamba/errors.hpp"
#include "dygmamba/rng.hpp"
#include "dygmamba/scan.hpp"
#include "dygmamba/tensor.hpp"

namespace dygmamba {

struct Var {
    int i = -1;
    bool valid() const { return i >= 0; }
};

// Reverse-mode computation trace. Each forward op appends a node holding its
// value and a closure that routes the node's gradient to its parents.
// backward() sweeps nodes in reverse creation order, which fixes the gradient
// accumulation order and makes repeated runs bit-identical.
//
// Parameters participate через leaf(): the node aliases the parameter's value
// and accumulates straight into Parameter::grad. A tape built with
// grad_enabled=false records values only (cheap inference path).
class Tape {
public:
    explicit Tape(bool grad_enabled = true) : grad_(grad_enabled) {}

    bool grad_enabled() const { return grad_; }

    size_t num_nodes() const { return nodes_.size(); }

    void reset() {
        nodes_.clear();
        backward_done_ = false;
    }

    Var constant(Tensor t) {
        return push(std::move(t), false, {});
    }

    Var leaf(Parameter& p) {
        Node n;
        n.ext_val = &p.value;
        n.ext_grad = &p.grad;
        n.needs_grad = grad_;
        nodes_.push_back(std::move(n));
        return Var{int(nodes_.size()) - 1};
    }

    const Tensor& val(Var x) const {
        const Node& n = nodes_[x.i];
        return n.ext_val ? *n.ext_val : n.value;
    }

    // Gradient buffer for a node, allocated (zeroed) on first touch.
    Tensor& grad(Var x) {
        Node& n = nodes_[x.i];
        if (n.ext_grad) return *n.ext_grad;
        if (n.grad_buf.rows == 0) {
            const Tensor& v = val(x);
            n.grad_buf = Tensor(v.rows, v.cols, 0.0);
        }
        return n.grad_buf;
    }

    bool grad_touched(Var x) const {
        const Node& n = nodes_[x.i];
        return n.ext_grad != nullptr || n.grad_buf.rows != 0;
    }

    void backward(Var loss) {
        require(grad_, ErrorKind::state, "backward: tape was built without gradient recording");
        require(!backward_done_, ErrorKind::state, "backward: trace already consumed");
        const Tensor& lv = val(loss);
        require(lv.rows == 1 && lv.cols == 1, ErrorKind::dimension, "backward: loss must be a scalar");
        backward_done_ = true;
        grad(loss).v[0] = 1.0;
        for (int i = loss.i; i >= 0; --i) {
            Node& n = nodes_[i];
            if (n.back && n.grad_buf.rows != 0) n.back(*this);
        }
    }

    // ---- elementwise and shape ops ----

    Var add(Var a, Var b) {
        const Tensor &ta = val(a), &tb = val(b);
        require(ta.same_shape(tb), ErrorKind::dimension, "add: shape mismatch");
        Tensor out = ta;
        for (size_t i = 0; i < out.size(); ++i) out.v[i] += tb.v[i];
        return push(std::move(out), needs(a) || needs(b), [a, b, self = next()](Tape& t) {
            const Tensor& g = t.grad(Var{self});
            if (t.needs(a)) axpy(t.grad(a), g);
            if (t.needs(b)) axpy(t.grad(b), g);
        });
    }

    // (L x C) + broadcast (1 x C)
    Var add_row(Var a, Var row) {
        const Tensor &ta = val(a), &tr = val(row);
        require(tr.rows == 1 && tr.cols == ta.cols, ErrorKind::dimension, "add_row: width mismatch");
        Tensor out = ta;
        for (int i = 0; i < out.rows; ++i)
            for (int j = 0; j < out.cols; ++j) out.at(i, j) += tr.at(0, j);
        return push(std::move(out), needs(a) || needs(row), [a, row, self = next()](Tape& t) {
            const Tensor& g = t.grad(Var{self});
            if (t.needs(a)) axpy(t.grad(a), g);
            if (t.needs(row)) {
                Tensor& gr = t.grad(row);
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) gr.at(0, j) += g.at(i, j);
            }
        });
    }

    // (L x 1) column broadcast across C + (1 x C) row broadcast down L.
    Var col_plus_row(Var col, Var row) {
        const Tensor &tc = val(col), &tr = val(row);
        require(tc.cols == 1 && tr.rows == 1, ErrorKind::dimension, "col_plus_row: expects Lx1 and 1xC");
        Tensor out(tc.rows, tr.cols);
        for (int i = 0; i < out.rows; ++i)
            for (int j = 0; j < out.cols; ++j) out.at(i, j) = tc.at(i, 0) + tr.at(0, j);
        return push(std::move(out), needs(col) || needs(row), [col, row, self = next()](Tape& t) {
            const Tensor& g = t.grad(Var{self});
            if (t.needs(col)) {
                Tensor& gc = t.grad(col);
                for (int i = 0; i < g.rows; ++i) {
                    double s = 0.0;
                    for (int j = 0; j < g.cols; ++j) s += g.at(i, j);
                    gc.at(i, 0) += s;
                }
            }
            if (t.needs(row)) {
                Tensor& gr = t.grad(row);
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) gr.at(0, j) += g.at(i, j);
            }
        });
    }

    Var mul(Var a, Var b) {
        const Tensor &ta = val(a), &tb = val(b);
        require(ta.same_shape(tb), ErrorKind::dimension, "mul: shape mismatch");
        Tensor out = ta;
        for (size_t i = 0; i < out.size(); ++i) out.v[i] *= tb.v[i];
        return push(std::move(out), needs(a) || needs(b), [a, b, self = next()](Tape& t) {
            const Tensor& g = t.grad(Var{self});
            const Tensor &ta = t.val(a), &tb = t.val(b);
            if (t.needs(a)) {
                Tensor& ga = t.grad(a);
                for (size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * tb.v[i];
            }
            if (t.needs(b)) {
                Tensor& gb = t.grad(b);
                for (size_t i = 0; i < g.size(); ++i) gb.v[i] += g.v[i] * ta.v[i];
            }
        });
    }

    Var affine(Var a, double alpha, double beta) {
        Tensor out = val(a);
        for (double& x : out.v) x = alpha * x + beta;
        return push(std::move(out), needs(a), [a, alpha, self = next()](Tape& t) {
            if (!t.needs(a)) return;
            const Tensor& g = t.grad(Var{self});
            Tensor& ga = t.grad(a);
            for (size_t i = 0; i < g.size(); ++i) ga.v[i] += alpha * g.v[i];
        });
    }

    Var scale(Var a, double s) { return affine(a, s, 0.0); }

    Var concat_cols(const std::vector<Var>& parts) {
        require(!parts.empty(), ErrorKind::dimension, "concat_cols: empty");
        int rows = val(parts[0]).rows, cols = 0;
        bool ng = false;
        for (Var p : parts) {
            require(val(p).rows == rows, ErrorKind::dimension, "concat_cols: row mismatch");
            cols += val(p).cols;
            ng = ng || needs(p);
        }
        Tensor out(rows, cols);
        int off = 0;
        for (Var p : parts) {
            const Tensor& tp = val(p);
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < tp.cols; ++j) out.at(i, off + j) = tp.at(i, j);
            off += tp.cols;
        }
        return push(std::move(out), ng, [parts, self = next()](Tape& t) {
            const Tensor& g = t.grad(Var{self});
            int off = 0;
            for (Var p : parts) {
                const Tensor& tp = t.val(p);
                if (t.needs(p)) {
                    Tensor& gp = t.grad(p);
                    for (int i = 0; i < g.rows; ++i)
                        for (int j = 0; j < tp.cols; ++j) gp.at(i, j) += g.at(i, off + j);
                }
                off += tp.cols;
            }
        });
    }

    // ---- matrix products ----

    Var matmul(Var a, Var b) {
        const Tensor &ta = val(a), &tb = val(b);
        require(ta.cols == tb.rows, ErrorKind::dimension, "matmul: inner dim mismatch");
        Tensor out(ta.rows, tb.cols);
        mm_nn(ta, tb, out);
        return push(std::move(out), needs(a) || needs(b), [a, b, self = next()](Tape& t) {
            const Tensor& g = t.grad(Var{self});
            const Tensor &ta = t.val(a), &tb = t.val(b);
            if (t.needs(a)) mm_nt_acc(g, tb, t.grad(a));  // dA += g * B^T
            if (t.needs(b)) mm_tn_acc(ta, g, t.grad(b));  // dB += A^T * g
        });
    }

    // A^T * B with A (m x n), B (m x p) -> (n x p)
    Var matmul_tn(Var a, Var b) {
        const Tensor &ta = val(a), &tb = val(b);
        require(ta.rows == tb.rows, ErrorKind::dimension, "matmul_tn: row mismatch");
        Tensor out(ta.cols, tb.cols);
        mm_tn_acc(ta, tb, out);
        return push(std::move(out), needs(a) || needs(b), [a, b, self = next()](Tape& t) {
            const Tensor& g = t.grad(Var{self});
            const Tensor &ta = t.val(a), &tb = t.val(b);
            if (t.needs(a)) mm_nt_acc(tb, g, t.grad(a));  // dA += B * g^T
            if (t.needs(b)) mm_nn_acc(ta, g, t.grad(b));  // dB += A * g
        });
    }

    // A * B^T with A (m x n), B (p x n) -> (m x p)
    Var matmul_nt(Var a, Var b) {
        const Tensor &ta = val(a), &tb = val(b);
        require(ta.cols == tb.cols, ErrorKind::dimension, "matmul_nt: col mismatch");
        Tensor out(ta.rows, tb.rows);
        mm_nt_acc(ta, tb, out);
        return push(std::move(out), needs(a) || needs(b), [a, b, self = next()](Tape& t) {
            const Tensor& g = t.grad(Var{self});
            const Tensor &ta = t.val(a), &tb = t.val(b);
            if (t.needs(a)) mm_nn_acc(g, tb, t.grad(a));  // dA += g * B
            if (t.needs(b)) mm_tn_acc(g, ta, t.grad(b));  // dB += g^T * A
        });
    }

    // ---- nonlinearities ----

    Var tanh_(Var a) {
        Tensor out = val(a);
        for (double& x : out.v) x = std::tanh(x);
        return push(std::move(out), needs(a), [a, self = next()](Tape& t) {
            if (!t.needs(a)) return;
            const Tensor& g = t.grad(Var{self});
            const Tensor& y = t.val(Var{self});
            Tensor& ga = t.grad(a);
            for (size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * (1.0 - y.v[i] * y.v[i]);
        });
    }

    Var sigmoid_(Var a) {
        Tensor out = val(a);
        for (double& x : out.v) x = sigmoid_scalar(x);
        return push(std::move(out), needs(a), [a, self = next()](Tape& t) {
            if (!t.needs(a)) return;
            const Tensor& g = t.grad(Var{self});
            const Tensor& y = t.val(Var{self});
            Tensor& ga = t.grad(a);
            for (size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * y.v[i] * (1.0 - y.v[i]);
        });
    }

    Var softplus_(Var a) {
        Tensor out = val(a);
        for (double& x : out.v) x = softplus_scalar(x);
        return push(std::move(out), needs(a), [a, self = next()](Tape& t) {
            if (!t.needs(a)) return;
            const Tensor& g = t.grad(Var{self});
            const Tensor& x = t.val(a);
            Tensor& ga = t.grad(a);
            for (size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * sigmoid_scalar(x.v[i]);
        });
    }

    // -exp(x); keeps a log-magnitude parameter strictly negative.
    Var neg_exp(Var a) {
        Tensor out = val(a);
        for (double& x : out.v) x = -std::exp(x);
        return push(std::move(out), needs(a), [a, self = next()](Tape& t) {
            if (!t.needs(a)) return;
            const Tensor& g = t.grad(Var{self});
            const Tensor& y = t.val(Var{self});
            Tensor& ga = t.grad(a);
            for (size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * y.v[i];
        });
    }

    Var log_(Var a) {
        Tensor out = val(a);
        for (double& x : out.v) x = std::log(x);
        return push(std::move(out), needs(a), [a, self = next()](Tape& t) {
            if (!t.needs(a)) return;
            const Tensor& g = t.grad(Var{self});
            const Tensor& x = t.val(a);
            Tensor& ga = t.grad(a);
            for (size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] / x.v[i];
        });
    }

    // Gradient passes only strictly inside [lo, hi].
    Var clamp(Var a, double lo, double hi) {
        Tensor out = val(a);
        for (double& x : out.v) x = x < lo ? lo : (x > hi ? hi : x);
        return push(std::move(out), needs(a), [a, lo, hi, self = next()](Tape& t) {
            if (!t.needs(a)) return;
            const Tensor& g = t.grad(Var{self});
            const Tensor& x = t.val(a);
            Tensor& ga = t.grad(a);
            for (size_t i = 0; i < g.size(); ++i)
                if (x.v[i] > lo && x.v[i] < hi) ga.v[i] += g.v[i];
        });
    }

    // Stable softmax over a single vector (L x 1 or 1 x L).
    Var softmax_vec(Var a) {
        const Tensor& ta = val(a);
        require(ta.rows == 1 || ta.cols == 1, ErrorKind::dimension, "softmax_vec: expects a vector");
        Tensor out = ta;
        double mx = out.v[0];
        for (double x : out.v) mx = std::max(mx, x);
        double sum = 0.0;
        for (double& x : out.v) {
            x = std::exp(x - mx);
            sum += x;
        }
        for (double& x : out.v) x /= sum;
        return push(std::move(out), needs(a), [a, self = next()](Tape& t) {
            if (!t.needs(a)) return;
            const Tensor& g = t.grad(Var{self});
            const Tensor& y = t.val(Var{self});
            Tensor& ga = t.grad(a);
            double dot = 0.0;
            for (size_t i = 0; i < g.size(); ++i) dot += g.v[i] * y.v[i];
            for (size_t i = 0; i < g.size(); ++i) ga.v[i] += y.v[i] * (g.v[i] - dot);
        });
    }

    // Row-wise standardization followed by a learned affine map.
    Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5) {
        const Tensor &tx = val(x), &tg = val(gain), &tb = val(bias);
        require(tg.rows == 1 && tg.cols == tx.cols, ErrorKind::dimension, "layer_norm: gain width");
        require(tb.rows == 1 && tb.cols == tx.cols, ErrorKind::dimension, "layer_norm: bias width");
        Tensor out(tx.rows, tx.cols);
        const int C = tx.cols;
        for (int i = 0; i < tx.rows; ++i) {
            double mu = 0.0;
            for (int j = 0; j < C; ++j) mu += tx.at(i, j);
            mu /= C;
            double var = 0.0;
            for (int j = 0; j < C; ++j) {
                double d = tx.at(i, j) - mu;
                var += d * d;
            }
            var /= C;
            double istd = 1.0 / std::sqrt(var + eps);
            for (int j = 0; j < C; ++j)
                out.at(i, j) = (tx.at(i, j) - mu) * istd * tg.at(0, j) + tb.at(0, j);
        }
        return push(std::move(out), needs(x) || needs(gain) || needs(bias),
                    [x, gain, bias, eps, self = next()](Tape& t) {
            const Tensor& g = t.grad(Var{self});
            const Tensor &tx = t.val(x), &tg = t.val(gain);
            const int C = tx.cols;
            for (int i = 0; i < tx.rows; ++i) {
                double mu = 0.0;
                for (int j = 0; j < C; ++j) mu += tx.at(i, j);
                mu /= C;
                double var = 0.0;
                for (int j = 0; j < C; ++j) {
                    double d = tx.at(i, j) - mu;
                    var += d * d;
                }
                var /= C;
                double istd = 1.0 / std::sqrt(var + eps);
                double sum_dxh = 0.0, sum_dxh_xh = 0.0;
                for (int j = 0; j < C; ++j) {
                    double xh = (tx.at(i, j) - mu) * istd;
                    double dxh = g.at(i, j) * tg.at(0, j);
                    sum_dxh += dxh;
                    sum_dxh_xh += dxh * xh;
                }
                if (t.needs(x)) {
                    Tensor& gx = t.grad(x);
                    for (int j = 0; j < C; ++j) {
                        double xh = (tx.at(i, j) - mu) * istd;
                        double dxh = g.at(i, j) * tg.at(0, j);
                        gx.at(i, j) += istd * (dxh - sum_dxh / C - xh * sum_dxh_xh / C);
                    }
                }
                if (t.needs(gain)) {
                    Tensor& gg = t.grad(gain);
                    for (int j = 0; j < C; ++j)
                        gg.at(0, j) += g.at(i, j) * (tx.at(i, j) - mu) * istd;
                }
                if (t.needs(bias)) {
                    Tensor& gb = t.grad(bias);
                    for (int j = 0; j < C; ++j) gb.at(0, j) += g.at(i, j);
                }
            }
        });
    }

    Var mean_rows(Var a) {
        const Tensor& ta = val(a);
        require(ta.rows >= 1, ErrorKind::dimension, "mean_rows: empty");
        Tensor out(1, ta.cols);
        for (int i = 0; i < ta.rows; ++i)
            for (int j = 0; j < ta.cols; ++j) out.at(0, j) += ta.at(i, j);
        for (double& x : out.v) x /= ta.rows;
        return push(std::move(out), needs(a), [a, self = next()](Tape& t) {
            if (!t.needs(a)) return;
            const Tensor& g = t.grad(Var{self});
            Tensor& ga = t.grad(a);
            const double inv = 1.0 / ga.rows;
            for (int i = 0; i < ga.rows; ++i)
                for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += g.at(0, j) * inv;
        });
    }

    Var sum_all(Var a) {
        const Tensor& ta = val(a);
        Tensor out(1, 1);
        for (double x : ta.v) out.v[0] += x;
        return push(std::move(out), needs(a), [a, self = next()](Tape& t) {
            if (!t.needs(a)) return;
            const double g = t.grad(Var{self}).v[0];
            Tensor& ga = t.grad(a);
            for (double& x : ga.v) x += g;
        });
    }

    // Inverted dropout; the keep mask comes from the caller's rng so training
    // remains reproducible. Identity when rate == 0.
    Var dropout(Var a, double rate, Rng& rng) {
        if (rate <= 0.0) return a;
        require(rate < 1.0, ErrorKind::config, "dropout: rate must be < 1");
        const Tensor& ta = val(a);
        std::vector<float> mask(ta.size());
        const double inv = 1.0 / (1.0 - rate);
        Tensor out = ta;
        for (size_t i = 0; i < out.size(); ++i) {
            bool keep = rng.uniform() >= rate;
            mask[i] = keep ? float(inv) : 0.0f;
            out.v[i] *= mask[i];
        }
        return push(std::move(out), needs(a), [a, mask = std::move(mask), self = next()](Tape& t) {
            if (!t.needs(a)) return;
            const Tensor& g = t.grad(Var{self});
            Tensor& ga = t.grad(a);
            for (size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * mask[i];
        });
    }

    // out[i][j] = sqrt(1/dT) * cos(omega[j] * delta[i] + phi[j]). Rows whose
    // delta is flagged missing instead copy the learned `missing` row: a
    // 1e10 sentinel through a trainable-frequency cosine has a useless
    // gradient and its value scrambles whenever omega moves at all, so
    // absent gaps get a stable dedicated encoding.
    Var time_encoding(Var omega, Var phi, std::vector<double> deltas,
                      std::vector<char> is_missing = {}, Var missing = {}) {
        const Tensor &to = val(omega), &tp = val(phi);
        require(to.rows == 1 && tp.rows == 1 && to.cols == tp.cols, ErrorKind::dimension,
                "time_encoding: omega/phi must be 1 x dT");
        require(is_missing.empty() || is_missing.size() == deltas.size(), ErrorKind::dimension,
                "time_encoding: mask size mismatch");
        const int L = int(deltas.size()), D = to.cols;
        const double s = std::sqrt(1.0 / D);
        Tensor out(L, D);
        for (int i = 0; i < L; ++i) {
            const bool miss = !is_missing.empty() && is_missing[i];
            for (int j = 0; j < D; ++j)
                out.at(i, j) = miss ? val(missing).at(0, j)
                                    : s * std::cos(to.at(0, j) * deltas[i] + tp.at(0, j));
        }
        bool ng = needs(omega) || needs(phi) || (missing.valid() && needs(missing));
        return push(std::move(out), ng,
                    [omega, phi, missing, deltas = std::move(deltas),
                     is_missing = std::move(is_missing), s, self = next()](Tape& t) {
            const Tensor& g = t.grad(Var{self});
            const Tensor &to = t.val(omega), &tp = t.val(phi);
            const int D = to.cols;
            for (size_t i = 0; i < deltas.size(); ++i) {
                if (!is_missing.empty() && is_missing[i]) {
                    if (missing.valid() && t.needs(missing)) {
                        Tensor& gm = t.grad(missing);
                        for (int j = 0; j < D; ++j) gm.at(0, j) += g.at(int(i), j);
                    }
                    continue;
                }
                for (int j = 0; j < D; ++j) {
                    const double sn = -s * std::sin(to.at(0, j) * deltas[i] + tp.at(0, j));
                    const double gi = g.at(int(i), j);
                    if (t.needs(omega)) t.grad(omega).at(0, j) += gi * sn * deltas[i];
                    if (t.needs(phi)) t.grad(phi).at(0, j) += gi * sn;
                }
            }
        });
    }

    // Groups p consecutive rows into one flattened row; trailing positions of
    // the final group are zero when rows % p != 0.
    Var patch_rows(Var a, int p) {
        require(p >= 1, ErrorKind::config, "patch: p must be >= 1");
        const Tensor& ta = val(a);
        const int L = ta.rows, d = ta.cols;
        const int R = (L + p - 1) / p;
        Tensor out(R, p * d);
        for (int i = 0; i < L; ++i) {
            const int r = i / p, q = i % p;
            for (int j = 0; j < d; ++j) out.at(r, q * d + j) = ta.at(i, j);
        }
        return push(std::move(out), needs(a), [a, p, self = next()](Tape& t) {
            if (!t.needs(a)) return;
            const Tensor& g = t.grad(Var{self});
            Tensor& ga = t.grad(a);
            const int d = ga.cols;
            for (int i = 0; i < ga.rows; ++i) {
                const int r = i / p, q = i % p;
                for (int j = 0; j < d; ++j) ga.at(i, j) += g.at(r, q * d + j);
            }
        });
    }

    // Input-dependent SISO scan; see scan.hpp for semantics. The discretized
    // coefficients from the forward pass ride along in the closure so the
    // backward sweep needs no transcendental evaluations.
    Var selective_scan(Var H, Var B, Var Cm, Var Delta, Var A) {
        const bool ng = grad_enabled() && (needs(H) || needs(B) || needs(Cm) || needs(Delta) || needs(A));
        Tensor out;
        if (!ng) {
            scan_forward(val(H), val(B), val(Cm), val(Delta), val(A), out);
            return push(std::move(out), false, {});
        }
        const Tensor& h = val(H);
        auto abar = std::make_shared<std::vector<double>>(h.size() * size_t(val(B).cols));
        auto bbar = std::make_shared<std::vector<double>>(abar->size());
        scan_forward(h, val(B), val(Cm), val(Delta), val(A), out, abar->data(), bbar->data());
        return push(std::move(out), true, [H, B, Cm, Delta, A, abar, bbar, self = next()](Tape& t) {
            const Tensor& g = t.grad(Var{self});
            scan_backward(t.val(H), t.val(B), t.val(Cm), t.val(Delta), t.val(A), g, abar->data(),
                          bbar->data(), t.grad(H), t.grad(B), t.grad(Cm), t.grad(Delta), t.grad(A));
        });
    }

    bool needs(Var x) const { return nodes_[x.i].needs_grad; }

private:
    struct Node {
        Tensor value;
        const Tensor* ext_val = nullptr;
        Tensor* ext_grad = nullptr;
        Tensor grad_buf;
        std::function<void(Tape&)> back;
        bool needs_grad = false;
    };

    int next() const { return int(nodes_.size()); }

    Var push(Tensor value, bool needs_grad, std::function<void(Tape&)> back) {
        Node n;
        n.value = std::move(value);
        n.needs_grad = grad_ && needs_grad;
        if (n.needs_grad) n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return Var{int(nodes_.size()) - 1};
    }

    static double sigmoid_scalar(double x) {
        if (x >= 0) {
            double e = std::exp(-x);
            return 1.0 / (1.0 + e);
        }
        double e = std::exp(x);
        return e / (1.0 + e);
    }

    static double softplus_scalar(double x) {
        if (x > 0) return x + std::log1p(std::exp(-x));
        return std::log1p(std::exp(x));
    }

    static void axpy(Tensor& dst, const Tensor& src) {
        for (size_t i = 0; i < dst.size(); ++i) dst.v[i] += src.v[i];
    }

    static void mm_nn(const Tensor& a, const Tensor& b, Tensor& out) {
        out.fill(0.0);
        mm_nn_acc(a, b, out);
    }
    static void mm_nn_acc(const Tensor& a, const Tensor& b, Tensor& out) {
        for (int i = 0; i < a.rows; ++i) {
            double* orow = out.row(i);
            for (int k = 0; k < a.cols; ++k) {
                const double x = a.at(i, k);
                if (x == 0.0) continue;
                const double* brow = b.row(k);
                for (int j = 0; j < b.cols; ++j) orow[j] += x * brow[j];
            }
        }
    }
    // out(+)= a^T * b
    static void mm_tn_acc(const Tensor& a, const Tensor& b, Tensor& out) {
        for (int k = 0; k < a.rows; ++k) {
            const double* arow = a.row(k);
            const double* brow = b.row(k);
            for (int i = 0; i < a.cols; ++i) {
                const double x = arow[i];
                if (x == 0.0) continue;
                double* orow = out.row(i);
                for (int j = 0; j < b.cols; ++j) orow[j] += x * brow[j];
            }
        }
    }
    // out(+)= a * b^T
    static void mm_nt_acc(const Tensor& a, const Tensor& b, Tensor& out) {
        for (int i = 0; i < a.rows; ++i) {
            const double* arow = a.row(i);
            double* orow = out.row(i);
            for (int j = 0; j < b.rows; ++j) {
                const double* brow = b.row(j);
                double s = 0.0;
                for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
                orow[j] += s;
            }
        }
    }

    std::vector<Node> nodes_;
    bool grad_ = true;
    bool backward_done_ = false;
};

}  // namespace dygmamba
