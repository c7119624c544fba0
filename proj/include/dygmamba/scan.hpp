#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dygmamba/errors.hpp"
#include "dygmamba/tensor.hpp"

namespace dygmamba {

// Zero-order-hold discretization of one diagonal state-space coefficient
// pair. a must be strictly negative (stable dynamics), dt strictly positive.
//   abar = exp(dt*a)
//   bbar = ((exp(dt*a) - 1) / a) * b = dt * b * g(dt*a),  g(x) = (e^x - 1)/x
// Near x = 0 the quotient cancels catastrophically, so below |x| < 1e-6 the
// truncated series dt*b*(1 + x/2) is used instead. Both quantities are built
// from one expm1 so the scan kernel and this function stay bit-identical.
struct Discretized {
    double abar;
    double bbar;
};

inline constexpr double kDiscretizeTaylorSwitch = 1e-6;

inline double expm1_over_x(double x) {
    if (std::abs(x) < kDiscretizeTaylorSwitch) return 1.0 + 0.5 * x;
    return std::expm1(x) / x;
}

// d/dx [(e^x - 1)/x] = (e^x (x - 1) + 1) / x^2, forms that reuse a known
// e^x; series below |x| < 1e-4 where the exact form cancels.
inline double expm1_over_x_deriv_from_exp(double x, double ex) {
    if (std::abs(x) < 1e-4) return 0.5 + x / 3.0 + x * x / 8.0;
    return (ex * (x - 1.0) + 1.0) / (x * x);
}

inline double expm1_over_x_deriv(double x) {
    return expm1_over_x_deriv_from_exp(x, std::exp(x));
}

inline Discretized discretize(double a, double b, double dt) {
    require(a < 0.0, ErrorKind::validation,
            "discretize: state coefficient must be negative, got " + std::to_string(a));
    require(dt > 0.0, ErrorKind::validation, "discretize: step must be positive");
    const double x = dt * a;
    const double em1 = std::expm1(x);
    const double g = std::abs(x) < kDiscretizeTaylorSwitch ? 1.0 + 0.5 * x : em1 / x;
    return Discretized{1.0 + em1, dt * b * g};
}

// Input-dependent SISO selective scan over one sequence.
//   H     L x C   per-position channel inputs
//   B     L x N   input projections (shared across channels)
//   Cm    L x N   output projections (shared across channels)
//   Delta L x C   per-position per-channel step sizes (positive)
//   A     C x N   negative state coefficients
// State z[c][n] evolves as z = abar*z + bbar*H[t][c] with (abar, bbar) =
// discretize(A[c][n], B[t][n], Delta[t][c]); output Y[t][c] = sum_n Cm[t][n]*z.
// Channels never mix. Optional out-buffers capture the discretized
// coefficients (layout [t][c][n]) for the backward pass.
inline void scan_forward(const Tensor& H, const Tensor& B, const Tensor& Cm,
                         const Tensor& Delta, const Tensor& A, Tensor& Y,
                         double* abar_out = nullptr, double* bbar_out = nullptr) {
    const int L = H.rows, C = H.cols, N = B.cols;
    require(B.rows == L && Cm.rows == L && Cm.cols == N, ErrorKind::dimension, "scan: B/C shape mismatch");
    require(Delta.rows == L && Delta.cols == C, ErrorKind::dimension, "scan: Delta shape mismatch");
    require(A.rows == C && A.cols == N, ErrorKind::dimension, "scan: A shape mismatch");
    Y = Tensor(L, C);
    std::vector<double> z(size_t(C) * N, 0.0);
    for (int t = 0; t < L; ++t) {
        const double* brow = B.row(t);
        const double* crow = Cm.row(t);
        const double* hrow = H.row(t);
        const double* drow = Delta.row(t);
        double* yrow = Y.row(t);
        for (int c = 0; c < C; ++c) {
            const double dt = drow[c];
            const double h = hrow[c];
            const double* arow = A.row(c);
            double* zc = z.data() + size_t(c) * N;
            const size_t base = (size_t(t) * C + c) * N;
            double acc = 0.0;
            for (int n = 0; n < N; ++n) {
                const double x = dt * arow[n];
                const double em1 = std::expm1(x);
                const double abar = 1.0 + em1;
                const double g = std::abs(x) < kDiscretizeTaylorSwitch ? 1.0 + 0.5 * x : em1 / x;
                const double bbar = dt * brow[n] * g;
                const double zn = abar * zc[n] + bbar * h;
                zc[n] = zn;
                acc += crow[n] * zn;
                if (abar_out) abar_out[base + n] = abar;
                if (bbar_out) bbar_out[base + n] = bbar;
            }
            if (!std::isfinite(acc))
                raise(ErrorKind::numeric, "scan: non-finite output at step " + std::to_string(t));
            yrow[c] = acc;
        }
    }
}

// Reverse-mode adjoint of scan_forward given the forward's discretized
// coefficients. Rebuilds the state trajectory with plain arithmetic and
// sweeps backwards; no transcendentals are evaluated here. Gradients are
// accumulated into the caller's buffers.
inline void scan_backward(const Tensor& H, const Tensor& B, const Tensor& Cm,
                          const Tensor& Delta, const Tensor& A, const Tensor& dY,
                          const double* abar, const double* bbar,
                          Tensor& dH, Tensor& dB, Tensor& dCm, Tensor& dDelta, Tensor& dA) {
    const int L = H.rows, C = H.cols, N = B.cols;
    thread_local std::vector<double> z_traj;
    z_traj.resize(size_t(L) * C * N);
    {
        std::vector<double> z(size_t(C) * N, 0.0);
        for (int t = 0; t < L; ++t) {
            const double* hrow = H.row(t);
            for (int c = 0; c < C; ++c) {
                const double h = hrow[c];
                double* zc = z.data() + size_t(c) * N;
                const size_t base = (size_t(t) * C + c) * N;
                for (int n = 0; n < N; ++n) {
                    zc[n] = abar[base + n] * zc[n] + bbar[base + n] * h;
                    z_traj[base + n] = zc[n];
                }
            }
        }
    }

    for (int c = 0; c < C; ++c) {
        const double* arow = A.row(c);
        double* darow = dA.row(c);
        for (int n = 0; n < N; ++n) {
            const double a = arow[n];
            double adj = 0.0;  // dL/dz[t][c][n], running backwards
            double da = 0.0;
            for (int t = L - 1; t >= 0; --t) {
                const size_t idx = (size_t(t) * C + c) * N + n;
                const double gy = dY.at(t, c);
                adj += Cm.at(t, n) * gy;
                dCm.at(t, n) += gy * z_traj[idx];
                const double zprev = (t > 0) ? z_traj[idx - size_t(C) * N] : 0.0;
                const double dt = Delta.at(t, c);
                const double b = B.at(t, n);
                const double x = dt * a;
                const double ab = abar[idx];
                const double gq = std::abs(x) < kDiscretizeTaylorSwitch ? 1.0 + 0.5 * x : (ab - 1.0) / x;
                const double gqd = expm1_over_x_deriv_from_exp(x, ab);
                const double dabar = adj * zprev;
                const double dbbar = adj * H.at(t, c);
                dH.at(t, c) += adj * bbar[idx];
                // abar = e^x, bbar = dt*b*g(x), x = dt*a
                const double dx = dabar * ab + dbbar * dt * b * gqd;
                dB.at(t, n) += dbbar * dt * gq;
                dDelta.at(t, c) += dbbar * b * gq + dx * a;
                da += dx * dt;
                adj *= ab;
            }
            darow[n] += da;
        }
    }
}

}  // namespace dygmamba
