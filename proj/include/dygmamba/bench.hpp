#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "dygmamba/mlp.hpp"
#include "dygmamba/ssm.hpp"

namespace dygmamba {

// Single-head scaled dot-product self-attention with fixed random
// projections; the quadratic reference the scan is measured against.
class AttentionReference {
public:
    AttentionReference(int width, uint64_t seed) {
        Rng rng(splitmix64(seed ^ 0x61747465ULL));
        wq_ = glorot_uniform(width, width, rng);
        wk_ = glorot_uniform(width, width, rng);
        wv_ = glorot_uniform(width, width, rng);
    }

    Tensor forward(const Tensor& H) const {
        require(H.cols == wq_.rows, ErrorKind::dimension, "attention: width mismatch");
        require(H.all_finite(), ErrorKind::numeric, "attention: non-finite input");
        const int L = H.rows, C = H.cols;
        Tensor Q = project(H, wq_), K = project(H, wk_), V = project(H, wv_);
        const double inv_sqrt = 1.0 / std::sqrt(double(C));
        Tensor out(L, C);
        std::vector<double> row(L);
        for (int i = 0; i < L; ++i) {
            double mx = -1e300;
            for (int j = 0; j < L; ++j) {
                double s = 0.0;
                const double* qi = Q.row(i);
                const double* kj = K.row(j);
                for (int c = 0; c < C; ++c) s += qi[c] * kj[c];
                row[j] = s * inv_sqrt;
                mx = std::max(mx, row[j]);
            }
            double sum = 0.0;
            for (int j = 0; j < L; ++j) {
                row[j] = std::exp(row[j] - mx);
                sum += row[j];
            }
            double* oi = out.row(i);
            for (int j = 0; j < L; ++j) {
                const double w = row[j] / sum;
                const double* vj = V.row(j);
                for (int c = 0; c < C; ++c) oi[c] += w * vj[c];
            }
        }
        return out;
    }

private:
    static Tensor project(const Tensor& H, const Tensor& W) {
        Tensor out(H.rows, W.cols);
        for (int i = 0; i < H.rows; ++i)
            for (int k = 0; k < H.cols; ++k) {
                const double x = H.at(i, k);
                const double* wrow = W.row(k);
                double* orow = out.row(i);
                for (int j = 0; j < W.cols; ++j) orow[j] += x * wrow[j];
            }
        return out;
    }

    Tensor wq_, wk_, wv_;
};

struct BenchResult {
    int seq_len = 0;
    std::string kernel;  // "scan" or "attention"
    double median_ns = 0.0;
    int reps = 0;
    int width = 0;
    double checksum = 0.0;  // sum of output entries, for instrumentation checks
};

namespace detail {
inline double checksum(const Tensor& t) {
    double s = 0.0;
    for (double x : t.v) s += x;
    return s;
}
}  // namespace detail

// Forward-only wall-clock medians for the selective scan and the attention
// reference at each length, fixed width, identical inputs, two untimed
// warmups per kernel.
inline std::vector<BenchResult> scaling_run(const std::vector<int>& lengths, int width, int reps,
                                            uint64_t seed) {
    require(reps >= 5, ErrorKind::config, "scaling_run: reps must be >= 5");
    require(std::is_sorted(lengths.begin(), lengths.end()), ErrorKind::config,
            "scaling_run: lengths must be ascending");
    Rng rng(splitmix64(seed ^ 0x62656e6368ULL));
    SelectiveBlock blk = make_selective_block("bench", width, 16, false, rng);
    AttentionReference attn(width, seed);

    std::vector<BenchResult> out;
    for (int L : lengths) {
        Tensor H(L, width);
        for (double& x : H.v) x = rng.uniform(-1.0, 1.0);

        auto time_kernel = [&](auto&& fn, const char* name) {
            double sink = 0.0;
            for (int w = 0; w < 2; ++w) sink += detail::checksum(fn());
            std::vector<double> ns(reps);
            for (int r = 0; r < reps; ++r) {
                auto t0 = std::chrono::steady_clock::now();
                Tensor y = fn();
                auto t1 = std::chrono::steady_clock::now();
                ns[r] = std::chrono::duration<double, std::nano>(t1 - t0).count();
                sink += detail::checksum(y);
            }
            std::sort(ns.begin(), ns.end());
            BenchResult r;
            r.seq_len = L;
            r.kernel = name;
            r.median_ns = ns[ns.size() / 2];
            r.reps = reps;
            r.width = width;
            r.checksum = detail::checksum(fn());
            (void)sink;
            out.push_back(r);
        };
        time_kernel([&] { return selective_scan_values(blk, H); }, "scan");
        time_kernel([&] { return attn.forward(H); }, "attention");
    }
    return out;
}

inline void write_bench_csv(const std::vector<BenchResult>& rs, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot write " + path);
    out << "seq_len,kernel,median_ns,reps,width\n";
    char buf[64];
    for (const auto& r : rs) {
        std::snprintf(buf, sizeof buf, "%.17g", r.median_ns);
        out << r.seq_len << "," << r.kernel << "," << buf << "," << r.reps << "," << r.width << "\n";
    }
}

inline std::vector<BenchResult> read_bench_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open " + path);
    std::string line;
    require(bool(std::getline(in, line)) && line == "seq_len,kernel,median_ns,reps,width",
            ErrorKind::parse, "bench csv: bad header");
    std::vector<BenchResult> out;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line);
        require(f.size() == 5, ErrorKind::parse, "bench csv: bad row at line " + std::to_string(line_no));
        BenchResult r;
        r.seq_len = int(detail::parse_int(f[0], line_no, "seq_len"));
        r.kernel = f[1];
        r.median_ns = detail::parse_double(f[2], line_no, "median_ns");
        r.reps = int(detail::parse_int(f[3], line_no, "reps"));
        r.width = int(detail::parse_int(f[4], line_no, "width"));
        out.push_back(r);
    }
    return out;
}

}  // namespace dygmamba
