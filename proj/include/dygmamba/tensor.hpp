#pragma once

#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

#include "dygmamba/errors.hpp"

namespace dygmamba {

// Dense row-major matrix of doubles. All training math runs at 64-bit.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c, double fill = 0.0) : rows(r), cols(c), v(size_t(r) * size_t(c), fill) {}

    static Tensor from_rows(int r, int c, std::initializer_list<double> xs) {
        Tensor t(r, c);
        require(xs.size() == t.v.size(), ErrorKind::dimension, "from_rows: element count mismatch");
        size_t i = 0;
        for (double x : xs) t.v[i++] = x;
        return t;
    }

    double& at(int i, int j) { return v[size_t(i) * cols + j]; }
    double at(int i, int j) const { return v[size_t(i) * cols + j]; }
    const double* row(int i) const { return v.data() + size_t(i) * cols; }
    double* row(int i) { return v.data() + size_t(i) * cols; }

    size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

// Trainable tensor with persistent gradient storage. Gradients accumulate
// across backward passes until the optimizer zeroes them.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor val)
        : name(std::move(n)), value(std::move(val)), grad(value.rows, value.cols, 0.0) {}

    void zero_grad() { grad.fill(0.0); }
};

}  // namespace dygmamba
