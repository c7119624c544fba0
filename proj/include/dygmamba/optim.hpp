#pragma once

#include <cmath>
#include <vector>

#include "dygmamba/errors.hpp"
#include "dygmamba/tensor.hpp"

namespace dygmamba {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam. Parameter order is fixed at construction, so updates
// are deterministic.
class Adam {
public:
    Adam(std::vector<Parameter*> params, AdamConfig cfg = {})
        : params_(std::move(params)), cfg_(cfg) {
        for (Parameter* p : params_) {
            m_.emplace_back(p->value.rows, p->value.cols, 0.0);
            v_.emplace_back(p->value.rows, p->value.cols, 0.0);
        }
    }

    void zero_grad() {
        for (Parameter* p : params_) p->zero_grad();
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (size_t i = 0; i < params_.size(); ++i) {
            Parameter& p = *params_[i];
            for (size_t j = 0; j < p.value.size(); ++j) {
                const double g = p.grad.v[j];
                if (!std::isfinite(g))
                    raise(ErrorKind::numeric,
                          "adam: non-finite gradient in parameter '" + p.name + "'");
                m_[i].v[j] = cfg_.beta1 * m_[i].v[j] + (1.0 - cfg_.beta1) * g;
                v_[i].v[j] = cfg_.beta2 * v_[i].v[j] + (1.0 - cfg_.beta2) * g * g;
                const double mhat = m_[i].v[j] / bc1;
                const double vhat = v_[i].v[j] / bc2;
                p.value.v[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    long steps() const { return t_; }

private:
    std::vector<Parameter*> params_;
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    long t_ = 0;
};

}  // namespace dygmamba
