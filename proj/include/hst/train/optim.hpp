#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hst/core/tensor.hpp"

namespace hst {

struct TrainConfig {
    double lr = 1e-5;
    double weight_decay = 1e-8;
    std::size_t batch_size = 8;
    std::size_t max_epochs = 100;
    double clip_norm = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t patience = 10;
    std::uint64_t seed = 1;

    void validate() const {
        if (lr < 0.0) throw ConfigError("train.lr must be nonnegative");
        if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be nonnegative");
        if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
        if (max_epochs == 0) throw ConfigError("train.max_epochs must be positive");
        if (clip_norm <= 0.0) throw ConfigError("train.clip_norm must be positive");
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
            throw ConfigError("train.betas must lie in [0, 1)");
        }
        if (eps <= 0.0) throw ConfigError("train.eps must be positive");
    }
};

// Scales every gradient by max_norm / g when the global L2 norm g exceeds
// max_norm. Returns the pre-clip norm.
template <typename T>
T clip_grad_norm(std::vector<Tensor<T>>& params, T max_norm) {
    double sq = 0.0;
    for (auto& p : params) {
        if (!p.has_grad()) continue;
        for (T g : p.grad()) {
            if (!std::isfinite(double(g))) {
                throw NumericError("clip_grad_norm: non-finite gradient");
            }
            sq += double(g) * double(g);
        }
    }
    const double norm = std::sqrt(sq);
    // the relative slack keeps a second clip from rescaling by 1 - ulp
    if (norm > double(max_norm) * (1.0 + 1e-12)) {
        const T s = T(double(max_norm) / norm);
        for (auto& p : params) {
            if (!p.has_grad()) continue;
            for (T& g : p.grad()) g *= s;
        }
    }
    return T(norm);
}

// AdamW with decoupled weight decay:
//   m = b1 m + (1-b1) g,  v = b2 v + (1-b2) g^2
//   theta -= lr * (mhat / (sqrt(vhat) + eps) + wd * theta)
template <typename T>
class AdamW {
  public:
    AdamW(const std::vector<Tensor<T>>& params, const TrainConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        for (const auto& p : params) {
            m_.emplace_back(p.size(), T(0));
            v_.emplace_back(p.size(), T(0));
        }
    }

    std::size_t step_count() const { return t_; }

    void step(std::vector<Tensor<T>>& params) {
        if (params.size() != m_.size()) {
            throw ShapeError("adamw: parameter list changed size");
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& p = params[i];
            if (p.size() != m_[i].size()) {
                throw ShapeError("adamw: shape mismatch on parameter " + std::to_string(i));
            }
            if (!p.has_grad()) continue;
            auto theta = p.values();
            auto grad = p.grad();
            for (std::size_t k = 0; k < theta.size(); ++k) {
                const double g = double(grad[k]);
                m_[i][k] = T(cfg_.beta1 * double(m_[i][k]) + (1.0 - cfg_.beta1) * g);
                v_[i][k] = T(cfg_.beta2 * double(v_[i][k]) + (1.0 - cfg_.beta2) * g * g);
                const double mhat = double(m_[i][k]) / bc1;
                const double vhat = double(v_[i][k]) / bc2;
                theta[k] = T(double(theta[k]) -
                             cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                                        cfg_.weight_decay * double(theta[k])));
            }
        }
    }

  private:
    TrainConfig cfg_;
    std::vector<std::vector<T>> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace hst
