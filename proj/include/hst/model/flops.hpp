#pragma once

#include <array>
#include <cstddef>

#include "hst/model/config.hpp"

namespace hst {

enum class AttnKind { windowed, global };

// Analytic multiply-accumulate model of one forward pass.
//
// Per LWMSA over a P x P map with window M and width C:
//   q/k/v/out projections        4 P^2 C^2
//   scores Q K^T                 P^2 M^2 C   (windowed)   P^4 C   (global)
//   apply  probs V               P^2 M^2 C                P^4 C
// Per MLP: 8 P^2 C^2. One block holds two LWMSA and two MLP.
struct StageFlops {
    std::size_t scores = 0;  // attention-score terms (QK^T + probs V)
    std::size_t proj = 0;    // q/k/v/out projections
    std::size_t mlp = 0;

    std::size_t total() const { return scores + proj + mlp; }
};

struct FlopsEstimate {
    std::array<StageFlops, 4> stages;
    std::size_t embed = 0;
    std::size_t merge = 0;
    std::size_t head = 0;

    std::size_t total() const {
        std::size_t t = embed + merge + head;
        for (const auto& s : stages) t += s.total();
        return t;
    }
};

// Closed-form parameter count (weights + biases + gamma/beta + bias tables).
inline std::size_t hst_param_count(const HstConfig& cfg) {
    std::size_t total = cfg.patch * cfg.patch * cfg.dims[0] + cfg.dims[0];
    for (std::size_t s = 0; s < 4; ++s) {
        const std::size_t c = cfg.dims[s];
        const std::size_t m = cfg.window_at(s);
        const std::size_t tbl = (2 * m - 1) * (2 * m - 1);
        total += cfg.depths[s] * (24 * c * c + 20 * c + 2 * cfg.heads[s] * tbl);
        if (s < 3) total += 8 * c * c;
    }
    return total + 2 * cfg.dims[3] + cfg.dims[3] * cfg.num_classes + cfg.num_classes;
}

inline FlopsEstimate flops_estimate(const HstConfig& cfg, AttnKind kind) {
    cfg.validate();
    FlopsEstimate est;
    est.embed = cfg.grid0() * cfg.grid0() * cfg.patch * cfg.patch * cfg.dims[0];
    for (std::size_t s = 0; s < 4; ++s) {
        const std::size_t p = cfg.grid(s);
        const std::size_t m = cfg.window_at(s);
        const std::size_t c = cfg.dims[s];
        const std::size_t p2 = p * p;
        const std::size_t score_span = kind == AttnKind::windowed ? m * m : p2;
        const std::size_t per_lwmsa_scores = 2 * p2 * score_span * c;
        const std::size_t per_lwmsa_proj = 4 * p2 * c * c;
        const std::size_t per_mlp = 2 * p2 * c * cfg.mlp_ratio * c;
        est.stages[s].scores = cfg.depths[s] * 2 * per_lwmsa_scores;
        est.stages[s].proj = cfg.depths[s] * 2 * per_lwmsa_proj;
        est.stages[s].mlp = cfg.depths[s] * 2 * per_mlp;
        if (s < 3) {
            const std::size_t merged = p2 / 4;
            est.merge += merged * 4 * c * 2 * c;
        }
    }
    est.head = cfg.dims[3] * cfg.num_classes;
    return est;
}

}  // namespace hst
