#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "hst/core/rng.hpp"
#include "hst/core/tensor.hpp"

namespace hst {

// Central-difference verification of reverse-mode gradients.
//
// Call after a forward + backward pass has populated the analytic gradients.
// `loss_fn` must re-evaluate the same forward computation (no tape needed)
// against the current parameter values; each checked coordinate is nudged by
// +/- h, the loss re-evaluated, and the slope compared against the stored
// gradient. Error metric per coordinate:
//
//   |analytic - (f(x+h) - f(x-h)) / 2h|  /  max(1, |analytic|)
//
// Tensors above `coords_per_tensor` entries are spot-checked on sampled
// coordinates; smaller ones exhaustively.
template <typename T, typename LossFn>
double max_rel_grad_error(LossFn&& loss_fn, std::vector<Tensor<T>> params, T h,
                          std::size_t coords_per_tensor, Rng& rng) {
    double worst = 0.0;
    for (auto& p : params) {
        if (!p.has_grad()) throw ContractError("gradcheck: parameter gradient not populated");
        auto v = p.values();
        const auto& g = p.storage()->grad;
        const std::size_t n = v.size();
        std::vector<std::size_t> coords;
        if (n <= coords_per_tensor) {
            coords.resize(n);
            for (std::size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            coords.resize(coords_per_tensor);
            for (auto& c : coords) c = static_cast<std::size_t>(rng.below(n));
        }
        for (std::size_t i : coords) {
            const T keep = v[i];
            v[i] = keep + h;
            const double up = static_cast<double>(loss_fn());
            v[i] = keep - h;
            const double dn = static_cast<double>(loss_fn());
            v[i] = keep;
            const double fd = (up - dn) / (2.0 * static_cast<double>(h));
            const double a = static_cast<double>(g[i]);
            const double err = std::abs(a - fd) / std::max(1.0, std::abs(a));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace hst
