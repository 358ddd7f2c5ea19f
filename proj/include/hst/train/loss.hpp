#pragma once

#include <cmath>
#include <vector>

#include "hst/core/ops.hpp"

namespace hst {

// Mean binary cross-entropy on the class-1 softmax probability:
//   loss = -(1/J) sum_j [x_j log p1_j + (1 - x_j) log(1 - p1_j)]
// with log arguments floored at 1e-12. A floored term is constant, so its
// gradient contribution is zero.
template <typename T>
Tensor<T> cross_entropy(Tape<T>* tape, const Tensor<T>& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2 || logits.shape()[1] != 2) {
        throw ShapeError("cross_entropy: logits must be [J, 2], got " + shape_str(logits.shape()));
    }
    const std::size_t j_count = logits.shape()[0];
    if (j_count == 0 || labels.size() != j_count) {
        throw ShapeError("cross_entropy: need one label per row");
    }
    for (int l : labels) {
        if (l != 0 && l != 1) throw InputError("cross_entropy: label must be 0 or 1");
    }
    constexpr double kFloor = 1e-12;

    auto lv = logits.values();
    std::vector<T> p1(j_count);
    double total = 0.0;
    for (std::size_t j = 0; j < j_count; ++j) {
        const double l0 = double(lv[j * 2]), l1 = double(lv[j * 2 + 1]);
        const double m = std::max(l0, l1);
        const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
        const double p = e1 / (e0 + e1);
        p1[j] = T(p);
        const double hit = labels[j] == 1 ? p : 1.0 - p;
        total -= std::log(std::max(hit, kFloor));
    }
    Tensor<T> out = Tensor<T>::scalar(T(total / double(j_count)));
    out.set_requires_grad(logits.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([ls = logits.storage(), os = out.storage(), p1, labels, j_count] {
            ls->ensure_grad();
            const T go = os->grad[0];
            for (std::size_t j = 0; j < j_count; ++j) {
                const double p = double(p1[j]);
                const double q = 1.0 - p;
                // d loss_j / d p, honoring the flooring of each log term
                double dldp = 0.0;
                if (labels[j] == 1) {
                    if (p > kFloor) dldp = -1.0 / p;
                } else {
                    if (q > kFloor) dldp = 1.0 / q;
                }
                const double dp_dl1 = p * q;  // d p1 / d logit1 = -d p1 / d logit0
                const T g = go * T(dldp * dp_dl1 / double(j_count));
                ls->grad[j * 2] += -g;
                ls->grad[j * 2 + 1] += g;
            }
        });
    }
    return out;
}

}  // namespace hst
