#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hst/core/error.hpp"

namespace hst {

// Periodic Hann window: w[n] = 0.5 - 0.5 cos(2 pi n / N), n in [0, N).
inline std::vector<double> hann_window(std::size_t n) {
    if (n < 2) throw ContractError("hann: N >= 2 required");
    std::vector<double> w(n);
    const double step = 2.0 * 3.14159265358979323846 / double(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(step * double(i));
    return w;
}

}  // namespace hst
