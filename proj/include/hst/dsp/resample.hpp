#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hst/core/error.hpp"

namespace hst {

// Band-limited resampling with a Hann-windowed sinc kernel. When
// downsampling, the kernel cutoff shrinks to the output Nyquist and its
// support widens correspondingly, so aliasing stays suppressed.
inline std::vector<double> resample_sinc(const std::vector<double>& x, double fs_in,
                                         double fs_out) {
    if (fs_in <= 0.0 || fs_out <= 0.0) throw ContractError("resample: rates must be positive");
    if (x.empty()) throw InputError("resample: empty input");
    if (fs_in == fs_out) return x;
    const double ratio = fs_out / fs_in;
    const double cutoff = std::min(1.0, ratio);  // fraction of input Nyquist
    const double support = 32.0 / cutoff;        // kernel half-width in input samples
    const std::size_t out_len =
        std::max<std::size_t>(1, std::size_t(std::llround(double(x.size()) * ratio)));
    const double pi = 3.14159265358979323846;
    std::vector<double> y(out_len, 0.0);
    const std::ptrdiff_t n = std::ptrdiff_t(x.size());
    for (std::size_t i = 0; i < out_len; ++i) {
        const double t = double(i) / ratio;  // position in input samples
        const std::ptrdiff_t m0 = std::max<std::ptrdiff_t>(0, std::ptrdiff_t(std::ceil(t - support)));
        const std::ptrdiff_t m1 =
            std::min<std::ptrdiff_t>(n - 1, std::ptrdiff_t(std::floor(t + support)));
        double acc = 0.0;
        for (std::ptrdiff_t m = m0; m <= m1; ++m) {
            const double u = t - double(m);
            const double a = pi * cutoff * u;
            const double sinc = a == 0.0 ? 1.0 : std::sin(a) / a;
            const double win = 0.5 + 0.5 * std::cos(pi * u / support);
            acc += x[std::size_t(m)] * cutoff * sinc * win;
        }
        y[i] = acc;
    }
    return y;
}

}  // namespace hst
