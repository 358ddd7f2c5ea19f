#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "hst/core/error.hpp"
#include "hst/dsp/fft.hpp"
#include "hst/dsp/window.hpp"

namespace hst {

// Short-time Fourier transform, nonnegative bins only. Row-major [bin][frame]
// so a bin's trajectory over time is contiguous.
struct Stft {
    std::size_t bins = 0;    // N/2 + 1
    std::size_t frames = 0;  // floor((len - N) / hop) + 1
    std::vector<std::complex<double>> values;

    const std::complex<double>& at(std::size_t bin, std::size_t frame) const {
        return values[bin * frames + frame];
    }
};

inline std::size_t stft_frame_count(std::size_t len, std::size_t n, std::size_t hop) {
    return len < n ? 0 : (len - n) / hop + 1;
}

// Frame t covers samples [t*hop, t*hop + N); each frame is Hann-windowed and
// transformed; bin k sits at frequency k*fs/N.
inline Stft stft(const std::vector<double>& samples, std::size_t n, std::size_t hop) {
    if (hop == 0) throw ContractError("stft: hop must be positive");
    const std::size_t frames = stft_frame_count(samples.size(), n, hop);
    if (frames == 0) {
        throw InputError("stft: clip of " + std::to_string(samples.size()) +
                         " samples is shorter than one " + std::to_string(n) + "-sample frame");
    }
    const std::vector<double> w = hann_window(n);
    Stft out;
    out.bins = n / 2 + 1;
    out.frames = frames;
    out.values.resize(out.bins * frames);
    std::vector<std::complex<double>> buf(n);
    for (std::size_t t = 0; t < frames; ++t) {
        const double* frame = samples.data() + t * hop;
        for (std::size_t i = 0; i < n; ++i) buf[i] = {frame[i] * w[i], 0.0};
        fft_radix2(buf);
        for (std::size_t k = 0; k < out.bins; ++k) out.values[k * frames + t] = buf[k];
    }
    return out;
}

// |A|^2, same [bin][frame] layout.
inline std::vector<double> stft_power(const Stft& s) {
    std::vector<double> p(s.values.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(s.values[i]);
    return p;
}

}  // namespace hst
