#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hst/core/error.hpp"

namespace hst {

inline double mel_of_hz(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }

inline double hz_of_mel(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

enum class MelMode {
    triangular,   // standard overlapping triangular pooling
    nearest_bin,  // sample the single FFT bin nearest each band center
};

inline MelMode mel_mode_from(const std::string& name) {
    if (name == "triangular") return MelMode::triangular;
    if (name == "nearest_bin") return MelMode::nearest_bin;
    throw ConfigError("unknown mel mode " + name);
}

struct MelFilterbank {
    std::size_t n_mels = 0;
    std::size_t bins = 0;                // N/2 + 1
    std::vector<double> weights;         // [n_mels x bins], row-major
    std::vector<double> center_freqs;    // Hz, strictly increasing

    double weight(std::size_t band, std::size_t bin) const { return weights[band * bins + bin]; }
};

// Band centers are spaced uniformly on the mel scale across [f_min, f_max].
inline MelFilterbank mel_filterbank(std::size_t n_mels, std::size_t n_fft, double fs,
                                    double f_min, double f_max,
                                    MelMode mode = MelMode::triangular) {
    if (n_mels < 1) throw ConfigError("mel: n_mels must be >= 1");
    if (!(f_min >= 0.0) || !(f_min < f_max)) throw ConfigError("mel: need 0 <= f_min < f_max");
    if (f_max > fs / 2.0 + 1e-9) throw ConfigError("mel: f_max exceeds Nyquist");
    const std::size_t bins = n_fft / 2 + 1;
    MelFilterbank fb;
    fb.n_mels = n_mels;
    fb.bins = bins;
    fb.weights.assign(n_mels * bins, 0.0);
    fb.center_freqs.resize(n_mels);

    const double mel_lo = mel_of_hz(f_min);
    const double mel_hi = mel_of_hz(f_max);
    std::vector<double> edges(n_mels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = hz_of_mel(mel_lo + (mel_hi - mel_lo) * double(i) / double(n_mels + 1));
    }
    for (std::size_t m = 0; m < n_mels; ++m) fb.center_freqs[m] = edges[m + 1];

    const double bin_hz = fs / double(n_fft);
    for (std::size_t m = 0; m < n_mels; ++m) {
        const double lo = edges[m], c = edges[m + 1], hi = edges[m + 2];
        bool nonzero = false;
        if (mode == MelMode::nearest_bin) {
            const std::size_t k = std::size_t(std::llround(c / bin_hz));
            if (k < bins) {
                fb.weights[m * bins + k] = 1.0;
                nonzero = true;
            }
        } else {
            for (std::size_t k = 0; k < bins; ++k) {
                const double f = double(k) * bin_hz;
                double w = 0.0;
                if (f > lo && f < hi) {
                    w = f <= c ? (f - lo) / (c - lo) : (hi - f) / (hi - c);
                }
                if (w > 0.0) {
                    fb.weights[m * bins + k] = w;
                    nonzero = true;
                }
            }
        }
        if (!nonzero) {
            throw ConfigError("mel: band " + std::to_string(m) +
                              " covers no FFT bin; reduce n_mels or widen the range");
        }
    }
    return fb;
}

// log(max(W |A|^2, floor)). power is [bins x frames]; output [n_mels x frames].
inline std::vector<double> log_mel(const std::vector<double>& power, std::size_t frames,
                                   const MelFilterbank& fb, double floor = 1e-10) {
    if (power.size() != fb.bins * frames) {
        throw ContractError("log_mel: power matrix does not match filterbank geometry");
    }
    std::vector<double> out(fb.n_mels * frames, 0.0);
    for (std::size_t m = 0; m < fb.n_mels; ++m) {
        for (std::size_t k = 0; k < fb.bins; ++k) {
            const double w = fb.weights[m * fb.bins + k];
            if (w == 0.0) continue;
            const double* prow = power.data() + k * frames;
            double* orow = out.data() + m * frames;
            for (std::size_t t = 0; t < frames; ++t) orow[t] += w * prow[t];
        }
    }
    for (auto& v : out) v = std::log(std::max(v, floor));
    return out;
}

}  // namespace hst
