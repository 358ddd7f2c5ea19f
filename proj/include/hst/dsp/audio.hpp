#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hst/core/error.hpp"

namespace hst {

struct AudioClip {
    std::vector<double> samples;  // nominal range [-1, 1]
    double fs = 0.0;

    double duration() const { return fs > 0.0 ? double(samples.size()) / fs : 0.0; }
};

// Leading/trailing spans whose short-window RMS sits more than threshold_db
// below the loudest window's RMS are dropped; the interior is untouched.
inline AudioClip trim_silence(const AudioClip& clip, double threshold_db = 60.0,
                              double window_s = 0.010) {
    if (clip.samples.empty()) throw InputError("trim_silence: empty clip");
    const std::size_t w = std::max<std::size_t>(1, std::size_t(std::lround(window_s * clip.fs)));
    const std::size_t n = clip.samples.size();
    const std::size_t wins = (n + w - 1) / w;
    std::vector<double> rms(wins, 0.0);
    double peak = 0.0;
    for (std::size_t j = 0; j < wins; ++j) {
        const std::size_t lo = j * w;
        const std::size_t hi = std::min(n, lo + w);
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += clip.samples[i] * clip.samples[i];
        rms[j] = std::sqrt(acc / double(hi - lo));
        peak = std::max(peak, rms[j]);
    }
    if (peak <= 0.0) throw InputError("trim_silence: clip is entirely silent");
    const double gate = peak * std::pow(10.0, -threshold_db / 20.0);
    std::size_t first = 0;
    while (first < wins && rms[first] <= gate) ++first;
    std::size_t last = wins;
    while (last > first && rms[last - 1] <= gate) --last;
    if (first >= last) throw InputError("trim_silence: no window exceeds the silence gate");
    AudioClip out;
    out.fs = clip.fs;
    out.samples.assign(clip.samples.begin() + std::ptrdiff_t(first * w),
                       clip.samples.begin() + std::ptrdiff_t(std::min(n, last * w)));
    return out;
}

// Pipeline admission rule: recordings at or under two seconds are rejected.
inline void require_admissible(const AudioClip& clip) {
    if (clip.duration() <= 2.0) {
        throw InputError("clip too short for analysis: " + std::to_string(clip.duration()) +
                         " s (need > 2 s)");
    }
}

}  // namespace hst
