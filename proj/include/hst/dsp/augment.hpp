#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "hst/core/error.hpp"
#include "hst/core/rng.hpp"
#include "hst/dsp/audio.hpp"
#include "hst/dsp/resample.hpp"

namespace hst {

enum class AugmentKind { amplify, pitch_speed, add_noise };

inline AugmentKind augment_kind_from(const std::string& name) {
    if (name == "amplify") return AugmentKind::amplify;
    if (name == "pitch_speed") return AugmentKind::pitch_speed;
    if (name == "add_noise") return AugmentKind::add_noise;
    throw ConfigError("unknown augmentation '" + name + "'");
}

inline AudioClip amplify_by(const AudioClip& clip, double u) {
    AudioClip out;
    out.fs = clip.fs;
    out.samples.resize(clip.samples.size());
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        out.samples[i] = std::clamp(clip.samples[i] * u, -1.0, 1.0);
    }
    return out;
}

// Playback-rate change: factor u < 1 lengthens the clip by 1/u and scales
// every frequency by u.
inline AudioClip pitch_speed_by(const AudioClip& clip, double u) {
    if (u <= 0.0) throw ContractError("pitch_speed: factor must be positive");
    AudioClip out;
    out.fs = clip.fs;
    out.samples = resample_sinc(clip.samples, clip.fs * u, clip.fs);
    return out;
}

inline AudioClip add_noise_snr(const AudioClip& clip, Rng& rng, double snr_db) {
    double power = 0.0;
    for (double v : clip.samples) power += v * v;
    power /= double(clip.samples.size());
    const double noise_sd = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
    AudioClip out;
    out.fs = clip.fs;
    out.samples.resize(clip.samples.size());
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        out.samples[i] = clip.samples[i] + rng.normal(0.0, noise_sd);
    }
    return out;
}

inline AudioClip augment(const AudioClip& clip, Rng& rng, AugmentKind kind) {
    switch (kind) {
        case AugmentKind::amplify:
            return amplify_by(clip, rng.uniform(1.15, 2.0));
        case AugmentKind::pitch_speed:
            return pitch_speed_by(clip, rng.uniform(0.8, 0.99));
        case AugmentKind::add_noise:
            return add_noise_snr(clip, rng, rng.uniform(20.0, 40.0));
    }
    throw ContractError("augment: unreachable");
}

}  // namespace hst
