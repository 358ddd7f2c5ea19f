#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "hst/core/rng.hpp"
#include "hst/dsp/fft.hpp"
#include "hst/dsp/wav.hpp"
#include "hst/eval/manifest.hpp"

namespace hst {

struct SynthSpec {
    std::size_t per_class = 200;
    double fs = 22050.0;
    double dur_min = 3.0;  // seconds; admission requires > 2 s after trim
    double dur_max = 4.0;
    bool separable = true;
    std::uint64_t seed = 7;

    // class 0: narrowband cyclic tones with silent gaps
    double tone_lo = 200.0, tone_hi = 800.0;
    // class 1: sustained broadband bursts
    double band_lo = 100.0, band_hi = 5000.0;

    void validate() const {
        if (per_class < 1) throw ConfigError("synth.per_class must be positive");
        if (dur_min <= 2.0 || dur_max < dur_min) {
            throw ConfigError("synth durations must satisfy 2 < dur_min <= dur_max");
        }
        if (tone_lo <= 0 || tone_hi <= tone_lo || band_lo <= 0 || band_hi <= band_lo) {
            throw ConfigError("synth band edges must be increasing and positive");
        }
        if (band_hi >= fs / 2) throw ConfigError("synth.band_hi must be below Nyquist");
    }
};

namespace detail {

// cyclic gated tone, one or two partials inside [tone_lo, tone_hi]; with
// separable=false the tones spread across the class-1 band instead
inline std::vector<double> synth_class0(const SynthSpec& spec, Rng& rng, std::size_t n) {
    const double hi = spec.separable ? spec.tone_hi : 0.9 * spec.band_hi;
    const double f0 = rng.uniform(spec.tone_lo, 0.75 * hi);
    const double f1 = std::min(hi, f0 * rng.uniform(1.2, 1.6));
    const double period = rng.uniform(0.30, 0.55);  // seconds per on/off cycle
    const double duty = rng.uniform(0.45, 0.60);
    const double amp = rng.uniform(0.25, 0.6);
    const double phase0 = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = double(i) / spec.fs;
        const double cycle = std::fmod(t, period) / period;
        if (cycle >= duty) continue;  // silent gap
        // raised-cosine attack/decay inside each burst
        const double env = 0.5 * (1.0 - std::cos(2.0 * 3.14159265358979323846 * cycle / duty));
        x[i] = amp * env *
               (std::sin(2.0 * 3.14159265358979323846 * f0 * t + phase0) +
                0.4 * std::sin(2.0 * 3.14159265358979323846 * f1 * t));
    }
    return x;
}

// band-limited Gaussian noise via FFT masking, slow amplitude modulation
inline std::vector<double> synth_class1(const SynthSpec& spec, Rng& rng, std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    std::vector<std::complex<double>> buf(m);
    for (std::size_t i = 0; i < n; ++i) buf[i] = rng.normal();
    fft_radix2(buf, false);
    const double bin_hz = spec.fs / double(m);
    for (std::size_t k = 0; k <= m / 2; ++k) {
        const double f = double(k) * bin_hz;
        if (f < spec.band_lo || f > spec.band_hi) {
            buf[k] = 0.0;
            if (k > 0 && k < m / 2) buf[m - k] = 0.0;
        }
    }
    fft_radix2(buf, true);

    const double amp = rng.uniform(0.2, 0.5);
    const double mod_hz = rng.uniform(0.5, 2.0);
    const double mod_depth = rng.uniform(0.15, 0.35);
    double peak = 1e-12;
    for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, std::abs(buf[i].real()));
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = double(i) / spec.fs;
        const double env =
            1.0 - mod_depth * 0.5 *
                      (1.0 + std::cos(2.0 * 3.14159265358979323846 * mod_hz * t));
        x[i] = amp * env * buf[i].real() / peak;
    }
    return x;
}

}  // namespace detail

inline std::vector<double> synth_clip(const SynthSpec& spec, int label, std::size_t index) {
    Rng rng(derive_seed(spec.seed, "clip-" + std::to_string(label) + "-" + std::to_string(index)));
    const double dur = rng.uniform(spec.dur_min, spec.dur_max);
    const std::size_t n = std::size_t(std::llround(dur * spec.fs));
    return label == 0 ? detail::synth_class0(spec, rng, n) : detail::synth_class1(spec, rng, n);
}

// Writes per_class WAV files for each class plus manifest.jsonl; returns the
// manifest. Deterministic for a fixed spec.
inline std::vector<ManifestRecord> generate_corpus(const SynthSpec& spec,
                                                   const std::string& out_dir) {
    spec.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

    std::vector<ManifestRecord> manifest;
    for (int label = 0; label < 2; ++label) {
        for (std::size_t i = 0; i < spec.per_class; ++i) {
            ManifestRecord r;
            r.id = "synth-c" + std::to_string(label) + "-" + std::to_string(i);
            r.path = (fs::path(out_dir) / (r.id + ".wav")).string();
            r.label = label;
            r.modality = label == 0 ? "cough" : "breath";
            r.group = "class" + std::to_string(label);
            write_wav_16bit(r.path, synth_clip(spec, label, i), std::size_t(spec.fs));
            manifest.push_back(std::move(r));
        }
    }
    write_manifest((fs::path(out_dir) / "manifest.jsonl").string(), manifest);
    return manifest;
}

}  // namespace hst
