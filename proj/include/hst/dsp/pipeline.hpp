#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hst/core/error.hpp"
#include "hst/dsp/audio.hpp"
#include "hst/dsp/image.hpp"
#include "hst/dsp/mel.hpp"
#include "hst/dsp/stft.hpp"

namespace hst {

struct DspConfig {
    std::size_t n_fft = 2048;
    std::size_t overlap = 128;  // samples shared between consecutive segments
    std::size_t n_mels = 128;
    double f_min = 0.0;
    double f_max = 11025.0;
    std::size_t out_size = 224;
    MelMode mel_mode = MelMode::triangular;
    double log_floor = 1e-10;
    double trim_db = 60.0;
    double target_fs = 22050.0;

    std::size_t hop() const { return n_fft - overlap; }

    void validate() const {
        if (n_fft != 1024 && n_fft != 2048 && n_fft != 4096) {
            throw ConfigError("dsp.n_fft must be one of 1024, 2048, 4096");
        }
        if (overlap >= n_fft) throw ConfigError("dsp.overlap must be smaller than n_fft");
        if (n_mels < 1) throw ConfigError("dsp.n_mels must be >= 1");
        if (!(f_min >= 0.0) || !(f_min < f_max)) throw ConfigError("dsp: need 0 <= f_min < f_max");
        if (f_max > target_fs / 2.0 + 1e-9) throw ConfigError("dsp.f_max exceeds Nyquist");
        if (out_size < 2) throw ConfigError("dsp.out_size must be >= 2");
        if (log_floor <= 0.0) throw ConfigError("dsp.log_floor must be > 0");
        if (target_fs <= 0.0) throw ConfigError("dsp.target_fs must be > 0");
    }
};

// stft -> |.|^2 -> mel -> log -> resize -> normalize. Row r of the output is
// mel band r (low frequencies at row 0), columns are time.
inline Image compute_spectrogram(const AudioClip& clip, const DspConfig& cfg) {
    cfg.validate();
    const Stft s = stft(clip.samples, cfg.n_fft, cfg.hop());
    const std::vector<double> power = stft_power(s);
    const MelFilterbank fb =
        mel_filterbank(cfg.n_mels, cfg.n_fft, clip.fs, cfg.f_min, cfg.f_max, cfg.mel_mode);
    Image mel_img;
    mel_img.h = cfg.n_mels;
    mel_img.w = s.frames;
    mel_img.values = log_mel(power, s.frames, fb, cfg.log_floor);
    const Image resized = resize_bilinear(mel_img, cfg.out_size, cfg.out_size);
    return normalize_half(resized);
}

// Cache file: "HSTSPEC1" magic, u32 height, u32 width (little-endian), then
// height*width float32 little-endian row-major values.
inline void save_spectrogram_cache(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    out.write("HSTSPEC1", 8);
    const std::uint32_t h = std::uint32_t(img.h), w = std::uint32_t(img.w);
    unsigned char hdr[8] = {
        static_cast<unsigned char>(h & 0xFF),       static_cast<unsigned char>(h >> 8 & 0xFF),
        static_cast<unsigned char>(h >> 16 & 0xFF), static_cast<unsigned char>(h >> 24 & 0xFF),
        static_cast<unsigned char>(w & 0xFF),       static_cast<unsigned char>(w >> 8 & 0xFF),
        static_cast<unsigned char>(w >> 16 & 0xFF), static_cast<unsigned char>(w >> 24 & 0xFF)};
    out.write(reinterpret_cast<char*>(hdr), 8);
    for (double v : img.values) {
        const float f = float(v);
        char b[4];
        std::memcpy(b, &f, 4);
        out.write(b, 4);
    }
    if (!out) throw IoError("short write to " + path);
}

inline Image load_spectrogram_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "HSTSPEC1", 8) != 0) {
        throw InputError(path + ": not a spectrogram cache file");
    }
    unsigned char hdr[8];
    in.read(reinterpret_cast<char*>(hdr), 8);
    if (!in) throw InputError(path + ": truncated header");
    const std::uint32_t h = std::uint32_t(hdr[0]) | std::uint32_t(hdr[1]) << 8 |
                            std::uint32_t(hdr[2]) << 16 | std::uint32_t(hdr[3]) << 24;
    const std::uint32_t w = std::uint32_t(hdr[4]) | std::uint32_t(hdr[5]) << 8 |
                            std::uint32_t(hdr[6]) << 16 | std::uint32_t(hdr[7]) << 24;
    if (h == 0 || w == 0) throw InputError(path + ": degenerate extents");
    Image img;
    img.h = h;
    img.w = w;
    img.values.resize(std::size_t(h) * w);
    for (auto& v : img.values) {
        char b[4];
        in.read(b, 4);
        if (!in) throw InputError(path + ": truncated payload");
        float f;
        std::memcpy(&f, b, 4);
        v = double(f);
    }
    return img;
}

}  // namespace hst
