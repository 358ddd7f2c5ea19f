#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hst/core/error.hpp"
#include "hst/dsp/audio.hpp"
#include "hst/dsp/resample.hpp"

namespace hst {

namespace detail {

inline std::uint32_t rd_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
}

inline std::uint16_t rd_u16(const unsigned char* p) {
    return std::uint16_t(p[0] | p[1] << 8);
}

}  // namespace detail

// Minimal RIFF/WAVE reader: PCM 8/16/24-bit and IEEE float32, any channel
// count (channels are averaged to mono). Anything else is rejected.
inline AudioClip read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (raw.size() < 44 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
        std::memcmp(raw.data() + 8, "WAVE", 4) != 0) {
        throw InputError(path + ": not a RIFF/WAVE file");
    }
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t fs = 0;
    const unsigned char* data = nullptr;
    std::size_t data_len = 0;
    std::size_t off = 12;
    while (off + 8 <= raw.size()) {
        const char* id = reinterpret_cast<const char*>(raw.data() + off);
        const std::uint32_t len = detail::rd_u32(raw.data() + off + 4);
        const std::size_t body = off + 8;
        if (body + len > raw.size()) throw InputError(path + ": truncated chunk");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (len < 16) throw InputError(path + ": malformed fmt chunk");
            format = detail::rd_u16(raw.data() + body);
            channels = detail::rd_u16(raw.data() + body + 2);
            fs = detail::rd_u32(raw.data() + body + 4);
            bits = detail::rd_u16(raw.data() + body + 14);
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = raw.data() + body;
            data_len = len;
        }
        off = body + len + (len & 1);  // chunks are word-aligned
    }
    if (format == 0 || fs == 0 || channels == 0) throw InputError(path + ": missing fmt chunk");
    if (data == nullptr) throw InputError(path + ": missing data chunk");
    const bool pcm = format == 1 && (bits == 8 || bits == 16 || bits == 24);
    const bool f32 = format == 3 && bits == 32;
    if (!pcm && !f32) {
        throw InputError(path + ": unsupported encoding (format " + std::to_string(format) +
                         ", " + std::to_string(bits) + "-bit)");
    }
    const std::size_t bytes_per = bits / 8u;
    const std::size_t frames = data_len / (bytes_per * channels);
    if (frames == 0) throw InputError(path + ": empty audio");
    AudioClip clip;
    clip.fs = double(fs);
    clip.samples.resize(frames);
    const double inv_ch = 1.0 / double(channels);
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            const unsigned char* p = data + (i * channels + c) * bytes_per;
            double v = 0.0;
            if (format == 3) {
                float fv;
                std::memcpy(&fv, p, 4);
                v = double(fv);
            } else if (bits == 8) {
                v = (double(p[0]) - 128.0) / 128.0;  // 8-bit WAV is unsigned
            } else if (bits == 16) {
                const std::int16_t s = std::int16_t(p[0] | p[1] << 8);
                v = double(s) / 32768.0;
            } else {
                std::int32_t s = p[0] | p[1] << 8 | p[2] << 16;
                if (s & 0x800000) s |= ~0xFFFFFF;  // sign-extend 24 bits
                v = double(s) / 8388608.0;
            }
            acc += v;
        }
        clip.samples[i] = acc * inv_ch;
    }
    return clip;
}

// Ingestion: decode, fold to mono, band-limited resample to target_fs.
inline AudioClip load_audio(const std::string& path, double target_fs = 22050.0) {
    AudioClip clip = read_wav(path);
    if (clip.fs != target_fs) {
        clip.samples = resample_sinc(clip.samples, clip.fs, target_fs);
        clip.fs = target_fs;
        for (auto& v : clip.samples) v = std::clamp(v, -1.0, 1.0);
    }
    return clip;
}

inline void write_wav_16bit(const std::string& path, const std::vector<double>& samples,
                            std::uint32_t fs) {
    if (samples.empty()) throw ContractError("write_wav: no samples");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    const std::uint32_t data_len = std::uint32_t(samples.size() * 2);
    auto put_u32 = [&](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>(v >> 8 & 0xFF),
                              static_cast<unsigned char>(v >> 16 & 0xFF),
                              static_cast<unsigned char>(v >> 24 & 0xFF)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    auto put_u16 = [&](std::uint16_t v) {
        unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>(v >> 8 & 0xFF)};
        out.write(reinterpret_cast<char*>(b), 2);
    };
    out.write("RIFF", 4);
    put_u32(36 + data_len);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(fs);
    put_u32(fs * 2);
    put_u16(2);
    put_u16(16);
    out.write("data", 4);
    put_u32(data_len);
    for (double v : samples) {
        const double c = std::clamp(v, -1.0, 1.0);
        const std::int16_t s = std::int16_t(std::lround(c * 32767.0));
        put_u16(std::uint16_t(s));
    }
    if (!out) throw IoError("short write to " + path);
}

}  // namespace hst
