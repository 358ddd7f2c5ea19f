#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "hst/dsp/image.hpp"
#include "hst/model/hst.hpp"

namespace hst {

struct ActivationMap {
    std::size_t h = 0, w = 0;
    std::vector<double> values;  // nonnegative, max 1 when not flat
    bool flat = false;           // zero gradient everywhere
    std::string id;
    int target = 1;

    double at(std::size_t r, std::size_t c) const { return values[r * w + c]; }
};

// Channel-gradient-weighted activation map at the output of `tap_stage`
// (0-based), ReLU'd, bilinearly upsampled to the input resolution and
// max-normalized.
template <typename T>
ActivationMap grad_cam(HstParams<T>& params, const HstConfig& cfg, const Tensor<T>& image,
                       int target_class, std::size_t tap_stage = 3) {
    if (tap_stage > 3) throw ConfigError("grad_cam: stage must be 0..3");
    if (target_class < 0 || std::size_t(target_class) >= cfg.num_classes) {
        throw ConfigError("grad_cam: target class out of range");
    }

    Tape<T> tape;
    ForwardResult<T> fw = hst_forward(&tape, image, params, cfg);
    Tensor<T> target = slice(&tape, fw.logits, 0, std::size_t(target_class), 1);
    tape.backward(target);

    const Tensor<T>& feat = fw.stage_out[tap_stage];
    const std::size_t p = cfg.grid(tap_stage);
    const std::size_t c = cfg.dims[tap_stage];

    ActivationMap out;
    out.h = out.w = cfg.image_size;
    out.target = target_class;
    if (!feat.has_grad()) {  // the head never touched these features
        out.flat = true;
        out.values.assign(out.h * out.w, 0.0);
        params.zero_grad();
        return out;
    }

    auto a = feat.values();
    auto g = feat.grad();
    std::vector<double> weights(c, 0.0);  // mean token gradient per channel
    for (std::size_t t = 0; t < p * p; ++t) {
        for (std::size_t ch = 0; ch < c; ++ch) weights[ch] += double(g[t * c + ch]);
    }
    for (auto& w : weights) w /= double(p * p);

    Image coarse{p, p, std::vector<double>(p * p, 0.0)};
    for (std::size_t t = 0; t < p * p; ++t) {
        double v = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) v += weights[ch] * double(a[t * c + ch]);
        coarse.values[t] = std::max(0.0, v);
    }
    params.zero_grad();

    Image up;
    if (p == out.h) {
        up = coarse;
    } else if (p == 1) {  // single token: constant relevance
        up = Image{out.h, out.w, std::vector<double>(out.h * out.w, coarse.values[0])};
    } else {
        up = resize_bilinear(coarse, out.h, out.w);
    }
    double peak = 0.0;
    for (double v : up.values) peak = std::max(peak, v);
    if (peak <= 0.0) {
        out.flat = true;
        out.values.assign(out.h * out.w, 0.0);
        return out;
    }
    out.values.resize(up.values.size());
    for (std::size_t i = 0; i < up.values.size(); ++i) out.values[i] = up.values[i] / peak;
    return out;
}

inline void write_map_csv(const std::string& path, const ActivationMap& map) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write map " + path);
    for (std::size_t r = 0; r < map.h; ++r) {
        for (std::size_t c = 0; c < map.w; ++c) {
            out << map.at(r, c) << (c + 1 == map.w ? '\n' : ',');
        }
    }
}

// 8-bit binary PGM for quick eyeballing
inline void write_map_pgm(const std::string& path, const ActivationMap& map) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write map " + path);
    out << "P5\n" << map.w << " " << map.h << "\n255\n";
    for (double v : map.values) {
        const int byte = int(std::llround(std::min(1.0, std::max(0.0, v)) * 255.0));
        out.put(char(byte));
    }
}

}  // namespace hst
