#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hst/core/error.hpp"

namespace hst {

struct Image {
    std::size_t h = 0, w = 0;
    std::vector<double> values;  // row-major

    double at(std::size_t r, std::size_t c) const { return values[r * w + c]; }
};

// Corner-aligned bilinear resampling; an identity when sizes already match.
inline Image resize_bilinear(const Image& in, std::size_t out_h, std::size_t out_w) {
    if (in.h < 2 || in.w < 2) throw ContractError("resize: input extents must be >= 2");
    if (out_h < 2 || out_w < 2) throw ContractError("resize: output extents must be >= 2");
    Image out;
    out.h = out_h;
    out.w = out_w;
    out.values.resize(out_h * out_w);
    const double sr = double(in.h - 1) / double(out_h - 1);
    const double sc = double(in.w - 1) / double(out_w - 1);
    for (std::size_t r = 0; r < out_h; ++r) {
        const double fr = double(r) * sr;
        const std::size_t r0 = std::min(in.h - 2, std::size_t(fr));
        const double ar = fr - double(r0);
        for (std::size_t c = 0; c < out_w; ++c) {
            const double fc = double(c) * sc;
            const std::size_t c0 = std::min(in.w - 2, std::size_t(fc));
            const double ac = fc - double(c0);
            const double v00 = in.at(r0, c0), v01 = in.at(r0, c0 + 1);
            const double v10 = in.at(r0 + 1, c0), v11 = in.at(r0 + 1, c0 + 1);
            out.values[r * out_w + c] = (1.0 - ar) * ((1.0 - ac) * v00 + ac * v01) +
                                        ar * ((1.0 - ac) * v10 + ac * v11);
        }
    }
    return out;
}

// (img - mean) / std * 0.5 + 0.5, population std over all pixels.
inline Image normalize_half(const Image& in) {
    if (in.values.empty()) throw ContractError("normalize: empty image");
    double mu = 0.0;
    for (double v : in.values) mu += v;
    mu /= double(in.values.size());
    double var = 0.0;
    for (double v : in.values) var += (v - mu) * (v - mu);
    var /= double(in.values.size());
    if (var <= 0.0) throw InputError("normalize: image has zero variance");
    const double inv_sd = 1.0 / std::sqrt(var);
    Image out;
    out.h = in.h;
    out.w = in.w;
    out.values.resize(in.values.size());
    for (std::size_t i = 0; i < in.values.size(); ++i) {
        out.values[i] = (in.values[i] - mu) * inv_sd * 0.5 + 0.5;
    }
    return out;
}

}  // namespace hst
