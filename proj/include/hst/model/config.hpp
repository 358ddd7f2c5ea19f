#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "hst/core/error.hpp"

namespace hst {

// Four-stage hierarchical transformer geometry. One "block" is the dual
// attention unit: plain LWMSA + MLP followed by shifted LWMSA + MLP, each
// with its own layer norms and residuals.
struct HstConfig {
    std::string variant = "base";
    std::size_t image_size = 224;
    std::size_t patch = 4;
    std::size_t window = 7;  // M
    std::array<std::size_t, 4> depths{1, 1, 9, 1};
    std::array<std::size_t, 4> dims{96, 192, 384, 768};
    std::array<std::size_t, 4> heads{3, 6, 12, 24};
    std::size_t mlp_ratio = 4;
    std::size_t num_classes = 2;
    bool shift_mask = true;  // off reproduces unmasked wrap-around attention
    double ln_eps = 1e-5;

    std::size_t grid0() const { return image_size / patch; }

    // Token grid side at stage s (0-based): halves after each merge.
    std::size_t grid(std::size_t stage) const { return grid0() >> stage; }

    // Effective window at a stage never exceeds the grid itself.
    std::size_t window_at(std::size_t stage) const {
        const std::size_t g = grid(stage);
        return window < g ? window : g;
    }

    // Swin rule: no shift when one window already covers the whole grid.
    std::size_t shift_at(std::size_t stage) const {
        const std::size_t m = window_at(stage);
        return m < grid(stage) ? m / 2 : 0;
    }

    void validate() const {
        if (patch < 1 || image_size % patch != 0) {
            throw ConfigError("model: image_size must be a multiple of patch");
        }
        if (grid0() % 8 != 0) {
            throw ConfigError("model: patch grid " + std::to_string(grid0()) +
                              " must be divisible by 8 to survive three merges");
        }
        if (window < 1) throw ConfigError("model: window must be >= 1");
        if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
        if (mlp_ratio < 1) throw ConfigError("model: mlp_ratio must be >= 1");
        for (std::size_t s = 0; s < 4; ++s) {
            if (depths[s] < 1) throw ConfigError("model: every stage needs >= 1 block");
            if (heads[s] < 1 || dims[s] % heads[s] != 0) {
                throw ConfigError("model: dims[" + std::to_string(s) +
                                  "] must divide evenly into heads");
            }
            if (s > 0 && dims[s] != 2 * dims[s - 1]) {
                throw ConfigError("model: embed dim must double at each merge");
            }
            if (grid(s) % window_at(s) != 0) {
                throw ConfigError("model: stage " + std::to_string(s + 1) + " grid " +
                                  std::to_string(grid(s)) + " not divisible by window " +
                                  std::to_string(window_at(s)));
            }
        }
        if (ln_eps <= 0.0) throw ConfigError("model: ln_eps must be > 0");
    }

    static HstConfig named(const std::string& name) {
        HstConfig cfg;
        cfg.variant = name;
        if (name == "base") {
            // defaults above
        } else if (name == "small") {
            cfg.depths = {1, 1, 3, 1};
        } else if (name == "large") {
            cfg.depths = {1, 1, 9, 1};
            cfg.dims = {128, 256, 512, 1024};
            cfg.heads = {4, 8, 16, 32};
        } else if (name == "micro") {
            // test-scale geometry: 16x16 input, 8 -> 4 -> 2 -> 1 token ladder
            cfg.image_size = 16;
            cfg.patch = 2;
            cfg.window = 2;
            cfg.depths = {1, 1, 1, 1};
            cfg.dims = {8, 16, 32, 64};
            cfg.heads = {2, 2, 2, 2};
        } else {
            throw ConfigError("unknown model variant '" + name +
                              "' (expected small, base, large, micro)");
        }
        cfg.validate();
        return cfg;
    }
};

}  // namespace hst
