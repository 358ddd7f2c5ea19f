#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "hst/core/ops.hpp"
#include "hst/model/config.hpp"
#include "hst/model/params.hpp"

namespace hst {

// ---------------------------------------------------------------------------
// Token-grid index plumbing. Tokens live in row-major [P*P, C] tensors; the
// helpers below build gather index vectors over the P x P grid.
// ---------------------------------------------------------------------------

// [(P/M)^2 windows x M^2 tokens] traversal of the grid.
inline std::vector<std::size_t> window_partition_index(std::size_t p, std::size_t m) {
    if (m == 0 || p % m != 0) {
        throw ShapeError("window_partition: grid " + std::to_string(p) +
                         " not divisible by window " + std::to_string(m));
    }
    std::vector<std::size_t> idx(p * p);
    std::size_t n = 0;
    const std::size_t wps = p / m;
    for (std::size_t wr = 0; wr < wps; ++wr) {
        for (std::size_t wc = 0; wc < wps; ++wc) {
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    idx[n++] = (wr * m + i) * p + (wc * m + j);
                }
            }
        }
    }
    return idx;
}

inline std::vector<std::size_t> invert_permutation(const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> inv(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) inv[idx[k]] = k;
    return inv;
}

// Torus roll: token that was at (r, c) lands at (r+sr, c+sc) mod P.
inline std::vector<std::size_t> cyclic_shift_index(std::size_t p, long long sr, long long sc) {
    auto md = [](long long a, long long m) { return std::size_t(((a % m) + m) % m); };
    std::vector<std::size_t> idx(p * p);
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = 0; c < p; ++c) {
            idx[r * p + c] = md((long long)r - sr, (long long)p) * p +
                             md((long long)c - sc, (long long)p);
        }
    }
    return idx;
}

// Map from token-pair (i, j) in an M x M window to the shared bias-table
// entry for their relative offset.
inline std::vector<std::size_t> rel_pos_index(std::size_t m) {
    const std::size_t n = m * m;
    std::vector<std::size_t> idx(n * n);
    for (std::size_t a = 0; a < n; ++a) {
        const long long r1 = (long long)(a / m), c1 = (long long)(a % m);
        for (std::size_t b = 0; b < n; ++b) {
            const long long r2 = (long long)(b / m), c2 = (long long)(b % m);
            const std::size_t dr = std::size_t(r1 - r2 + (long long)m - 1);
            const std::size_t dc = std::size_t(c1 - c2 + (long long)m - 1);
            idx[a * n + b] = dr * (2 * m - 1) + dc;
        }
    }
    return idx;
}

// Additive mask for shifted windows: after rolling the grid by (-s, -s) the
// wrapped seam sits in the last window row and column; token pairs drawn from
// different pre-shift regions must not attend to each other. Region segments
// along each axis of the rolled grid: [0, P-M), [P-M, P-s), [P-s, P).
template <typename T>
Tensor<T> shift_attention_mask(std::size_t p, std::size_t m, std::size_t s) {
    if (m == 0 || p % m != 0) {
        throw ShapeError("shift_attention_mask: grid not divisible by window");
    }
    const std::size_t wps = p / m;
    const std::size_t n = m * m;
    Tensor<T> mask({wps * wps, n, n});
    if (s == 0) return mask;
    auto seg = [&](std::size_t x) {
        return x < p - m ? std::size_t(0) : (x < p - s ? std::size_t(1) : std::size_t(2));
    };
    auto mv = mask.values();
    std::vector<std::size_t> region(n);
    for (std::size_t wr = 0; wr < wps; ++wr) {
        for (std::size_t wc = 0; wc < wps; ++wc) {
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    region[i * m + j] = seg(wr * m + i) * 3 + seg(wc * m + j);
                }
            }
            T* base = mv.data() + (wr * wps + wc) * n * n;
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t b = 0; b < n; ++b) {
                    base[a * n + b] = region[a] == region[b] ? T(0) : T(-1e9);
                }
            }
        }
    }
    return mask;
}

// Per-stage geometry bundle, built once per forward pass.
struct StageGeometry {
    std::size_t p = 0, m = 0, shift = 0, heads = 0;
    std::vector<std::size_t> win_idx, win_rev;
    std::vector<std::size_t> shift_fwd, shift_back;  // roll by (-s,-s) and back
    std::vector<std::size_t> rel_idx;

    StageGeometry(const HstConfig& cfg, std::size_t stage) {
        p = cfg.grid(stage);
        m = cfg.window_at(stage);
        shift = cfg.shift_at(stage);
        heads = cfg.heads[stage];
        win_idx = window_partition_index(p, m);
        win_rev = invert_permutation(win_idx);
        if (shift > 0) {
            shift_fwd = cyclic_shift_index(p, -(long long)shift, -(long long)shift);
            shift_back = cyclic_shift_index(p, (long long)shift, (long long)shift);
        }
        rel_idx = rel_pos_index(m);
    }
};

// ---------------------------------------------------------------------------
// Model pieces
// ---------------------------------------------------------------------------

// Flattens each patch x patch pixel block and projects it to the first embed
// dim. image: [S, S] (or flat S*S) normalized spectrogram.
template <typename T>
Tensor<T> patch_embed(Tape<T>* tape, const Tensor<T>& image, const HstParams<T>& params,
                      const HstConfig& cfg) {
    const std::size_t s = cfg.image_size, h = cfg.patch;
    if (image.size() != s * s) {
        throw ShapeError("patch_embed: expected " + std::to_string(s) + "x" + std::to_string(s) +
                         " input, got " + shape_str(image.shape()));
    }
    const std::size_t grid = cfg.grid0();
    std::vector<std::size_t> idx;
    idx.reserve(s * s);
    for (std::size_t pr = 0; pr < grid; ++pr) {
        for (std::size_t pc = 0; pc < grid; ++pc) {
            for (std::size_t i = 0; i < h; ++i) {
                for (std::size_t j = 0; j < h; ++j) {
                    idx.push_back((pr * h + i) * s + (pc * h + j));
                }
            }
        }
    }
    Tensor<T> flat = reshape(tape, image, {s * s});
    Tensor<T> gathered = gather_rows(tape, flat, idx);
    Tensor<T> patches = reshape(tape, gathered, {grid * grid, h * h});
    return linear(tape, patches, params.embed_w, params.embed_b);
}

// Window attention: softmax(Q K^T / sqrt(d_h) + B [+ mask]) V per head,
// with Q = X Lq, K = X Lk, V = X Lv, heads concatenated, then output-projected.
template <typename T>
Tensor<T> lwmsa(Tape<T>* tape, const Tensor<T>& xw, const LwmsaWeights<T>& w, std::size_t heads,
                const std::vector<std::size_t>& rel_idx, const Tensor<T>* mask) {
    if (xw.rank() != 3) throw ShapeError("lwmsa: windows must be [W, N, C]");
    const std::size_t win = xw.shape()[0];
    const std::size_t n = xw.shape()[1];
    const std::size_t c = xw.shape()[2];
    if (heads == 0 || c % heads != 0) {
        throw ConfigError("lwmsa: C=" + std::to_string(c) + " not divisible by heads=" +
                          std::to_string(heads));
    }
    const std::size_t dh = c / heads;

    auto split_heads = [&](const Tensor<T>& t) {
        Tensor<T> t4 = reshape(tape, t, {win, n, heads, dh});
        Tensor<T> th = transpose(tape, t4, 1, 2);  // [W, H, N, dh]
        return reshape(tape, th, {win * heads, n, dh});
    };
    Tensor<T> q = split_heads(matmul(tape, xw, w.wq));
    Tensor<T> k = split_heads(matmul(tape, xw, w.wk));
    Tensor<T> v = split_heads(matmul(tape, xw, w.wv));

    Tensor<T> kt = transpose(tape, k, 1, 2);                       // [WH, dh, N]
    Tensor<T> scores = matmul(tape, q, kt);                        // [WH, N, N]
    scores = scale(tape, scores, T(1) / T(std::sqrt(double(dh))));
    scores = reshape(tape, scores, {win, heads, n, n});
    Tensor<T> bias = rel_pos_bias(tape, w.bias_table, rel_idx, n);  // [H, N, N]
    scores = add_broadcast(tape, scores, bias);
    if (mask != nullptr) scores = add_window_mask(tape, scores, *mask);
    Tensor<T> probs = softmax_lastdim(tape, scores);

    Tensor<T> ctx = matmul(tape, reshape(tape, probs, {win * heads, n, n}), v);  // [WH, N, dh]
    Tensor<T> ctx4 = reshape(tape, ctx, {win, heads, n, dh});
    Tensor<T> merged = reshape(tape, transpose(tape, ctx4, 1, 2), {win * n, c});
    Tensor<T> out = linear(tape, merged, w.wo, w.bo);
    return reshape(tape, out, {win, n, c});
}

template <typename T>
Tensor<T> mlp_forward(Tape<T>* tape, const Tensor<T>& x, const MlpWeights<T>& w) {
    Tensor<T> h = gelu(tape, linear(tape, x, w.w1, w.b1));
    return linear(tape, h, w.w2, w.b2);
}

// One dual unit:
//   zhat = LWMSA(LN(y)) + y          z = MLP(LN(zhat)) + zhat
//   yhat = LWMSA_shifted(LN(z)) + z  y' = MLP(LN(yhat)) + yhat
template <typename T>
Tensor<T> block_forward(Tape<T>* tape, const Tensor<T>& y, const BlockWeights<T>& bw,
                        const StageGeometry& geo, const Tensor<T>* shift_mask_t, double ln_eps) {
    const std::size_t tokens = geo.p * geo.p;
    const std::size_t n = geo.m * geo.m;
    const std::size_t c = y.shape().back();
    const std::size_t wins = tokens / n;

    auto windowed_attn = [&](const Tensor<T>& in, const LwmsaWeights<T>& w, bool shifted) {
        Tensor<T> grid = in;
        if (shifted && geo.shift > 0) grid = gather_rows(tape, grid, geo.shift_fwd);
        Tensor<T> parts = gather_rows(tape, grid, geo.win_idx);
        Tensor<T> windows = reshape(tape, parts, {wins, n, c});
        const Tensor<T>* mask = shifted && geo.shift > 0 ? shift_mask_t : nullptr;
        Tensor<T> attn = lwmsa(tape, windows, w, geo.heads, geo.rel_idx, mask);
        Tensor<T> restored = gather_rows(tape, reshape(tape, attn, {tokens, c}), geo.win_rev);
        if (shifted && geo.shift > 0) restored = gather_rows(tape, restored, geo.shift_back);
        return restored;
    };

    Tensor<T> zhat = add(tape, windowed_attn(layer_norm(tape, y, bw.ln1.gamma, bw.ln1.beta,
                                                        T(ln_eps)),
                                             bw.attn, false),
                         y);
    Tensor<T> z = add(tape, mlp_forward(tape, layer_norm(tape, zhat, bw.ln2.gamma, bw.ln2.beta,
                                                         T(ln_eps)),
                                        bw.mlp1),
                      zhat);
    Tensor<T> yhat = add(tape, windowed_attn(layer_norm(tape, z, bw.ln3.gamma, bw.ln3.beta,
                                                        T(ln_eps)),
                                             bw.attn_shifted, true),
                         z);
    return add(tape, mlp_forward(tape, layer_norm(tape, yhat, bw.ln4.gamma, bw.ln4.beta,
                                                  T(ln_eps)),
                                 bw.mlp2),
               yhat);
}

// Concatenates each 2x2 token group (4C channels) and projects to 2C.
template <typename T>
Tensor<T> patch_merge(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& proj, std::size_t p) {
    if (p % 2 != 0) throw ShapeError("patch_merge: grid side must be even");
    const std::size_t c = x.shape().back();
    std::vector<std::size_t> idx;
    idx.reserve(p * p);
    for (std::size_t mr = 0; mr < p / 2; ++mr) {
        for (std::size_t mc = 0; mc < p / 2; ++mc) {
            idx.push_back((2 * mr) * p + 2 * mc);
            idx.push_back((2 * mr) * p + 2 * mc + 1);
            idx.push_back((2 * mr + 1) * p + 2 * mc);
            idx.push_back((2 * mr + 1) * p + 2 * mc + 1);
        }
    }
    Tensor<T> grouped = reshape(tape, gather_rows(tape, x, idx), {p * p / 4, 4 * c});
    return matmul(tape, grouped, proj);
}

// LN, mean over tokens, affine map to the class logits.
template <typename T>
Tensor<T> head_forward(Tape<T>* tape, const Tensor<T>& x, const HstParams<T>& params,
                       double ln_eps) {
    Tensor<T> normed = layer_norm(tape, x, params.head_ln.gamma, params.head_ln.beta, T(ln_eps));
    Tensor<T> pooled = mean_rows(tape, normed);
    Tensor<T> pooled_row = reshape(tape, pooled, {std::size_t(1), pooled.size()});
    Tensor<T> logits = linear(tape, pooled_row, params.head_w, params.head_b);
    return reshape(tape, logits, {params.head_b.size()});
}

template <typename T>
struct ForwardResult {
    Tensor<T> logits;                      // [num_classes]
    std::array<Tensor<T>, 4> stage_out;    // token maps after each stage's blocks
};

template <typename T>
ForwardResult<T> hst_forward(Tape<T>* tape, const Tensor<T>& image, const HstParams<T>& params,
                             const HstConfig& cfg) {
    ForwardResult<T> result;
    Tensor<T> x = patch_embed(tape, image, params, cfg);
    for (std::size_t s = 0; s < 4; ++s) {
        const StageGeometry geo(cfg, s);
        Tensor<T> mask;
        const bool use_mask = geo.shift > 0 && cfg.shift_mask;
        if (use_mask) mask = shift_attention_mask<T>(geo.p, geo.m, geo.shift);
        for (const auto& blk : params.stages[s]) {
            x = block_forward(tape, x, blk, geo, use_mask ? &mask : nullptr, cfg.ln_eps);
        }
        result.stage_out[s] = x;
        if (s < 3) x = patch_merge(tape, x, params.merges[s], geo.p);
    }
    result.logits = head_forward(tape, x, params, cfg.ln_eps);
    return result;
}

}  // namespace hst
