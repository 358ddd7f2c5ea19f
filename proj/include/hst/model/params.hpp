#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hst/core/rng.hpp"
#include "hst/core/tensor.hpp"
#include "hst/model/config.hpp"

namespace hst {

template <typename T>
struct LnWeights {
    Tensor<T> gamma, beta;  // [C]
};

template <typename T>
struct LwmsaWeights {
    Tensor<T> wq, wk, wv;    // [C, C], bias-free projections
    Tensor<T> wo, bo;        // output projection [C, C] + [C]
    Tensor<T> bias_table;    // [heads, (2M-1)^2] shared relative position bias
};

template <typename T>
struct MlpWeights {
    Tensor<T> w1, b1;  // [C, rC], [rC]
    Tensor<T> w2, b2;  // [rC, C], [C]
};

template <typename T>
struct BlockWeights {
    LnWeights<T> ln1;
    LwmsaWeights<T> attn;  // unshifted LWMSA
    LnWeights<T> ln2;
    MlpWeights<T> mlp1;
    LnWeights<T> ln3;
    LwmsaWeights<T> attn_shifted;
    LnWeights<T> ln4;
    MlpWeights<T> mlp2;
};

template <typename T>
struct HstParams {
    Tensor<T> embed_w, embed_b;                       // [patch^2, d1], [d1]
    std::vector<std::vector<BlockWeights<T>>> stages;  // [4][depth]
    std::vector<Tensor<T>> merges;                    // 3 x [4C, 2C], bias-free
    LnWeights<T> head_ln;
    Tensor<T> head_w, head_b;  // [d4, classes], [classes]

    HstParams() = default;

    explicit HstParams(const HstConfig& cfg) {
        cfg.validate();
        const bool rg = true;
        auto mk = [&](Shape shape) { return Tensor<T>(std::move(shape), rg); };
        embed_w = mk({cfg.patch * cfg.patch, cfg.dims[0]});
        embed_b = mk({cfg.dims[0]});
        stages.resize(4);
        for (std::size_t s = 0; s < 4; ++s) {
            const std::size_t c = cfg.dims[s];
            const std::size_t h = cfg.heads[s];
            const std::size_t m = cfg.window_at(s);
            const std::size_t table = (2 * m - 1) * (2 * m - 1);
            stages[s].resize(cfg.depths[s]);
            for (auto& blk : stages[s]) {
                for (auto* ln : {&blk.ln1, &blk.ln2, &blk.ln3, &blk.ln4}) {
                    ln->gamma = mk({c});
                    ln->beta = mk({c});
                }
                for (auto* at : {&blk.attn, &blk.attn_shifted}) {
                    at->wq = mk({c, c});
                    at->wk = mk({c, c});
                    at->wv = mk({c, c});
                    at->wo = mk({c, c});
                    at->bo = mk({c});
                    at->bias_table = mk({h, table});
                }
                for (auto* ml : {&blk.mlp1, &blk.mlp2}) {
                    ml->w1 = mk({c, cfg.mlp_ratio * c});
                    ml->b1 = mk({cfg.mlp_ratio * c});
                    ml->w2 = mk({cfg.mlp_ratio * c, c});
                    ml->b2 = mk({c});
                }
            }
        }
        merges.reserve(3);
        for (std::size_t s = 0; s < 3; ++s) {
            merges.push_back(mk({4 * cfg.dims[s], cfg.dims[s + 1]}));
        }
        head_ln.gamma = mk({cfg.dims[3]});
        head_ln.beta = mk({cfg.dims[3]});
        head_w = mk({cfg.dims[3], cfg.num_classes});
        head_b = mk({cfg.num_classes});
    }

    // Canonical traversal order; checkpoint layout and init draws follow it.
    template <typename F>
    void visit(F&& f) {
        f("embed.w", embed_w);
        f("embed.b", embed_b);
        for (std::size_t s = 0; s < stages.size(); ++s) {
            for (std::size_t b = 0; b < stages[s].size(); ++b) {
                const std::string base =
                    "stage" + std::to_string(s + 1) + ".block" + std::to_string(b) + ".";
                auto& blk = stages[s][b];
                auto ln = [&](const char* tag, LnWeights<T>& w) {
                    f(base + tag + ".gamma", w.gamma);
                    f(base + tag + ".beta", w.beta);
                };
                auto attn = [&](const char* tag, LwmsaWeights<T>& w) {
                    f(base + tag + ".wq", w.wq);
                    f(base + tag + ".wk", w.wk);
                    f(base + tag + ".wv", w.wv);
                    f(base + tag + ".wo", w.wo);
                    f(base + tag + ".bo", w.bo);
                    f(base + tag + ".bias_table", w.bias_table);
                };
                auto mlp = [&](const char* tag, MlpWeights<T>& w) {
                    f(base + tag + ".w1", w.w1);
                    f(base + tag + ".b1", w.b1);
                    f(base + tag + ".w2", w.w2);
                    f(base + tag + ".b2", w.b2);
                };
                ln("ln1", blk.ln1);
                attn("attn", blk.attn);
                ln("ln2", blk.ln2);
                mlp("mlp1", blk.mlp1);
                ln("ln3", blk.ln3);
                attn("attn_shifted", blk.attn_shifted);
                ln("ln4", blk.ln4);
                mlp("mlp2", blk.mlp2);
            }
            if (s < merges.size()) {
                f("merge" + std::to_string(s + 1) + ".w", merges[s]);
            }
        }
        f("head.ln.gamma", head_ln.gamma);
        f("head.ln.beta", head_ln.beta);
        f("head.w", head_w);
        f("head.b", head_b);
    }

    std::vector<Tensor<T>> all_tensors() {
        std::vector<Tensor<T>> out;
        visit([&](const std::string&, Tensor<T>& t) { out.push_back(t); });
        return out;
    }

    std::size_t count() {
        std::size_t n = 0;
        visit([&](const std::string&, Tensor<T>& t) { n += t.size(); });
        return n;
    }

    void zero_grad() {
        visit([](const std::string&, Tensor<T>& t) { t.zero_grad(); });
    }

    // Cold-start rule: truncated normal (sigma 0.02) for weights, zeros for
    // biases and bias tables, ones/zeros for layer norms.
    void init(std::uint64_t seed) {
        Rng rng(derive_seed(seed, "init"));
        visit([&](const std::string& name, Tensor<T>& t) {
            const std::string leaf = name.substr(name.rfind('.') + 1);
            if (leaf == "gamma") {
                for (auto& v : t.values()) v = T(1);
            } else if (!leaf.empty() && leaf[0] == 'b') {
                for (auto& v : t.values()) v = T(0);
            } else {
                for (auto& v : t.values()) v = T(rng.truncated_normal(0.0, 0.02));
            }
        });
    }
};

}  // namespace hst
