#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "hst/model/hst.hpp"
#include "hst/train/fit.hpp"

namespace hst {

struct StageEmbedding {
    std::string id;
    std::size_t stage = 4;  // 1-based
    std::vector<double> vec;
};

// Mean-pooled token responses at the end of the requested stage (1-based),
// one vector per sample.
template <typename T>
std::vector<StageEmbedding> export_stage_embeddings(const HstParams<T>& params,
                                                    const HstConfig& cfg,
                                                    const std::vector<Sample<T>>& samples,
                                                    std::size_t stage) {
    if (stage < 1 || stage > 4) throw ConfigError("embeddings: stage must be 1..4");
    const std::size_t dim = cfg.dims[stage - 1];
    std::vector<StageEmbedding> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        ForwardResult<T> fw = hst_forward<T>(nullptr, s.image, params, cfg);
        const Tensor<T>& feat = fw.stage_out[stage - 1];
        const std::size_t tokens = feat.shape()[0];
        StageEmbedding e;
        e.id = s.id;
        e.stage = stage;
        e.vec.assign(dim, 0.0);
        auto v = feat.values();
        for (std::size_t t = 0; t < tokens; ++t) {
            for (std::size_t c = 0; c < dim; ++c) e.vec[c] += double(v[t * dim + c]);
        }
        for (auto& x : e.vec) x /= double(tokens);
        out.push_back(std::move(e));
    }
    return out;
}

inline void write_embeddings_csv(const std::string& path,
                                 const std::vector<StageEmbedding>& embeddings) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write embeddings " + path);
    if (embeddings.empty()) return;
    out << "id,stage";
    for (std::size_t j = 0; j < embeddings[0].vec.size(); ++j) out << ",dim" << j;
    out << "\n";
    for (const auto& e : embeddings) {
        out << e.id << "," << e.stage;
        for (double v : e.vec) out << "," << v;
        out << "\n";
    }
}

}  // namespace hst
