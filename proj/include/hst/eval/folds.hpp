#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hst/core/rng.hpp"
#include "hst/eval/manifest.hpp"

namespace hst {

struct FoldSplit {
    std::vector<std::string> train;
    std::vector<std::string> test;
    std::vector<std::string> val;
};

struct FoldPlan {
    std::size_t k = 0;
    std::vector<FoldSplit> folds;
};

// Ten rotated stratified 70/20/10 resamplings. Per class the shuffled id
// list is rotated by round(f * n / k) per fold; since the 20% test window is
// wider than the 10% rotation step, every sample lands in a test set at
// least once across the k folds.
inline FoldPlan make_cv_folds(const std::vector<ManifestRecord>& manifest, std::size_t k,
                              std::uint64_t seed) {
    if (manifest.size() < 10) {
        throw InputError("make_cv_folds: need at least 10 samples, got " +
                         std::to_string(manifest.size()));
    }
    if (k < 2) throw ConfigError("make_cv_folds: k must be at least 2");

    std::vector<std::string> by_class[2];
    for (const auto& r : manifest) by_class[r.label].push_back(r.id);
    if (by_class[0].empty() || by_class[1].empty()) {
        throw InputError("make_cv_folds: both classes must be present to stratify");
    }
    for (int c = 0; c < 2; ++c) {
        // manifest order independence: shuffle a sorted copy
        std::sort(by_class[c].begin(), by_class[c].end());
        Rng rng(derive_seed(seed, "folds-class-" + std::to_string(c)));
        rng.shuffle(by_class[c]);
    }

    FoldPlan plan;
    plan.k = k;
    for (std::size_t f = 0; f < k; ++f) {
        FoldSplit split;
        for (int c = 0; c < 2; ++c) {
            const auto& ids = by_class[c];
            const std::size_t n = ids.size();
            const std::size_t n_test = std::size_t(std::llround(0.2 * double(n)));
            const std::size_t n_val = std::size_t(std::llround(0.1 * double(n)));
            if (n_test + n_val >= n) {
                throw InputError("make_cv_folds: class " + std::to_string(c) +
                                 " too small to split 70/20/10");
            }
            const std::size_t offset = std::size_t(std::llround(double(f) * double(n) / double(k))) % n;
            auto at = [&](std::size_t i) { return ids[(offset + i) % n]; };
            std::size_t i = 0;
            for (std::size_t t = 0; t < n_test; ++t) split.test.push_back(at(i++));
            for (std::size_t v = 0; v < n_val; ++v) split.val.push_back(at(i++));
            for (; i < n; ++i) split.train.push_back(at(i));
        }
        plan.folds.push_back(std::move(split));
    }
    return plan;
}

}  // namespace hst
