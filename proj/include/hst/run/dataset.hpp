#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hst/dsp/augment.hpp"
#include "hst/dsp/pipeline.hpp"
#include "hst/dsp/wav.hpp"
#include "hst/eval/manifest.hpp"
#include "hst/train/fit.hpp"

namespace hst {

inline AudioClip load_admissible_clip(const std::string& path, const DspConfig& dsp) {
    AudioClip clip = load_audio(path, dsp.target_fs);
    clip = trim_silence(clip, dsp.trim_db);
    require_admissible(clip);
    return clip;
}

inline Image spectrogram_for_clip(const AudioClip& clip, const DspConfig& dsp) {
    return compute_spectrogram(clip, dsp);
}

// Spectrogram access with two layers: an in-memory map, and (when `dir` is
// nonempty) the on-disk cache produced by prep. Misses fall back to the DSP
// chain and populate both layers.
class SpectrogramSource {
  public:
    SpectrogramSource(DspConfig dsp, std::string dir = "") : dsp_(std::move(dsp)), dir_(std::move(dir)) {}

    const Image& get(const ManifestRecord& rec) {
        auto it = memo_.find(rec.id);
        if (it != memo_.end()) return it->second;
        namespace fs = std::filesystem;
        if (!dir_.empty()) {
            const std::string cached = (fs::path(dir_) / (rec.id + ".spec")).string();
            if (fs::exists(cached)) {
                return memo_.emplace(rec.id, load_spectrogram_cache(cached)).first->second;
            }
        }
        Image img = spectrogram_for_clip(load_admissible_clip(rec.path, dsp_), dsp_);
        if (!dir_.empty()) {
            std::error_code ec;
            fs::create_directories(dir_, ec);
            save_spectrogram_cache((fs::path(dir_) / (rec.id + ".spec")).string(), img);
        }
        return memo_.emplace(rec.id, std::move(img)).first->second;
    }

    const DspConfig& dsp() const { return dsp_; }

  private:
    DspConfig dsp_;
    std::string dir_;
    std::map<std::string, Image> memo_;
};

template <typename T>
Tensor<T> image_tensor(const Image& img) {
    Tensor<T> t({img.h, img.w});
    auto v = t.values();
    for (std::size_t i = 0; i < img.values.size(); ++i) v[i] = T(img.values[i]);
    return t;
}

template <typename T>
std::vector<Sample<T>> load_samples(const std::vector<ManifestRecord>& records,
                                    const std::vector<std::string>& ids,
                                    SpectrogramSource& source) {
    std::map<std::string, const ManifestRecord*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;
    std::vector<Sample<T>> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw InputError("unknown sample id " + id);
        Sample<T> s;
        s.id = id;
        s.label = it->second->label;
        s.image = image_tensor<T>(source.get(*it->second));
        out.push_back(std::move(s));
    }
    return out;
}

// Class balance for a training split: augment randomly drawn minority clips
// until the classes have equal counts. Never applied to validation or test
// splits.
template <typename T>
void oversample_minority(std::vector<Sample<T>>& train,
                         const std::vector<ManifestRecord>& records,
                         SpectrogramSource& source, std::uint64_t seed) {
    std::size_t counts[2] = {0, 0};
    for (const auto& s : train) ++counts[s.label];
    if (counts[0] == counts[1]) return;
    const int minority = counts[0] < counts[1] ? 0 : 1;
    const std::size_t deficit = std::max(counts[0], counts[1]) - std::min(counts[0], counts[1]);

    std::map<std::string, const ManifestRecord*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;
    std::vector<const ManifestRecord*> pool;
    for (const auto& s : train) {
        if (s.label == minority) pool.push_back(by_id.at(s.id));
    }
    if (pool.empty()) {
        throw InputError("oversample: training split has no minority-class samples");
    }

    Rng rng(derive_seed(seed, "oversample"));
    const AugmentKind kinds[3] = {AugmentKind::amplify, AugmentKind::pitch_speed,
                                  AugmentKind::add_noise};
    for (std::size_t k = 0; k < deficit; ++k) {
        const ManifestRecord* rec = pool[rng.below(pool.size())];
        AudioClip clip = load_admissible_clip(rec->path, source.dsp());
        AudioClip warped = augment(clip, rng, kinds[rng.below(3)]);
        Sample<T> s;
        s.id = rec->id + "#aug" + std::to_string(k);
        s.label = minority;
        s.image = image_tensor<T>(spectrogram_for_clip(warped, source.dsp()));
        train.push_back(std::move(s));
    }
}

}  // namespace hst
