#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hst/dsp/pipeline.hpp"
#include "hst/model/checkpoint.hpp"
#include "hst/train/optim.hpp"

namespace hst {

struct EvalRunConfig {
    std::size_t folds = 10;
    std::uint64_t seed = 17;
    double threshold = 0.5;
    std::size_t gradcam_stage = 4;  // 1-based

    void validate() const {
        if (folds < 2) throw ConfigError("eval.folds must be >= 2");
        if (threshold <= 0.0 || threshold >= 1.0) {
            throw ConfigError("eval.threshold must lie in (0, 1)");
        }
        if (gradcam_stage < 1 || gradcam_stage > 4) {
            throw ConfigError("eval.gradcam_stage must be 1..4");
        }
    }
};

struct RunConfig {
    DspConfig dsp;
    HstConfig model = HstConfig::named("base");
    TrainConfig train;
    EvalRunConfig eval;

    void validate() const {
        dsp.validate();
        model.validate();
        train.validate();
        eval.validate();
        if (dsp.out_size != model.image_size) {
            throw ConfigError("dsp.out_size (" + std::to_string(dsp.out_size) +
                              ") must equal model.image_size (" +
                              std::to_string(model.image_size) + ")");
        }
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError("unknown config key " + where + "." + it.key());
        }
    }
}

template <typename V>
void maybe(const nlohmann::json& j, const char* key, V& dst) {
    if (j.contains(key)) {
        try {
            dst = j.at(key).get<V>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config key ") + key + ": " + e.what());
        }
    }
}

inline void apply_dsp(const nlohmann::json& j, DspConfig& cfg) {
    reject_unknown_keys(j,
                        {"n_fft", "overlap", "n_mels", "f_min", "f_max", "out_size", "mel_mode",
                         "log_floor", "trim_db", "target_fs"},
                        "dsp");
    maybe(j, "n_fft", cfg.n_fft);
    maybe(j, "overlap", cfg.overlap);
    maybe(j, "n_mels", cfg.n_mels);
    maybe(j, "f_min", cfg.f_min);
    maybe(j, "f_max", cfg.f_max);
    maybe(j, "out_size", cfg.out_size);
    if (j.contains("mel_mode")) cfg.mel_mode = mel_mode_from(j.at("mel_mode").get<std::string>());
    maybe(j, "log_floor", cfg.log_floor);
    maybe(j, "trim_db", cfg.trim_db);
    maybe(j, "target_fs", cfg.target_fs);
}

inline void apply_model(const nlohmann::json& j, HstConfig& cfg) {
    reject_unknown_keys(j,
                        {"variant", "image_size", "patch", "window", "depths", "dims", "heads",
                         "mlp_ratio", "num_classes", "shift_mask", "ln_eps"},
                        "model");
    // a named variant resets every geometry field, so apply it first
    if (j.contains("variant")) cfg = HstConfig::named(j.at("variant").get<std::string>());
    maybe(j, "image_size", cfg.image_size);
    maybe(j, "patch", cfg.patch);
    maybe(j, "window", cfg.window);
    maybe(j, "depths", cfg.depths);
    maybe(j, "dims", cfg.dims);
    maybe(j, "heads", cfg.heads);
    maybe(j, "mlp_ratio", cfg.mlp_ratio);
    maybe(j, "num_classes", cfg.num_classes);
    maybe(j, "shift_mask", cfg.shift_mask);
    maybe(j, "ln_eps", cfg.ln_eps);
}

inline void apply_train(const nlohmann::json& j, TrainConfig& cfg) {
    reject_unknown_keys(j,
                        {"lr", "weight_decay", "batch_size", "max_epochs", "clip_norm", "beta1",
                         "beta2", "eps", "patience", "seed"},
                        "train");
    maybe(j, "lr", cfg.lr);
    maybe(j, "weight_decay", cfg.weight_decay);
    maybe(j, "batch_size", cfg.batch_size);
    maybe(j, "max_epochs", cfg.max_epochs);
    maybe(j, "clip_norm", cfg.clip_norm);
    maybe(j, "beta1", cfg.beta1);
    maybe(j, "beta2", cfg.beta2);
    maybe(j, "eps", cfg.eps);
    maybe(j, "patience", cfg.patience);
    maybe(j, "seed", cfg.seed);
}

inline void apply_eval(const nlohmann::json& j, EvalRunConfig& cfg) {
    reject_unknown_keys(j, {"folds", "seed", "threshold", "gradcam_stage"}, "eval");
    maybe(j, "folds", cfg.folds);
    maybe(j, "seed", cfg.seed);
    maybe(j, "threshold", cfg.threshold);
    maybe(j, "gradcam_stage", cfg.gradcam_stage);
}

}  // namespace detail

inline void apply_config_json(const nlohmann::json& j, RunConfig& cfg) {
    detail::reject_unknown_keys(j, {"dsp", "model", "train", "eval"}, "<root>");
    if (j.contains("dsp")) detail::apply_dsp(j.at("dsp"), cfg.dsp);
    if (j.contains("model")) detail::apply_model(j.at("model"), cfg.model);
    if (j.contains("train")) detail::apply_train(j.at("train"), cfg.train);
    if (j.contains("eval")) detail::apply_eval(j.at("eval"), cfg.eval);
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": bad JSON: " + e.what());
    }
    RunConfig cfg;
    apply_config_json(j, cfg);
    return cfg;
}

// "--set section.key=value" override; the value is parsed as JSON, falling
// back to a bare string.
inline void apply_override(const std::string& assignment, RunConfig& cfg) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override must look like section.key=value: " + assignment);
    }
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
        throw ConfigError("override key must be section.key: " + assignment);
    }
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    nlohmann::json j;
    j[key.substr(0, dot)][key.substr(dot + 1)] = value;
    apply_config_json(j, cfg);
}

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json dsp{{"n_fft", cfg.dsp.n_fft},
                       {"overlap", cfg.dsp.overlap},
                       {"n_mels", cfg.dsp.n_mels},
                       {"f_min", cfg.dsp.f_min},
                       {"f_max", cfg.dsp.f_max},
                       {"out_size", cfg.dsp.out_size},
                       {"mel_mode", cfg.dsp.mel_mode == MelMode::triangular ? "triangular"
                                                                           : "nearest_bin"},
                       {"log_floor", cfg.dsp.log_floor},
                       {"trim_db", cfg.dsp.trim_db},
                       {"target_fs", cfg.dsp.target_fs}};
    nlohmann::json train{{"lr", cfg.train.lr},
                         {"weight_decay", cfg.train.weight_decay},
                         {"batch_size", cfg.train.batch_size},
                         {"max_epochs", cfg.train.max_epochs},
                         {"clip_norm", cfg.train.clip_norm},
                         {"beta1", cfg.train.beta1},
                         {"beta2", cfg.train.beta2},
                         {"eps", cfg.train.eps},
                         {"patience", cfg.train.patience},
                         {"seed", cfg.train.seed}};
    nlohmann::json eval{{"folds", cfg.eval.folds},
                        {"seed", cfg.eval.seed},
                        {"threshold", cfg.eval.threshold},
                        {"gradcam_stage", cfg.eval.gradcam_stage}};
    return nlohmann::json{
        {"dsp", dsp}, {"model", hst_config_to_json(cfg.model)}, {"train", train}, {"eval", eval}};
}

inline void echo_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config echo " + path);
    out << run_config_to_json(cfg).dump(2) << "\n";
}

}  // namespace hst
