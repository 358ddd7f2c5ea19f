#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "hst/eval/folds.hpp"
#include "hst/eval/metrics.hpp"
#include "hst/model/checkpoint.hpp"
#include "hst/run/config.hpp"
#include "hst/run/dataset.hpp"
#include "hst/train/fit.hpp"

namespace hst {

struct FoldMetrics {
    double auc = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate = false;
};

template <typename T>
FoldMetrics evaluate_samples(const HstParams<T>& params, const HstConfig& cfg,
                             const std::vector<Sample<T>>& samples, double threshold,
                             RocResult* roc_out = nullptr) {
    if (samples.empty()) throw InputError("evaluate: empty sample set");
    std::vector<double> scores = score_samples(params, cfg, samples);
    std::vector<int> labels;
    for (const auto& s : samples) labels.push_back(s.label);
    RocResult roc = roc_auc(scores, labels);
    Prf1 p = prf1(scores, labels, threshold);
    if (roc_out != nullptr) *roc_out = roc;
    FoldMetrics m;
    m.auc = roc.auc;
    m.precision = p.precision;
    m.recall = p.recall;
    m.f1 = p.f1;
    m.degenerate = p.degenerate;
    return m;
}

inline void write_roc_csv(const std::string& path, const RocResult& roc) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write roc " + path);
    out << "threshold,fpr,tpr\n";
    char line[128];
    for (const auto& pt : roc.points) {
        std::snprintf(line, sizeof(line), "%.9g,%.9f,%.9f\n", pt.threshold, pt.fpr, pt.tpr);
        out << line;
    }
}

struct CvResult {
    std::vector<FoldMetrics> folds;
    Aggregate auc, precision, recall, f1;
};

namespace detail {

inline std::string fold_row(std::size_t fold, const FoldMetrics& m) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%.6f", fold, m.auc, m.precision,
                  m.recall, m.f1);
    return buf;
}

inline std::string pm(const Aggregate& a) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f±%.4f", a.mean, a.std);
    return buf;
}

}  // namespace detail

// Full protocol: rotated stratified folds, per-fold training with
// train-only minority oversampling, test-set metrics, fold checkpoints, and
// the aggregate mean+-std row. Rows stream to metrics.csv as folds finish so
// a failing fold preserves the completed ones.
template <typename T>
CvResult run_cv(const std::vector<ManifestRecord>& records, const RunConfig& cfg,
                SpectrogramSource& source, const std::string& out_dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

    const FoldPlan plan = make_cv_folds(records, cfg.eval.folds, cfg.eval.seed);
    std::ofstream metrics((fs::path(out_dir) / "metrics.csv").string());
    if (!metrics) throw IoError("cannot write metrics.csv in " + out_dir);
    metrics << "fold,auc,precision,recall,f1\n";
    metrics.flush();

    CvResult result;
    for (std::size_t f = 0; f < plan.k; ++f) {
        const FoldSplit& split = plan.folds[f];
        std::vector<Sample<T>> train = load_samples<T>(records, split.train, source);
        std::vector<Sample<T>> val = load_samples<T>(records, split.val, source);
        std::vector<Sample<T>> test = load_samples<T>(records, split.test, source);
        oversample_minority(train, records, source,
                            derive_seed(cfg.eval.seed, "fold-" + std::to_string(f)));

        HstParams<T> params(cfg.model);
        params.init(derive_seed(cfg.train.seed, "fold-init-" + std::to_string(f)));
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(cfg.train.seed, "fold-train-" + std::to_string(f));
        FitResult fitres = fit(params, cfg.model, train, val, tc);

        const std::string tag = "fold" + std::to_string(f);
        save_checkpoint(params, cfg.model, (fs::path(out_dir) / (tag + ".ckpt")).string());
        write_history_csv((fs::path(out_dir) / (tag + "_history.csv")).string(), fitres.history);

        RocResult roc;
        FoldMetrics m = evaluate_samples(params, cfg.model, test, cfg.eval.threshold, &roc);
        write_roc_csv((fs::path(out_dir) / (tag + "_roc.csv")).string(), roc);
        metrics << detail::fold_row(f, m) << "\n";
        metrics.flush();
        result.folds.push_back(m);
    }

    std::vector<double> auc, precision, recall, f1;
    for (const auto& m : result.folds) {
        auc.push_back(m.auc);
        precision.push_back(m.precision);
        recall.push_back(m.recall);
        f1.push_back(m.f1);
    }
    result.auc = aggregate_folds(auc);
    result.precision = aggregate_folds(precision);
    result.recall = aggregate_folds(recall);
    result.f1 = aggregate_folds(f1);
    metrics << "aggregate," << detail::pm(result.auc) << "," << detail::pm(result.precision)
            << "," << detail::pm(result.recall) << "," << detail::pm(result.f1) << "\n";
    return result;
}

}  // namespace hst
