#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "hst/eval/metrics.hpp"
#include "hst/model/hst.hpp"
#include "hst/train/loss.hpp"
#include "hst/train/optim.hpp"

namespace hst {

template <typename T>
struct Sample {
    std::string id;
    int label = 0;
    Tensor<T> image;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_f1 = 0.0;
    double lr = 0.0;
    double grad_norm = 0.0;  // mean pre-clip norm over the epoch
};

struct FitResult {
    std::vector<EpochStats> history;
    double best_val_f1 = 0.0;
    std::size_t best_epoch = 0;
    bool diverged = false;
};

template <typename T>
double class1_probability(const Tensor<T>& logits) {
    const double l0 = double(logits.values()[0]), l1 = double(logits.values()[1]);
    const double m = std::max(l0, l1);
    const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
    return e1 / (e0 + e1);
}

template <typename T>
std::vector<double> score_samples(const HstParams<T>& params, const HstConfig& cfg,
                                  const std::vector<Sample<T>>& samples) {
    std::vector<double> scores;
    scores.reserve(samples.size());
    for (const auto& s : samples) {
        ForwardResult<T> fw = hst_forward<T>(nullptr, s.image, params, cfg);
        scores.push_back(class1_probability(fw.logits));
    }
    return scores;
}

namespace detail {

template <typename T>
std::vector<std::vector<T>> snapshot_values(const std::vector<Tensor<T>>& params) {
    std::vector<std::vector<T>> out;
    out.reserve(params.size());
    for (const auto& p : params) out.emplace_back(p.values().begin(), p.values().end());
    return out;
}

template <typename T>
void restore_values(std::vector<Tensor<T>>& params, const std::vector<std::vector<T>>& snap) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto dst = params[i].values();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = snap[i][k];
    }
}

}  // namespace detail

// One optimization run: per-epoch deterministic shuffle, mini-batch
// cross-entropy steps with gradient clipping and AdamW, validation F1 after
// every epoch. The best-F1 parameters are left in `params` on return.
template <typename T>
FitResult fit(HstParams<T>& params, const HstConfig& cfg, const std::vector<Sample<T>>& train_set,
              const std::vector<Sample<T>>& val_set, const TrainConfig& tcfg) {
    tcfg.validate();
    if (train_set.empty() || val_set.empty()) {
        throw InputError("fit: train and validation sets must be nonempty");
    }
    if (tcfg.batch_size > train_set.size()) {
        throw InputError("fit: batch_size " + std::to_string(tcfg.batch_size) +
                         " exceeds train set size " + std::to_string(train_set.size()));
    }

    std::vector<Tensor<T>> tensors = params.all_tensors();
    AdamW<T> opt(tensors, tcfg);
    std::vector<int> val_labels;
    for (const auto& s : val_set) val_labels.push_back(s.label);

    FitResult result;
    std::vector<std::vector<T>> best = detail::snapshot_values(tensors);
    double best_f1 = -1.0;
    std::size_t best_epoch = 0, stale = 0;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
        Rng rng(derive_seed(tcfg.seed, "epoch-" + std::to_string(epoch)));
        rng.shuffle(order);

        double loss_sum = 0.0, norm_sum = 0.0;
        std::size_t batches = 0;
        bool diverged = false;
        Tape<T> tape;
        for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + tcfg.batch_size);
            std::vector<Tensor<T>> logit_rows;
            std::vector<int> labels;
            for (std::size_t i = start; i < end; ++i) {
                const Sample<T>& s = train_set[order[i]];
                ForwardResult<T> fw = hst_forward(&tape, s.image, params, cfg);
                logit_rows.push_back(reshape(&tape, fw.logits, {1, 2}));
                labels.push_back(s.label);
            }
            Tensor<T> logits = logit_rows.size() == 1 ? logit_rows[0]
                                                      : concat(&tape, logit_rows, 0);
            Tensor<T> loss = cross_entropy(&tape, logits, labels);
            const double loss_v = double(loss.item());
            if (!std::isfinite(loss_v)) {
                diverged = true;
                break;
            }
            tape.backward(loss);
            double pre_norm = 0.0;
            try {
                pre_norm = double(clip_grad_norm(tensors, T(tcfg.clip_norm)));
            } catch (const NumericError&) {
                diverged = true;
                break;
            }
            opt.step(tensors);
            params.zero_grad();
            tape.clear();
            loss_sum += loss_v;
            norm_sum += pre_norm;
            ++batches;
        }
        if (diverged) {
            detail::restore_values(tensors, best);
            result.diverged = true;
            break;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / double(batches);
        stats.lr = tcfg.lr;
        stats.grad_norm = norm_sum / double(batches);
        const Prf1 v = prf1(score_samples(params, cfg, val_set), val_labels);
        stats.val_f1 = v.f1;
        result.history.push_back(stats);

        if (stats.val_f1 > best_f1) {
            best_f1 = stats.val_f1;
            best_epoch = epoch;
            best = detail::snapshot_values(tensors);
            stale = 0;
        } else if (++stale >= tcfg.patience) {
            break;
        }
    }

    detail::restore_values(tensors, best);
    result.best_val_f1 = std::max(best_f1, 0.0);
    result.best_epoch = best_epoch;
    return result;
}

inline void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write history " + path);
    out << "epoch,train_loss,val_f1,lr,grad_norm\n";
    for (const auto& h : history) {
        out << h.epoch << "," << h.train_loss << "," << h.val_f1 << "," << h.lr << ","
            << h.grad_norm << "\n";
    }
}

}  // namespace hst
