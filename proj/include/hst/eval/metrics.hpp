#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "hst/core/error.hpp"

namespace hst {

struct RocPoint {
    double threshold;
    double fpr;
    double tpr;
};

struct RocResult {
    double auc = 0.0;
    std::vector<RocPoint> points;
};

// AUC with ties counted 1/2. The trapezoidal sweep below accumulates in
// integers (doubled pair counts), so the result is bit-identical to the
// brute-force pairwise probability.
inline RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw ShapeError("roc_auc: scores and labels must align");
    }
    std::size_t pos = 0, neg = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw InputError("roc_auc: label must be 0 or 1");
        if (l == 1) ++pos; else ++neg;
    }
    if (pos == 0 || neg == 0) {
        throw InputError("roc_auc: need both classes, got " + std::to_string(pos) +
                         " positive / " + std::to_string(neg) + " negative");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    RocResult out;
    out.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::uint64_t tp = 0, fp = 0, acc2 = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        // one threshold per distinct score: process the whole tie group
        std::size_t j = i;
        std::uint64_t gp = 0, gn = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] == 1) ++gp; else ++gn;
            ++j;
        }
        acc2 += gn * 2 * tp + gp * gn;  // full rectangles + half the tie block
        tp += gp;
        fp += gn;
        out.points.push_back({scores[order[i]], double(fp) / double(neg),
                              double(tp) / double(pos)});
        i = j;
    }
    out.auc = double(acc2) / (2.0 * double(pos) * double(neg));
    return out;
}

struct Prf1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate = false;  // some denominator was empty
};

// threshold is inclusive: score >= threshold predicts class 1
inline Prf1 prf1(const std::vector<double>& scores, const std::vector<int>& labels,
                 double threshold = 0.5) {
    if (scores.size() != labels.size()) {
        throw ShapeError("prf1: scores and labels must align");
    }
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw InputError("prf1: label must be 0 or 1");
        const bool pred = scores[i] >= threshold;
        if (pred && labels[i] == 1) ++tp;
        if (pred && labels[i] == 0) ++fp;
        if (!pred && labels[i] == 1) ++fn;
    }
    Prf1 out;
    if (tp + fp == 0) {
        out.degenerate = true;
    } else {
        out.precision = double(tp) / double(tp + fp);
    }
    if (tp + fn == 0) {
        out.degenerate = true;
    } else {
        out.recall = double(tp) / double(tp + fn);
    }
    if (out.precision + out.recall > 0.0) {
        out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    } else {
        out.degenerate = true;
    }
    return out;
}

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;  // (n-1) divisor
};

inline Aggregate aggregate_folds(const std::vector<double>& values) {
    if (values.size() < 2) throw ContractError("aggregate_folds: need at least 2 folds");
    Aggregate out;
    for (double v : values) out.mean += v;
    out.mean /= double(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / double(values.size() - 1));
    return out;
}

struct WilcoxonResult {
    double w = 0.0;       // rank sum of positive differences
    double p_value = 1.0; // two-sided
    std::size_t n = 0;    // retained (nonzero) differences
    bool exact = false;
};

namespace detail {

// distribution of the positive-rank sum over all 2^n sign assignments
inline double wilcoxon_exact_p(const std::vector<double>& ranks, double w) {
    const std::size_t n = ranks.size();
    const std::uint64_t total = std::uint64_t(1) << n;
    std::uint64_t le = 0, ge = 0;
    const double eps = 1e-9;
    for (std::uint64_t m = 0; m < total; ++m) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (m & (std::uint64_t(1) << i)) s += ranks[i];
        }
        if (s <= w + eps) ++le;
        if (s >= w - eps) ++ge;
    }
    const double tail = std::min(double(le), double(ge)) / double(total);
    return std::min(1.0, 2.0 * tail);
}

}  // namespace detail

// Two-sided signed-rank test for paired samples. Zero differences are
// discarded; ties in |d| get average ranks. Exact enumeration up to n=12,
// normal approximation with tie and continuity corrections beyond.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                           const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("wilcoxon: paired inputs must align");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) throw InputError("wilcoxon: all differences are zero");
    if (diffs.size() < 5) {
        throw InputError("wilcoxon: need at least 5 nonzero differences, got " +
                         std::to_string(diffs.size()));
    }
    const std::size_t n = diffs.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(diffs[x]) < std::abs(diffs[y]);
    });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
        const double avg = 0.5 * double(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
        i = j;
    }

    WilcoxonResult out;
    out.n = n;
    for (std::size_t k = 0; k < n; ++k) {
        if (diffs[k] > 0.0) out.w += ranks[k];
    }

    if (n <= 12) {
        std::vector<double> sorted_ranks(n);
        for (std::size_t k = 0; k < n; ++k) sorted_ranks[k] = ranks[k];
        out.p_value = detail::wilcoxon_exact_p(sorted_ranks, out.w);
        out.exact = true;
        return out;
    }

    const double nn = double(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    // tie correction: subtract (t^3 - t)/48 per tied group of |d|
    i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
        const double t = double(j - i);
        var -= (t * t * t - t) / 48.0;
        i = j;
    }
    if (var <= 0.0) throw NumericError("wilcoxon: degenerate variance from ties");
    const double delta = out.w - mu;
    const double cc = delta > 0.0 ? -0.5 : (delta < 0.0 ? 0.5 : 0.0);
    const double z = (delta + cc) / std::sqrt(var);
    out.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
    return out;
}

}  // namespace hst
