#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <set>

#include "hst/core/rng.hpp"
#include "hst/eval/folds.hpp"
#include "hst/eval/manifest.hpp"
#include "hst/eval/metrics.hpp"

using namespace hst;

namespace {

// O(J^2) pairwise AUC with ties counted 1/2, accumulated the same doubled
// integer way so equality with the sweep is exact
double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::uint64_t acc2 = 0, pos = 0, neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        ++pos;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            if (scores[i] > scores[j]) acc2 += 2;
            else if (scores[i] == scores[j]) acc2 += 1;
        }
    }
    for (int l : labels) neg += l == 0;
    return double(acc2) / (2.0 * double(pos) * double(neg));
}

}  // namespace

TEST_CASE("roc_auc pinned separations", "[metrics][auc]") {
    REQUIRE(roc_auc({0.9, 0.8, 0.3, 0.2}, {1, 1, 0, 0}).auc == 1.0);
    REQUIRE(roc_auc({0.3, 0.7}, {1, 0}).auc == 0.0);
    REQUIRE(roc_auc({0.5, 0.5}, {1, 0}).auc == 0.5);

    RocResult r = roc_auc({0.9, 0.4, 0.4, 0.1}, {1, 1, 0, 0});
    REQUIRE(r.points.front().fpr == 0.0);
    REQUIRE(r.points.front().tpr == 0.0);
    REQUIRE(r.points.back().fpr == 1.0);
    REQUIRE(r.points.back().tpr == 1.0);

    REQUIRE_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), InputError);
    REQUIRE_THROWS_AS(roc_auc({0.1}, {1, 0}), ShapeError);
    REQUIRE_THROWS_AS(roc_auc({0.1, 0.2}, {1, 2}), InputError);
}

TEST_CASE("roc_auc equals the pairwise oracle exactly", "[metrics][auc][oracle]") {
    Rng rng(derive_seed(60, "auc"));
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t j = 2 + rng.below(199);
        std::vector<double> scores(j);
        std::vector<int> labels(j);
        bool has0 = false, has1 = false;
        for (std::size_t i = 0; i < j; ++i) {
            // coarse quantization forces plenty of ties
            scores[i] = double(rng.below(8)) / 8.0;
            labels[i] = int(rng.below(2));
            has0 = has0 || labels[i] == 0;
            has1 = has1 || labels[i] == 1;
        }
        if (!has0) labels[0] = 0;
        if (!has1) labels[j - 1] = 1;
        REQUIRE(roc_auc(scores, labels).auc == pairwise_auc(scores, labels));
    }
}

TEST_CASE("roc_auc is invariant under strictly monotone transforms", "[metrics][auc]") {
    Rng rng(derive_seed(61, "mono"));
    std::vector<double> scores(60);
    std::vector<int> labels(60);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.uniform(-1.0, 1.0);
        labels[i] = int(rng.below(2));
    }
    labels[0] = 0;
    labels[1] = 1;
    const double base = roc_auc(scores, labels).auc;

    auto mapped = [&](auto&& f) {
        std::vector<double> out(scores.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(scores[i]);
        return roc_auc(out, labels).auc;
    };
    REQUIRE(mapped([](double s) { return 2.0 * s + 1.0; }) == base);
    REQUIRE(mapped([](double s) { return std::exp(s); }) == base);
    REQUIRE(mapped([](double s) { return s * s * s; }) == base);
}

TEST_CASE("prf1 confusion arithmetic", "[metrics][prf1]") {
    // TP=2 FP=1 FN=1 TN=1
    Prf1 m = prf1({0.9, 0.8, 0.7, 0.1, 0.2}, {1, 1, 0, 1, 0});
    REQUIRE(m.precision == Catch::Approx(2.0 / 3.0).margin(1e-15));
    REQUIRE(m.recall == Catch::Approx(2.0 / 3.0).margin(1e-15));
    REQUIRE(m.f1 == Catch::Approx(2.0 / 3.0).margin(1e-15));
    REQUIRE_FALSE(m.degenerate);

    Prf1 perfect = prf1({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0});
    REQUIRE(perfect.precision == 1.0);
    REQUIRE(perfect.recall == 1.0);
    REQUIRE(perfect.f1 == 1.0);

    Prf1 degen = prf1({0.1, 0.2}, {0, 1});  // nothing predicted positive
    REQUIRE(degen.degenerate);
    REQUIRE(degen.f1 == 0.0);

    Rng rng(derive_seed(62, "prf"));
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t j = 5 + rng.below(60);
        std::vector<double> scores(j);
        std::vector<int> labels(j);
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < j; ++i) {
            scores[i] = rng.uniform();
            labels[i] = int(rng.below(2));
            const bool pred = scores[i] >= 0.5;
            if (pred && labels[i] == 1) ++tp;
            if (pred && labels[i] == 0) ++fp;
            if (!pred && labels[i] == 1) ++fn;
        }
        Prf1 got = prf1(scores, labels);
        if (tp + fp > 0) REQUIRE(got.precision == double(tp) / double(tp + fp));
        if (tp + fn > 0) REQUIRE(got.recall == double(tp) / double(tp + fn));
        if (got.precision + got.recall > 0.0) {
            const double hm = 2.0 * got.precision * got.recall / (got.precision + got.recall);
            REQUIRE(std::abs(got.f1 - hm) < 1e-12);
        }
    }
}

TEST_CASE("fold aggregation mean and sample std", "[metrics][aggregate]") {
    Aggregate same = aggregate_folds({0.75, 0.75, 0.75});  // exact in binary
    REQUIRE(same.mean == 0.75);
    REQUIRE(same.std == 0.0);

    Aggregate two = aggregate_folds({0.8, 1.0});
    REQUIRE(two.mean == Catch::Approx(0.9).margin(1e-12));
    REQUIRE(two.std == Catch::Approx(std::sqrt(0.02)).margin(1e-12));

    Rng rng(derive_seed(63, "agg"));
    std::vector<double> vals(11);
    for (auto& v : vals) v = rng.uniform();
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= double(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    Aggregate got = aggregate_folds(vals);
    REQUIRE(std::abs(got.mean - mean) < 1e-12);
    REQUIRE(std::abs(got.std - std::sqrt(ss / 10.0)) < 1e-12);

    REQUIRE_THROWS_AS(aggregate_folds({0.5}), ContractError);
}

TEST_CASE("wilcoxon signed-rank exact and approximate paths", "[metrics][wilcoxon]") {
    REQUIRE_THROWS_AS(wilcoxon_signed_rank({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}), InputError);
    REQUIRE_THROWS_AS(wilcoxon_signed_rank({1, 2, 3, 4}, {0, 1, 2, 3}), InputError);

    // all five differences positive: W = 15, exact two-sided p = 2/32
    WilcoxonResult r =
        wilcoxon_signed_rank({2, 3, 4, 5, 6}, {1.0, 1.5, 2.0, 2.5, 3.0});
    REQUIRE(r.exact);
    REQUIRE(r.w == 15.0);
    REQUIRE(r.p_value == Catch::Approx(0.0625).margin(1e-12));

    // tied |d| values take average ranks
    WilcoxonResult tied = wilcoxon_signed_rank({2, 2, 2, 2, 2}, {1, 1, 1, 3, 3});
    REQUIRE(tied.n == 5);
    REQUIRE(tied.w == 9.0);  // positives hold three of the five rank-3 slots

    // past the exact cutoff the approximate path engages and stays in range
    Rng rng(derive_seed(64, "wilcox"));
    std::vector<double> a(20), b(20);
    for (std::size_t i = 0; i < 20; ++i) {
        a[i] = rng.normal();
        b[i] = a[i] - rng.normal(0.3, 1.0);
    }
    WilcoxonResult approx = wilcoxon_signed_rank(a, b);
    REQUIRE_FALSE(approx.exact);
    REQUIRE(approx.p_value >= 0.0);
    REQUIRE(approx.p_value <= 1.0);

    // zero differences are discarded before the n >= 5 gate
    REQUIRE_THROWS_AS(
        wilcoxon_signed_rank({1, 2, 3, 4, 5, 6}, {1, 2, 3, 4.5, 5.5, 6.5}), InputError);
}

TEST_CASE("wilcoxon exact matches normal approximation at n=12", "[metrics][wilcoxon][oracle]") {
    // compare the two paths on identical data: run exact via the API, then
    // reproduce the approximation formula here
    Rng rng(derive_seed(65, "wilcox2"));
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> a(12), b(12);
        for (std::size_t i = 0; i < 12; ++i) {
            a[i] = rng.normal();
            b[i] = a[i] - rng.normal(0.4, 1.0);
            if (a[i] == b[i]) b[i] += 0.1;
        }
        WilcoxonResult exact = wilcoxon_signed_rank(a, b);
        REQUIRE(exact.exact);
        REQUIRE(exact.n == 12);

        const double n = 12.0;
        const double mu = n * (n + 1.0) / 4.0;
        const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;  // continuous draws: no ties
        const double delta = exact.w - mu;
        const double cc = delta > 0.0 ? -0.5 : (delta < 0.0 ? 0.5 : 0.0);
        const double z = (delta + cc) / std::sqrt(var);
        const double p_norm = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
        REQUIRE(std::abs(exact.p_value - p_norm) < 0.02);
    }
}

TEST_CASE("manifest round trip and validation", "[manifest]") {
    namespace fs = std::filesystem;
    const auto path = (fs::temp_directory_path() / "hst_manifest_test.jsonl").string();
    std::vector<ManifestRecord> records{{"a", "/x/a.wav", 0, "cough", "g1"},
                                        {"b", "/x/b.wav", 1, "breath", "g2"},
                                        {"c", "/x/c.wav", 1, "unknown", ""}};
    write_manifest(path, records);
    auto back = read_manifest(path);
    REQUIRE(back.size() == 3);
    REQUIRE(back[1].id == "b");
    REQUIRE(back[1].label == 1);
    REQUIRE(back[1].modality == "breath");
    REQUIRE(back[2].group.empty());

    records.push_back({"a", "/x/dup.wav", 0, "cough", ""});
    REQUIRE_THROWS_AS(validate_manifest(records), InputError);
    records.back() = {"d", "/x/d.wav", 3, "cough", ""};
    REQUIRE_THROWS_AS(validate_manifest(records), InputError);
    records.back() = {"d", "/x/d.wav", 0, "sneeze", ""};
    REQUIRE_THROWS_AS(validate_manifest(records), InputError);
    fs::remove(path);

    REQUIRE_THROWS_AS(read_manifest("/nonexistent/manifest.jsonl"), IoError);
}

namespace {

std::vector<ManifestRecord> fake_manifest(std::size_t n0, std::size_t n1) {
    std::vector<ManifestRecord> m;
    for (std::size_t i = 0; i < n0; ++i) m.push_back({"n" + std::to_string(i), "p", 0, "cough", ""});
    for (std::size_t i = 0; i < n1; ++i) m.push_back({"p" + std::to_string(i), "p", 1, "cough", ""});
    return m;
}

}  // namespace

TEST_CASE("fold plan arithmetic on the balanced 100-sample case", "[folds]") {
    auto manifest = fake_manifest(50, 50);
    FoldPlan plan = make_cv_folds(manifest, 10, 17);
    REQUIRE(plan.folds.size() == 10);
    for (const auto& f : plan.folds) {
        REQUIRE(f.train.size() == 70);
        REQUIRE(f.test.size() == 20);
        REQUIRE(f.val.size() == 10);
        auto count1 = [](const std::vector<std::string>& ids) {
            std::size_t c = 0;
            for (const auto& id : ids) c += id[0] == 'p';
            return c;
        };
        REQUIRE(count1(f.train) == 35);
        REQUIRE(count1(f.test) == 10);
        REQUIRE(count1(f.val) == 5);
    }

    FoldPlan again = make_cv_folds(manifest, 10, 17);
    for (std::size_t f = 0; f < 10; ++f) {
        REQUIRE(again.folds[f].train == plan.folds[f].train);
        REQUIRE(again.folds[f].test == plan.folds[f].test);
        REQUIRE(again.folds[f].val == plan.folds[f].val);
    }
    FoldPlan other = make_cv_folds(manifest, 10, 18);
    REQUIRE(other.folds[0].test != plan.folds[0].test);
}

TEST_CASE("fold plans partition, stratify, and cover the test sets", "[folds][property]") {
    Rng rng(derive_seed(66, "foldprop"));
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n0 = 5 + rng.below(30);
        const std::size_t n1 = 5 + rng.below(30);
        auto manifest = fake_manifest(n0, n1);
        const double ratio1 = double(n1) / double(n0 + n1);
        FoldPlan plan = make_cv_folds(manifest, 10, rng.bits());

        std::set<std::string> all;
        for (const auto& r : manifest) all.insert(r.id);
        std::set<std::string> tested;
        for (const auto& f : plan.folds) {
            std::set<std::string> seen;
            for (const auto* set : {&f.train, &f.test, &f.val}) {
                for (const auto& id : *set) REQUIRE(seen.insert(id).second);
            }
            REQUIRE(seen == all);
            for (const auto* set : {&f.train, &f.test, &f.val}) {
                std::size_t c1 = 0;
                for (const auto& id : *set) c1 += id[0] == 'p';
                REQUIRE(std::abs(double(c1) - ratio1 * double(set->size())) <= 1.0 + 1e-9);
            }
            for (const auto& id : f.test) tested.insert(id);
        }
        REQUIRE(tested == all);
    }
}

TEST_CASE("fold plan degenerate inputs", "[folds]") {
    REQUIRE_THROWS_AS(make_cv_folds(fake_manifest(4, 4), 10, 1), InputError);
    REQUIRE_THROWS_AS(make_cv_folds(fake_manifest(12, 0), 10, 1), InputError);
    REQUIRE_THROWS_AS(make_cv_folds(fake_manifest(30, 30), 1, 1), ConfigError);
}
