#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hst/core/gradcheck.hpp"
#include "hst/run/dataset.hpp"
#include "hst/synth/corpus.hpp"
#include "hst/train/fit.hpp"
#include "hst/train/loss.hpp"
#include "hst/train/optim.hpp"

using namespace hst;

namespace {

HstConfig micro_cfg() { return HstConfig::named("micro"); }

DspConfig micro_dsp() {
    DspConfig d;
    d.out_size = 16;
    d.f_max = 5512.0;
    return d;
}

// synthetic clips straight through the DSP front end
template <typename T>
std::vector<Sample<T>> synth_samples(std::size_t per_class, std::uint64_t seed) {
    SynthSpec spec;
    spec.per_class = per_class;
    spec.seed = seed;
    const DspConfig dsp = micro_dsp();
    std::vector<Sample<T>> out;
    for (int label = 0; label < 2; ++label) {
        for (std::size_t i = 0; i < per_class; ++i) {
            AudioClip clip{synth_clip(spec, label, i), dsp.target_fs};
            clip = trim_silence(clip, dsp.trim_db);
            Sample<T> s;
            s.id = "s" + std::to_string(label) + "-" + std::to_string(i);
            s.label = label;
            s.image = image_tensor<T>(compute_spectrogram(clip, dsp));
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("cross entropy pinned values", "[train][loss]") {
    // saturated correct prediction contributes ~0
    Tensor<double> sure({1, 2}, std::vector<double>{-20.0, 20.0});
    REQUIRE(cross_entropy<double>(nullptr, sure, {1}).item() < 1e-8);

    // equal logits: p = 0.5, loss = ln 2
    Tensor<double> even({1, 2}, std::vector<double>{0.3, 0.3});
    REQUIRE(std::abs(cross_entropy<double>(nullptr, even, {1}).item() - std::log(2.0)) < 1e-12);
    REQUIRE(std::abs(cross_entropy<double>(nullptr, even, {0}).item() - std::log(2.0)) < 1e-12);

    Tensor<double> bad({1, 2}, std::vector<double>{0.0, 0.0});
    REQUIRE_THROWS_AS(cross_entropy<double>(nullptr, bad, {2}), InputError);
    REQUIRE_THROWS_AS(cross_entropy<double>(nullptr, bad, {0, 1}), ShapeError);
    Tensor<double> wide({1, 3});
    REQUIRE_THROWS_AS(cross_entropy<double>(nullptr, wide, {0}), ShapeError);
}

TEST_CASE("cross entropy matches the per-sample scalar oracle", "[train][loss][oracle]") {
    Rng rng(derive_seed(70, "ce"));
    const std::size_t j = 9;
    Tensor<double> logits({j, 2});
    std::vector<int> labels(j);
    for (std::size_t i = 0; i < j; ++i) {
        logits.values()[i * 2] = rng.normal(0.0, 2.0);
        logits.values()[i * 2 + 1] = rng.normal(0.0, 2.0);
        labels[i] = int(rng.below(2));
    }
    const double got = cross_entropy<double>(nullptr, logits, labels).item();

    double want = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
        const double l0 = logits.values()[i * 2], l1 = logits.values()[i * 2 + 1];
        const double p1 = std::exp(l1) / (std::exp(l0) + std::exp(l1));
        want -= labels[i] == 1 ? std::log(p1) : std::log(1.0 - p1);
    }
    want /= double(j);
    REQUIRE(std::abs(got - want) < 1e-10);
}

TEST_CASE("cross entropy gradient agrees with finite differences", "[train][loss][grad]") {
    Rng rng(derive_seed(71, "cegrad"));
    Tensor<double> logits({6, 2}, true);
    std::vector<int> labels(6);
    for (std::size_t i = 0; i < 6; ++i) {
        logits.values()[i * 2] = rng.normal(0.0, 1.5);
        logits.values()[i * 2 + 1] = rng.normal(0.0, 1.5);
        labels[i] = int(rng.below(2));
    }
    auto loss_fn = [&]() { return cross_entropy<double>(nullptr, logits, labels).item(); };
    Tape<double> tape;
    Tensor<double> loss = cross_entropy(&tape, logits, labels);
    tape.backward(loss);
    Rng pick(derive_seed(71, "pick"));
    const double err = max_rel_grad_error<double>(loss_fn, {logits}, 1e-6, 12, pick);
    REQUIRE(err < 1e-6);

    // closed form for the unfloored regime: (softmax - onehot) / J
    for (std::size_t i = 0; i < 6; ++i) {
        const double l0 = logits.values()[i * 2], l1 = logits.values()[i * 2 + 1];
        const double p1 = std::exp(l1) / (std::exp(l0) + std::exp(l1));
        const double want1 = (p1 - double(labels[i])) / 6.0;
        REQUIRE(std::abs(logits.grad()[i * 2 + 1] - want1) < 1e-12);
        REQUIRE(std::abs(logits.grad()[i * 2] + want1) < 1e-12);
    }
}

TEST_CASE("gradient clipping scales and is idempotent", "[train][clip]") {
    auto with_grads = [](std::vector<double> g) {
        Tensor<double> t({g.size()}, true);
        t.storage()->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) t.grad()[i] = g[i];
        return t;
    };

    {
        std::vector<Tensor<double>> params{with_grads({0.12, 0.16})};  // norm 0.2
        const double pre = clip_grad_norm(params, 0.1);
        REQUIRE(pre == Catch::Approx(0.2).margin(1e-15));
        REQUIRE(params[0].grad()[0] == Catch::Approx(0.06).margin(1e-15));
        REQUIRE(params[0].grad()[1] == Catch::Approx(0.08).margin(1e-15));
    }
    {
        std::vector<Tensor<double>> params{with_grads({0.03, 0.04})};  // norm 0.05
        REQUIRE(clip_grad_norm(params, 0.1) == Catch::Approx(0.05).margin(1e-15));
        REQUIRE(params[0].grad()[0] == 0.03);
        REQUIRE(params[0].grad()[1] == 0.04);
    }

    Rng rng(derive_seed(72, "clip"));
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Tensor<double>> params;
        std::vector<double> g;
        for (int i = 0; i < 40; ++i) g.push_back(rng.normal(0.0, 0.05));
        params.push_back(with_grads(g));
        const double pre = clip_grad_norm(params, 0.1);
        double post = 0.0;
        for (double v : params[0].grad()) post += v * v;
        post = std::sqrt(post);
        REQUIRE(std::abs(post - std::min(pre, 0.1)) < 1e-9);

        // second clip is a bitwise no-op
        std::vector<double> before(params[0].grad().begin(), params[0].grad().end());
        clip_grad_norm(params, 0.1);
        for (std::size_t i = 0; i < before.size(); ++i) {
            REQUIRE(params[0].grad()[i] == before[i]);
        }
    }

    std::vector<Tensor<double>> nan_params{with_grads({0.1, std::nan("")})};
    REQUIRE_THROWS_AS(clip_grad_norm(nan_params, 0.1), NumericError);
}

TEST_CASE("adamw first step, decay, and scalar trajectory", "[train][adamw][oracle]") {
    auto scalar_param = [](double v) {
        Tensor<double> t({1}, std::vector<double>{v}, true);
        t.storage()->ensure_grad();
        return t;
    };

    {
        // g=1, t=1, no decay: update is lr * mhat / (sqrt(vhat) + eps) with
        // mhat = vhat = 1
        TrainConfig cfg;
        cfg.lr = 1e-2;
        cfg.weight_decay = 0.0;
        std::vector<Tensor<double>> p{scalar_param(0.5)};
        AdamW<double> opt(p, cfg);
        p[0].grad()[0] = 1.0;
        opt.step(p);
        REQUIRE(std::abs(p[0].values()[0] - (0.5 - 1e-2 / (1.0 + 1e-8))) < 1e-15);
    }
    {
        // zero gradient with decay: pure multiplicative shrink
        TrainConfig cfg;
        cfg.lr = 0.1;
        cfg.weight_decay = 0.5;
        std::vector<Tensor<double>> p{scalar_param(2.0)};
        AdamW<double> opt(p, cfg);
        p[0].grad()[0] = 0.0;
        opt.step(p);
        REQUIRE(std::abs(p[0].values()[0] - 2.0 * (1.0 - 0.1 * 0.5)) < 1e-15);
    }
    {
        // 3-step trajectory vs a hand recurrence
        TrainConfig cfg;
        cfg.lr = 0.1;
        cfg.weight_decay = 0.01;
        std::vector<Tensor<double>> p{scalar_param(1.0)};
        AdamW<double> opt(p, cfg);
        const double grads[3] = {0.3, -0.2, 0.5};

        double theta = 1.0, m = 0.0, v = 0.0;
        for (int t = 1; t <= 3; ++t) {
            const double g = grads[t - 1];
            p[0].grad()[0] = g;
            opt.step(p);

            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            const double mhat = m / (1.0 - std::pow(0.9, t));
            const double vhat = v / (1.0 - std::pow(0.999, t));
            theta -= 0.1 * (mhat / (std::sqrt(vhat) + 1e-8) + 0.01 * theta);
            REQUIRE(std::abs(p[0].values()[0] - theta) < 1e-12);
        }
    }
    {
        TrainConfig cfg;
        std::vector<Tensor<double>> p{scalar_param(1.0)};
        AdamW<double> opt(p, cfg);
        std::vector<Tensor<double>> other{scalar_param(1.0), scalar_param(2.0)};
        REQUIRE_THROWS_AS(opt.step(other), ShapeError);
    }
}

TEST_CASE("one tiny step never increases loss materially", "[train][property]") {
    HstConfig cfg = micro_cfg();
    HstParams<double> params(cfg);
    params.init(81);
    auto samples = synth_samples<double>(4, 310);

    auto batch_loss = [&](Tape<double>* tape) {
        std::vector<Tensor<double>> rows;
        std::vector<int> labels;
        for (const auto& s : samples) {
            rows.push_back(reshape(tape, hst_forward(tape, s.image, params, cfg).logits, {1, 2}));
            labels.push_back(s.label);
        }
        return cross_entropy(tape, concat(tape, rows, 0), labels);
    };

    const double before = batch_loss(nullptr).item();
    Tape<double> tape;
    Tensor<double> loss = batch_loss(&tape);
    tape.backward(loss);
    std::vector<Tensor<double>> tensors = params.all_tensors();
    clip_grad_norm(tensors, 0.1);
    TrainConfig tc;
    tc.lr = 1e-7;
    AdamW<double> opt(tensors, tc);
    opt.step(tensors);
    const double after = batch_loss(nullptr).item();
    REQUIRE(after <= before + 1e-6);
}

TEST_CASE("single batch overfits within 500 steps", "[train][overfit]") {
    HstConfig cfg = micro_cfg();
    HstParams<float> params(cfg);
    params.init(82);
    auto samples = synth_samples<float>(4, 311);
    std::vector<int> labels;
    for (const auto& s : samples) labels.push_back(s.label);

    TrainConfig tc;
    tc.lr = 1e-3;
    std::vector<Tensor<float>> tensors = params.all_tensors();
    AdamW<float> opt(tensors, tc);
    double loss_v = 1e9;
    for (int step = 0; step < 500 && loss_v >= 0.01; ++step) {
        Tape<float> tape;
        std::vector<Tensor<float>> rows;
        for (const auto& s : samples) {
            rows.push_back(
                reshape(&tape, hst_forward(&tape, s.image, params, cfg).logits, {1, 2}));
        }
        Tensor<float> loss = cross_entropy(&tape, concat(&tape, rows, 0), labels);
        loss_v = double(loss.item());
        tape.backward(loss);
        clip_grad_norm(tensors, float(tc.clip_norm));
        opt.step(tensors);
        params.zero_grad();
    }
    REQUIRE(loss_v < 0.01);
}

TEST_CASE("fit is deterministic and inert at lr zero", "[train][fit]") {
    HstConfig cfg = micro_cfg();
    auto train_set = synth_samples<float>(6, 312);
    auto val_set = synth_samples<float>(2, 313);

    TrainConfig tc;
    tc.lr = 0.0;
    tc.max_epochs = 3;
    tc.batch_size = 4;
    HstParams<float> params(cfg);
    params.init(83);
    std::vector<float> before;
    params.visit([&](const std::string&, Tensor<float>& t) {
        before.insert(before.end(), t.values().begin(), t.values().end());
    });
    FitResult r = fit(params, cfg, train_set, val_set, tc);
    REQUIRE(r.history.size() == 3);
    std::vector<float> after;
    params.visit([&](const std::string&, Tensor<float>& t) {
        after.insert(after.end(), t.values().begin(), t.values().end());
    });
    REQUIRE(before == after);

    tc.lr = 5e-4;
    tc.seed = 99;
    HstParams<float> p1(cfg);
    p1.init(84);
    FitResult r1 = fit(p1, cfg, train_set, val_set, tc);
    HstParams<float> p2(cfg);
    p2.init(84);
    FitResult r2 = fit(p2, cfg, train_set, val_set, tc);
    REQUIRE(r1.history.size() == r2.history.size());
    for (std::size_t i = 0; i < r1.history.size(); ++i) {
        REQUIRE(r1.history[i].train_loss == r2.history[i].train_loss);
        REQUIRE(r1.history[i].val_f1 == r2.history[i].val_f1);
        REQUIRE(r1.history[i].grad_norm == r2.history[i].grad_norm);
    }

    REQUIRE_THROWS_AS(fit(p1, cfg, std::vector<Sample<float>>{}, val_set, tc), InputError);
    tc.batch_size = 64;
    REQUIRE_THROWS_AS(fit(p1, cfg, train_set, val_set, tc), InputError);
}

TEST_CASE("separable synthetic set trains to high accuracy", "[train][fit][slow]") {
    HstConfig cfg = micro_cfg();
    auto train_set = synth_samples<float>(8, 314);  // 16 clips
    auto val_set = synth_samples<float>(3, 315);

    TrainConfig tc;
    tc.lr = 1e-3;
    tc.max_epochs = 300;
    tc.batch_size = 8;
    tc.patience = 300;  // run on accuracy, not early stop
    HstParams<float> params(cfg);
    params.init(85);

    // fit with a generous budget, then measure train accuracy
    tc.max_epochs = 60;
    FitResult r = fit(params, cfg, train_set, val_set, tc);
    REQUIRE_FALSE(r.diverged);

    const std::vector<double> scores = score_samples(params, cfg, train_set);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        correct += (scores[i] >= 0.5 ? 1 : 0) == train_set[i].label;
    }
    REQUIRE(double(correct) / double(train_set.size()) >= 0.95);
}
