#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hst/core/gradcheck.hpp"
#include "hst/core/ops.hpp"
#include "hst/core/rng.hpp"
#include "hst/core/tape.hpp"
#include "hst/core/tensor.hpp"

using namespace hst;

namespace {

Tensor<double> randn(Shape shape, Rng& rng, bool requires_grad = false) {
    Tensor<double> t(std::move(shape), requires_grad);
    for (auto& v : t.values()) v = rng.normal();
    return t;
}

// Scalar objective sum(y * w) with fixed random weights, so every output
// coordinate contributes a distinct gradient signal.
template <typename Fwd>
double run_fd_check(Fwd&& fwd, std::vector<Tensor<double>> params, Rng& rng) {
    Tape<double> tape;
    Tensor<double> y = fwd(&tape);
    Tensor<double> w(y.shape());
    Rng wrng(derive_seed(99, "fd-weights"));
    for (auto& v : w.values()) v = wrng.normal();
    Tensor<double> loss = sum(&tape, mul(&tape, y, w));
    tape.backward(loss);
    auto loss_fn = [&]() {
        Tensor<double> yy = fwd(nullptr);
        double acc = 0.0;
        auto yv = yy.values();
        auto wv = w.values();
        for (std::size_t i = 0; i < yv.size(); ++i) acc += yv[i] * wv[i];
        return acc;
    };
    return max_rel_grad_error<double>(loss_fn, std::move(params), 1e-6, 64, rng);
}

// Maclaurin series for erf, long-double accumulation.
long double erf_series(long double x) {
    const long double two_over_sqrt_pi = 1.12837916709551257389615890312155L;
    long double term = x;
    long double acc = x;
    for (int n = 1; n < 200; ++n) {
        term *= -x * x / n;
        const long double contrib = term / (2 * n + 1);
        acc += contrib;
        if (std::fabs((double)contrib) < 1e-30) break;
    }
    return two_over_sqrt_pi * acc;
}

}  // namespace

TEST_CASE("tensor construction and contracts", "[core]") {
    Tensor<float> t({2, 3});
    REQUIRE(t.size() == 6);
    REQUIRE(t.rank() == 2);
    for (float v : t.values()) REQUIRE(v == 0.0f);

    REQUIRE_THROWS_AS(Tensor<float>({2, 0, 3}), ShapeError);
    REQUIRE_THROWS_AS(Tensor<float>({2}, {1.0f, 2.0f, 3.0f}), ShapeError);
    REQUIRE_THROWS_AS(t.item(), ContractError);
    REQUIRE(Tensor<float>::scalar(4.0f).item() == 4.0f);

    Tensor<float> a({2, 2});
    Tensor<float> b({2, 3});
    REQUIRE_THROWS_AS(add<float>(nullptr, a, b), ShapeError);
    REQUIRE_THROWS_AS(mul<float>(nullptr, a, b), ShapeError);

    Tensor<float> c = Tensor<float>::full({3}, 2.5f);
    Tensor<float> d = c.clone();
    d.values()[0] = -1.0f;
    REQUIRE(c.values()[0] == 2.5f);
}

TEST_CASE("backward requires a scalar", "[core]") {
    Tape<double> tape;
    Tensor<double> x({2, 2}, true);
    Tensor<double> y = add(&tape, x, x);
    REQUIRE_THROWS_AS(tape.backward(y), ContractError);
}

TEST_CASE("matmul identity and pinned values", "[core]") {
    Tensor<double> eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Rng rng(derive_seed(1, "matmul-id"));
    Tensor<double> x = randn({3, 5}, rng);
    Tensor<double> y = matmul<double>(nullptr, eye, x);
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(y.values()[i] == x.values()[i]);

    Tensor<double> a({1, 1}, std::vector<double>{2.0});
    Tensor<double> b({1, 1}, std::vector<double>{3.0});
    REQUIRE(matmul<double>(nullptr, a, b).item() == 6.0);

    Tensor<double> bad({4, 2});
    REQUIRE_THROWS_AS(matmul<double>(nullptr, x, bad), ShapeError);
}

TEST_CASE("matmul matches the triple-loop oracle", "[core][oracle]") {
    Rng rng(derive_seed(1, "matmul-oracle"));
    Tensor<double> a = randn({3, 4}, rng);
    Tensor<double> b = randn({4, 2}, rng);
    Tensor<double> c = matmul<double>(nullptr, a, b);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < 4; ++p)
                acc += a.values()[i * 4 + p] * b.values()[p * 2 + j];
            REQUIRE(std::abs(c.values()[i * 2 + j] - acc) < 1e-12);
        }
    }
}

TEST_CASE("batched matmul with shared and per-batch weights", "[core][oracle]") {
    Rng rng(derive_seed(1, "matmul-batch"));
    Tensor<double> a = randn({2, 3, 4}, rng);
    Tensor<double> w = randn({4, 5}, rng);
    Tensor<double> c = matmul<double>(nullptr, a, w);
    REQUIRE(c.shape() == Shape{2, 3, 5});
    for (std::size_t g = 0; g < 2; ++g) {
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 5; ++j) {
                double acc = 0.0;
                for (std::size_t p = 0; p < 4; ++p)
                    acc += a.values()[(g * 3 + i) * 4 + p] * w.values()[p * 5 + j];
                REQUIRE(std::abs(c.values()[(g * 3 + i) * 5 + j] - acc) < 1e-12);
            }
        }
    }

    Tensor<double> bb = randn({2, 4, 5}, rng);
    Tensor<double> cb = matmul<double>(nullptr, a, bb);
    for (std::size_t g = 0; g < 2; ++g) {
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 5; ++j) {
                double acc = 0.0;
                for (std::size_t p = 0; p < 4; ++p)
                    acc += a.values()[(g * 3 + i) * 4 + p] * bb.values()[(g * 4 + p) * 5 + j];
                REQUIRE(std::abs(cb.values()[(g * 3 + i) * 5 + j] - acc) < 1e-12);
            }
        }
    }
}

TEST_CASE("matmul associativity", "[core][property]") {
    Rng rng(derive_seed(2, "assoc"));
    for (int trial = 0; trial < 5; ++trial) {
        Tensor<double> a = randn({4, 6}, rng);
        Tensor<double> b = randn({6, 3}, rng);
        Tensor<double> c = randn({3, 5}, rng);
        Tensor<double> lhs = matmul<double>(nullptr, matmul<double>(nullptr, a, b), c);
        Tensor<double> rhs = matmul<double>(nullptr, a, matmul<double>(nullptr, b, c));
        for (std::size_t i = 0; i < lhs.size(); ++i) {
            const double denom = std::max(1.0, std::abs(lhs.values()[i]));
            REQUIRE(std::abs(lhs.values()[i] - rhs.values()[i]) / denom < 1e-9);
        }
    }
}

TEST_CASE("softmax pinned rows", "[core]") {
    Tensor<double> x({2, 2}, {0.0, 0.0, 0.0, -1e9});
    Tensor<double> y = softmax_lastdim<double>(nullptr, x);
    REQUIRE(y.values()[0] == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(y.values()[1] == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(y.values()[2] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(y.values()[3] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("softmax matches extended-precision oracle", "[core][oracle]") {
    Rng rng(derive_seed(3, "softmax"));
    Tensor<double> x({8});
    for (auto& v : x.values()) v = rng.uniform(-4.0, 4.0);
    Tensor<double> y = softmax_lastdim<double>(nullptr, x);
    long double denom = 0.0L;
    for (double v : x.values()) denom += std::exp((long double)v);
    for (std::size_t i = 0; i < 8; ++i) {
        const long double want = std::exp((long double)x.values()[i]) / denom;
        REQUIRE(std::abs((double)(y.values()[i] - want)) < 1e-10);
    }
}

TEST_CASE("softmax rows sum to one and shift invariance", "[core][property]") {
    Rng rng(derive_seed(3, "softmax-shift"));
    for (int trial = 0; trial < 10; ++trial) {
        Tensor<double> x({4, 7});
        for (auto& v : x.values()) v = rng.uniform(-50.0, 50.0);
        Tensor<double> y = softmax_lastdim<double>(nullptr, x);
        const double c = rng.uniform(-100.0, 100.0);
        Tensor<double> xs(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) xs.values()[i] = x.values()[i] + c;
        Tensor<double> ys = softmax_lastdim<double>(nullptr, xs);
        for (std::size_t r = 0; r < 4; ++r) {
            double row = 0.0;
            for (std::size_t i = 0; i < 7; ++i) row += y.values()[r * 7 + i];
            REQUIRE(row == Catch::Approx(1.0).margin(1e-6));
        }
        for (std::size_t i = 0; i < y.size(); ++i) {
            REQUIRE(std::abs(y.values()[i] - ys.values()[i]) < 1e-12);
        }
    }
}

TEST_CASE("layer_norm pinned cases", "[core]") {
    Tensor<double> gamma = Tensor<double>::full({4}, 1.0);
    Tensor<double> beta({4});
    Tensor<double> constant = Tensor<double>::full({2, 4}, 3.25);
    Tensor<double> z = layer_norm<double>(nullptr, constant, gamma, beta, 1e-5);
    for (double v : z.values()) REQUIRE(std::abs(v) < 1e-12);

    Rng rng(derive_seed(4, "ln"));
    Tensor<double> x = randn({3, 4}, rng);
    Tensor<double> y = layer_norm<double>(nullptr, x, gamma, beta, 1e-5);
    for (std::size_t r = 0; r < 3; ++r) {
        double mu = 0.0, var = 0.0;
        for (std::size_t i = 0; i < 4; ++i) mu += y.values()[r * 4 + i];
        mu /= 4.0;
        for (std::size_t i = 0; i < 4; ++i) {
            const double d = y.values()[r * 4 + i] - mu;
            var += d * d;
        }
        var /= 4.0;
        REQUIRE(std::abs(mu) < 1e-10);
        REQUIRE(var == Catch::Approx(1.0).margin(1e-3));
    }

    Tensor<double> g0({4});
    Tensor<double> b5 = Tensor<double>::full({4}, 5.0);
    Tensor<double> all5 = layer_norm<double>(nullptr, x, g0, b5, 1e-5);
    for (double v : all5.values()) REQUIRE(v == 5.0);

    REQUIRE_THROWS_AS(layer_norm<double>(nullptr, x, gamma, beta, 0.0), ContractError);
}

TEST_CASE("gelu pinned values against erf oracle", "[core][oracle]") {
    Tensor<double> x({3}, {0.0, 10.0, 1.0});
    Tensor<double> y = gelu<double>(nullptr, x);
    REQUIRE(y.values()[0] == 0.0);
    REQUIRE(y.values()[1] == Catch::Approx(10.0).margin(1e-9));
    const long double inv_sqrt2 = 0.70710678118654752440084436210485L;
    const double want = (double)(1.0L * 0.5L * (1.0L + erf_series(inv_sqrt2)));
    REQUIRE(y.values()[2] == Catch::Approx(want).margin(1e-12));
}

TEST_CASE("linear pinned cases and composition oracle", "[core][oracle]") {
    Rng rng(derive_seed(5, "linear"));
    Tensor<double> x = randn({4, 3}, rng);
    Tensor<double> eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor<double> zero_b({3});
    Tensor<double> y = linear<double>(nullptr, x, eye, zero_b);
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(y.values()[i] == x.values()[i]);

    Tensor<double> x0({4, 3});
    Tensor<double> w = randn({3, 2}, rng);
    Tensor<double> b = randn({2}, rng);
    Tensor<double> yb = linear<double>(nullptr, x0, w, b);
    for (std::size_t r = 0; r < 4; ++r) {
        REQUIRE(yb.values()[r * 2 + 0] == b.values()[0]);
        REQUIRE(yb.values()[r * 2 + 1] == b.values()[1]);
    }

    Tensor<double> xr = randn({4, 3}, rng);
    Tensor<double> composed = add<double>(nullptr, matmul<double>(nullptr, xr, w),
                                          add_broadcast<double>(nullptr, Tensor<double>({4, 2}), b));
    Tensor<double> direct = linear<double>(nullptr, xr, w, b);
    for (std::size_t i = 0; i < direct.size(); ++i) {
        REQUIRE(direct.values()[i] == Catch::Approx(composed.values()[i]).margin(1e-15));
    }

    Tensor<double> no_bias;
    Tensor<double> proj = linear<double>(nullptr, xr, w, no_bias);
    Tensor<double> mm = matmul<double>(nullptr, xr, w);
    for (std::size_t i = 0; i < proj.size(); ++i) REQUIRE(proj.values()[i] == mm.values()[i]);
}

TEST_CASE("grad_check trivial objectives", "[core][grad]") {
    Rng rng(derive_seed(6, "gc-trivial"));
    Tensor<double> x = randn({3, 3}, rng, true);

    Tape<double> tape;
    Tensor<double> loss = sum(&tape, x);
    tape.backward(loss);
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(x.grad()[i] == 1.0);
    auto f_sum = [&]() {
        double acc = 0.0;
        for (double v : x.values()) acc += v;
        return acc;
    };
    REQUIRE(max_rel_grad_error<double>(f_sum, {x}, 1e-3, 64, rng) < 1e-10);

    Tensor<double> z = randn({5}, rng, true);
    Tape<double> tape2;
    Tensor<double> loss2 = sum(&tape2, softmax_lastdim(&tape2, z));
    tape2.backward(loss2);
    auto f_constant = [&]() {
        Tensor<double> s = softmax_lastdim<double>(nullptr, z);
        double acc = 0.0;
        for (double v : s.values()) acc += v;
        return acc;
    };
    REQUIRE(max_rel_grad_error<double>(f_constant, {z}, 1e-6, 64, rng) < 1e-8);
}

TEST_CASE("elementwise op gradients", "[core][grad]") {
    Rng rng(derive_seed(7, "grad-elem"));
    Tensor<double> a = randn({3, 4}, rng, true);
    Tensor<double> b = randn({3, 4}, rng, true);
    Tensor<double> bias = randn({4}, rng, true);

    REQUIRE(run_fd_check([&](Tape<double>* t) { return add(t, a, b); }, {a, b}, rng) < 1e-6);
    a.zero_grad(); b.zero_grad();
    REQUIRE(run_fd_check([&](Tape<double>* t) { return mul(t, a, b); }, {a, b}, rng) < 1e-6);
    a.zero_grad();
    REQUIRE(run_fd_check([&](Tape<double>* t) { return scale(t, a, -1.7); }, {a}, rng) < 1e-6);
    a.zero_grad();
    REQUIRE(run_fd_check([&](Tape<double>* t) { return gelu(t, a); }, {a}, rng) < 1e-6);
    a.zero_grad(); bias.zero_grad();
    REQUIRE(run_fd_check([&](Tape<double>* t) { return add_broadcast(t, a, bias); }, {a, bias},
                         rng) < 1e-6);
}

TEST_CASE("matmul, linear, softmax, layer_norm gradients", "[core][grad]") {
    Rng rng(derive_seed(8, "grad-chain"));
    Tensor<double> x = randn({2, 3, 4}, rng, true);
    Tensor<double> w = randn({4, 5}, rng, true);
    Tensor<double> b = randn({5}, rng, true);
    Tensor<double> gamma = randn({5}, rng, true);
    Tensor<double> beta = randn({5}, rng, true);

    auto chain = [&](Tape<double>* t) {
        Tensor<double> h = linear(t, x, w, b);
        Tensor<double> n = layer_norm(t, h, gamma, beta, 1e-5);
        return softmax_lastdim(t, n);
    };
    REQUIRE(run_fd_check(chain, {x, w, b, gamma, beta}, rng) < 1e-5);

    for (auto* p : {&x, &w}) p->zero_grad();
    Tensor<double> bb = randn({2, 4, 5}, rng, true);
    REQUIRE(run_fd_check([&](Tape<double>* t) { return matmul(t, x, bb); }, {x, bb}, rng) < 1e-5);
}

TEST_CASE("shape surgery gradients", "[core][grad]") {
    Rng rng(derive_seed(9, "grad-shape"));
    Tensor<double> x = randn({2, 3, 4}, rng, true);

    REQUIRE(run_fd_check([&](Tape<double>* t) { return reshape(t, x, {6, 4}); }, {x}, rng) < 1e-6);
    x.zero_grad();
    REQUIRE(run_fd_check([&](Tape<double>* t) { return transpose(t, x, 0, 2); }, {x}, rng) < 1e-6);
    x.zero_grad();
    REQUIRE(run_fd_check([&](Tape<double>* t) { return slice(t, x, 1, 1, 2); }, {x}, rng) < 1e-6);
    x.zero_grad();
    Tensor<double> y = randn({2, 2, 4}, rng, true);
    REQUIRE(run_fd_check(
                [&](Tape<double>* t) { return concat(t, std::vector<Tensor<double>>{x, y}, 1); },
                {x, y}, rng) < 1e-6);
    x.zero_grad();
    std::vector<std::size_t> idx{1, 0, 1, 1};
    REQUIRE(run_fd_check([&](Tape<double>* t) { return gather_rows(t, x, idx); }, {x}, rng) < 1e-6);
    x.zero_grad();
    REQUIRE(run_fd_check([&](Tape<double>* t) { return mean_rows(t, reshape(t, x, {6, 4})); }, {x},
                         rng) < 1e-6);
}

TEST_CASE("attention helper gradients", "[core][grad]") {
    Rng rng(derive_seed(10, "grad-attn"));
    Tensor<double> table = randn({2, 9}, rng, true);
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < 16; ++i) index.push_back(i % 9);
    REQUIRE(run_fd_check([&](Tape<double>* t) { return rel_pos_bias(t, table, index, 4); },
                         {table}, rng) < 1e-6);

    Tensor<double> scores = randn({3, 2, 4, 4}, rng, true);
    Tensor<double> mask({3, 4, 4});
    for (auto& v : mask.values()) v = rng.uniform() < 0.25 ? -2.0 : 0.0;
    REQUIRE(run_fd_check([&](Tape<double>* t) { return add_window_mask(t, scores, mask); },
                         {scores}, rng) < 1e-6);

    Tensor<double> big({1, 1, 2, 2});
    Tensor<double> hard({1, 2, 2}, std::vector<double>{0.0, -1e9, -1e9, 0.0});
    Tensor<double> masked = add_window_mask<double>(nullptr, big, hard);
    Tensor<double> probs = softmax_lastdim<double>(nullptr, masked);
    REQUIRE(probs.values()[0] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(probs.values()[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("transpose round trip and slice/concat inverse", "[core][property]") {
    Rng rng(derive_seed(11, "surgery"));
    Tensor<double> x = randn({2, 3, 5}, rng);
    Tensor<double> tt = transpose<double>(nullptr, transpose<double>(nullptr, x, 0, 2), 0, 2);
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(tt.values()[i] == x.values()[i]);

    Tensor<double> left = slice<double>(nullptr, x, 2, 0, 2);
    Tensor<double> right = slice<double>(nullptr, x, 2, 2, 3);
    Tensor<double> joined = concat<double>(nullptr, {left, right}, 2);
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(joined.values()[i] == x.values()[i]);

    REQUIRE_THROWS_AS(slice<double>(nullptr, x, 2, 4, 3), ShapeError);
    REQUIRE_THROWS_AS(slice<double>(nullptr, x, 7, 0, 1), ShapeError);
    REQUIRE_THROWS_AS(reshape<double>(nullptr, x, {7, 2}), ShapeError);
}

TEST_CASE("gradient accumulation sums per-use partials", "[core][property]") {
    Rng rng(derive_seed(12, "accum"));
    Tensor<double> x = randn({6}, rng, true);
    Tensor<double> c1 = randn({6}, rng);
    Tensor<double> c2 = randn({6}, rng);

    Tape<double> t1;
    Tensor<double> l1 = sum(&t1, mul(&t1, x, c1));
    t1.backward(l1);
    std::vector<double> g1(x.grad().begin(), x.grad().end());

    x.zero_grad();
    Tape<double> t2;
    Tensor<double> l2 = sum(&t2, mul(&t2, x, c2));
    t2.backward(l2);
    std::vector<double> g2(x.grad().begin(), x.grad().end());

    x.zero_grad();
    Tape<double> t3;
    Tensor<double> both = add(&t3, sum(&t3, mul(&t3, x, c1)), sum(&t3, mul(&t3, x, c2)));
    t3.backward(both);
    for (std::size_t i = 0; i < 6; ++i) REQUIRE(x.grad()[i] == g1[i] + g2[i]);
}

TEST_CASE("rng streams are deterministic and well ranged", "[core][rng]") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.bits() == b.bits());

    Rng u(derive_seed(13, "uniform"));
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
    }
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(u.below(7) < 7);
    }
    Rng tn(derive_seed(13, "trunc"));
    for (int i = 0; i < 1000; ++i) {
        const double v = tn.truncated_normal(0.0, 0.02);
        REQUIRE(std::abs(v) <= 0.04 + 1e-12);
    }

    REQUIRE(derive_seed(5, "a") != derive_seed(5, "b"));
    REQUIRE(derive_seed(5, "a") != derive_seed(6, "a"));

    Rng s1(derive_seed(14, "shuffle")), s2(derive_seed(14, "shuffle"));
    std::vector<int> v1{0, 1, 2, 3, 4, 5, 6, 7}, v2 = v1;
    s1.shuffle(v1);
    s2.shuffle(v2);
    REQUIRE(v1 == v2);
    std::vector<int> sorted = v1;
    std::sort(sorted.begin(), sorted.end());
    REQUIRE(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("normal moments are sane", "[core][rng]") {
    Rng rng(derive_seed(15, "moments"));
    double mean = 0.0, m2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        mean += v;
        m2 += v * v;
    }
    mean /= n;
    m2 /= n;
    REQUIRE(std::abs(mean) < 0.03);
    REQUIRE(std::abs(m2 - 1.0) < 0.05);
}
