#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hst/core/tape.hpp"
#include "hst/core/tensor.hpp"

// Reverse-mode primitives. Every op takes an optional tape; with a null tape
// (or when no input requires a gradient) it is a pure forward computation.
// The op set is the smallest closed one covering the model: add, mul, scale,
// matmul, linear, softmax, layer_norm, gelu, reshape, transpose, slice,
// concat, gather_rows, mean/sum reductions and the attention bias helpers.

namespace hst {

// ---------------------------------------------------------------------------
// Raw matmul kernels, C += op(A) * op(B). Row-major, j-innermost so the
// compiler can vectorize the contiguous stores.
// ---------------------------------------------------------------------------

// c[m x n] += a[m x k] * b[k x n]
template <typename T>
void mm_nn_acc(T* c, const T* a, const T* b, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        T* ci = c + i * n;
        const T* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const T aip = ai[p];
            const T* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

// c[m x k] += a[m x n] * b[k x n]^T
template <typename T>
void mm_nt_acc(T* c, const T* a, const T* b, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* ai = a + i * n;
        T* ci = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const T* bp = b + p * n;
            T acc = 0;
            for (std::size_t j = 0; j < n; ++j) acc += ai[j] * bp[j];
            ci[p] += acc;
        }
    }
}

// c[k x n] += a[m x k]^T * b[m x n]
template <typename T>
void mm_tn_acc(T* c, const T* a, const T* b, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* ai = a + i * k;
        const T* bi = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const T aip = ai[p];
            T* cp = c + p * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
        }
    }
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "add");
    Tensor<T> out(a.shape());
    auto ov = out.values();
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
    out.set_requires_grad(a.requires_grad() || b.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([as = a.storage(), bs = b.storage(), os = out.storage()] {
            const auto& go = os->grad;
            if (as->requires_grad) {
                as->ensure_grad();
                for (std::size_t i = 0; i < go.size(); ++i) as->grad[i] += go[i];
            }
            if (bs->requires_grad) {
                bs->ensure_grad();
                for (std::size_t i = 0; i < go.size(); ++i) bs->grad[i] += go[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "mul");
    Tensor<T> out(a.shape());
    auto ov = out.values();
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
    out.set_requires_grad(a.requires_grad() || b.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([as = a.storage(), bs = b.storage(), os = out.storage()] {
            const auto& go = os->grad;
            if (as->requires_grad) {
                as->ensure_grad();
                for (std::size_t i = 0; i < go.size(); ++i) as->grad[i] += go[i] * bs->values[i];
            }
            if (bs->requires_grad) {
                bs->ensure_grad();
                for (std::size_t i = 0; i < go.size(); ++i) bs->grad[i] += go[i] * as->values[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> scale(Tape<T>* tape, const Tensor<T>& x, T c) {
    Tensor<T> out(x.shape());
    auto ov = out.values();
    auto xv = x.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = c * xv[i];
    out.set_requires_grad(x.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([xs = x.storage(), os = out.storage(), c] {
            xs->ensure_grad();
            for (std::size_t i = 0; i < os->grad.size(); ++i) xs->grad[i] += c * os->grad[i];
        });
    }
    return out;
}

// x: [L..., S...], b: [S...] appended over the leading extents of x.
template <typename T>
Tensor<T> add_broadcast(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& b) {
    const std::size_t bs_n = b.size();
    if (bs_n == 0 || x.size() % bs_n != 0) {
        throw ShapeError("add_broadcast: " + shape_str(b.shape()) + " does not tile " +
                         shape_str(x.shape()));
    }
    Tensor<T> out(x.shape());
    auto ov = out.values();
    auto xv = x.values();
    auto bv = b.values();
    const std::size_t reps = x.size() / bs_n;
    for (std::size_t r = 0; r < reps; ++r) {
        const std::size_t base = r * bs_n;
        for (std::size_t i = 0; i < bs_n; ++i) ov[base + i] = xv[base + i] + bv[i];
    }
    out.set_requires_grad(x.requires_grad() || b.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([xs = x.storage(), bsp = b.storage(), os = out.storage(), reps, bs_n] {
            const auto& go = os->grad;
            if (xs->requires_grad) {
                xs->ensure_grad();
                for (std::size_t i = 0; i < go.size(); ++i) xs->grad[i] += go[i];
            }
            if (bsp->requires_grad) {
                bsp->ensure_grad();
                for (std::size_t r = 0; r < reps; ++r) {
                    const std::size_t base = r * bs_n;
                    for (std::size_t i = 0; i < bs_n; ++i) bsp->grad[i] += go[base + i];
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> gelu(Tape<T>* tape, const Tensor<T>& x) {
    static const T kInvSqrt2 = T(1) / std::sqrt(T(2));
    static const T kInvSqrt2Pi = T(1) / std::sqrt(T(2) * T(3.14159265358979323846L));
    Tensor<T> out(x.shape());
    auto ov = out.values();
    auto xv = x.values();
    for (std::size_t i = 0; i < ov.size(); ++i) {
        const T cdf = T(0.5) * (T(1) + std::erf(xv[i] * kInvSqrt2));
        ov[i] = xv[i] * cdf;
    }
    out.set_requires_grad(x.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([xs = x.storage(), os = out.storage()] {
            xs->ensure_grad();
            for (std::size_t i = 0; i < os->grad.size(); ++i) {
                const T v = xs->values[i];
                const T cdf = T(0.5) * (T(1) + std::erf(v * kInvSqrt2));
                const T pdf = kInvSqrt2Pi * std::exp(T(-0.5) * v * v);
                xs->grad[i] += os->grad[i] * (cdf + v * pdf);
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Matmul / linear
// ---------------------------------------------------------------------------

// a: [B..., m, k]; b: [k, n] (shared across the batch) or [B..., k, n].
template <typename T>
Tensor<T> matmul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() < 2 || b.rank() < 2) throw ShapeError("matmul: operands must have rank >= 2");
    const std::size_t m = a.shape()[a.rank() - 2];
    const std::size_t k = a.shape()[a.rank() - 1];
    const std::size_t kb = b.shape()[b.rank() - 2];
    const std::size_t n = b.shape()[b.rank() - 1];
    if (k != kb) {
        throw ShapeError("matmul: inner extents disagree, " + shape_str(a.shape()) + " * " +
                         shape_str(b.shape()));
    }
    const bool b_batched = b.rank() > 2;
    const std::size_t batch = a.size() / (m * k);
    if (b_batched && b.size() / (kb * n) != batch) {
        throw ShapeError("matmul: batch extents disagree, " + shape_str(a.shape()) + " * " +
                         shape_str(b.shape()));
    }
    Shape out_shape(a.shape().begin(), a.shape().end() - 1);
    out_shape.push_back(n);
    Tensor<T> out(out_shape);

    const T* ap = a.values().data();
    const T* bp = b.values().data();
    T* op = out.values().data();
    for (std::size_t g = 0; g < batch; ++g) {
        mm_nn_acc(op + g * m * n, ap + g * m * k, b_batched ? bp + g * k * n : bp, m, k, n);
    }

    out.set_requires_grad(a.requires_grad() || b.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([as = a.storage(), bsp = b.storage(), os = out.storage(), batch, m, k, n,
                      b_batched] {
            const T* go = os->grad.data();
            if (as->requires_grad) {
                as->ensure_grad();
                for (std::size_t g = 0; g < batch; ++g) {
                    // dA = dC * B^T
                    mm_nt_acc(as->grad.data() + g * m * k, go + g * m * n,
                              b_batched ? bsp->values.data() + g * k * n : bsp->values.data(), m,
                              n, k);
                }
            }
            if (bsp->requires_grad) {
                bsp->ensure_grad();
                for (std::size_t g = 0; g < batch; ++g) {
                    // dB = A^T * dC, summed over the batch when B is shared
                    mm_tn_acc(bsp->grad.data() + (b_batched ? g * k * n : 0),
                              as->values.data() + g * m * k, go + g * m * n, m, k, n);
                }
            }
        });
    }
    return out;
}

// Affine map over the last axis: out = x * w + bias, bias broadcast over the
// leading extents. Pass an empty bias tensor for a pure projection.
template <typename T>
Tensor<T> linear(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
    if (w.rank() != 2) throw ShapeError("linear: weight must be 2-d, got " + shape_str(w.shape()));
    const std::size_t in = w.shape()[0];
    const std::size_t out_dim = w.shape()[1];
    if (x.rank() < 1 || x.shape().back() != in) {
        throw ShapeError("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                         shape_str(w.shape()));
    }
    const bool has_bias = bias.size() > 0;
    if (has_bias && (bias.rank() != 1 || bias.shape()[0] != out_dim)) {
        throw ShapeError("linear: bias " + shape_str(bias.shape()) + " must be [" +
                         std::to_string(out_dim) + "]");
    }
    const std::size_t rows = x.size() / in;
    Shape out_shape(x.shape());
    out_shape.back() = out_dim;
    Tensor<T> out(out_shape);
    T* op = out.values().data();
    if (has_bias) {
        auto bv = bias.values();
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < out_dim; ++j) op[r * out_dim + j] = bv[j];
        }
    }
    mm_nn_acc(op, x.values().data(), w.values().data(), rows, in, out_dim);

    out.set_requires_grad(x.requires_grad() || w.requires_grad() ||
                          (has_bias && bias.requires_grad()));
    if (taping(tape, out.requires_grad())) {
        tape->record([xs = x.storage(), ws = w.storage(), bs = bias.storage(), os = out.storage(),
                      rows, in, out_dim, has_bias] {
            const T* go = os->grad.data();
            if (xs->requires_grad) {
                xs->ensure_grad();
                mm_nt_acc(xs->grad.data(), go, ws->values.data(), rows, out_dim, in);
            }
            if (ws->requires_grad) {
                ws->ensure_grad();
                mm_tn_acc(ws->grad.data(), xs->values.data(), go, rows, in, out_dim);
            }
            if (has_bias && bs->requires_grad) {
                bs->ensure_grad();
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t j = 0; j < out_dim; ++j) bs->grad[j] += go[r * out_dim + j];
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Normalization / softmax
// ---------------------------------------------------------------------------

// Max-subtracted softmax over the last axis.
template <typename T>
Tensor<T> softmax_lastdim(Tape<T>* tape, const Tensor<T>& x) {
    if (x.rank() < 1) throw ShapeError("softmax: rank >= 1 required");
    const std::size_t n = x.shape().back();
    const std::size_t rows = x.size() / n;
    Tensor<T> out(x.shape());
    auto xv = x.values();
    auto ov = out.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* xr = xv.data() + r * n;
        T* orow = ov.data() + r * n;
        T mx = xr[0];
        for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, xr[i]);
        T denom = 0;
        for (std::size_t i = 0; i < n; ++i) {
            orow[i] = std::exp(xr[i] - mx);
            denom += orow[i];
        }
        const T inv = T(1) / denom;
        for (std::size_t i = 0; i < n; ++i) orow[i] *= inv;
    }
    out.set_requires_grad(x.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([xs = x.storage(), os = out.storage(), rows, n] {
            xs->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r) {
                const T* y = os->values.data() + r * n;
                const T* gy = os->grad.data() + r * n;
                T* gx = xs->grad.data() + r * n;
                T dot = 0;
                for (std::size_t i = 0; i < n; ++i) dot += gy[i] * y[i];
                for (std::size_t i = 0; i < n; ++i) gx[i] += y[i] * (gy[i] - dot);
            }
        });
    }
    return out;
}

// Per-slice normalization over the last axis with learnable gamma/beta.
template <typename T>
Tensor<T> layer_norm(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps) {
    if (eps <= T(0)) throw ContractError("layer_norm: eps must be > 0");
    const std::size_t c = x.shape().back();
    if (gamma.size() != c || beta.size() != c) {
        throw ShapeError("layer_norm: gamma/beta must have extent " + std::to_string(c));
    }
    const std::size_t rows = x.size() / c;
    Tensor<T> out(x.shape());
    std::vector<T> inv_std(rows);
    std::vector<T> mean_v(rows);
    auto xv = x.values();
    auto ov = out.values();
    auto gv = gamma.values();
    auto bv = beta.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* xr = xv.data() + r * c;
        T mu = 0;
        for (std::size_t i = 0; i < c; ++i) mu += xr[i];
        mu /= T(c);
        T var = 0;
        for (std::size_t i = 0; i < c; ++i) {
            const T d = xr[i] - mu;
            var += d * d;
        }
        var /= T(c);
        const T istd = T(1) / std::sqrt(var + eps);
        mean_v[r] = mu;
        inv_std[r] = istd;
        T* orow = ov.data() + r * c;
        for (std::size_t i = 0; i < c; ++i) orow[i] = gv[i] * (xr[i] - mu) * istd + bv[i];
    }
    out.set_requires_grad(x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([xs = x.storage(), gs = gamma.storage(), bs = beta.storage(),
                      os = out.storage(), rows, c, mean_v = std::move(mean_v),
                      inv_std = std::move(inv_std)] {
            for (std::size_t r = 0; r < rows; ++r) {
                const T* xr = xs->values.data() + r * c;
                const T* gy = os->grad.data() + r * c;
                const T mu = mean_v[r];
                const T istd = inv_std[r];
                if (gs->requires_grad) {
                    gs->ensure_grad();
                    for (std::size_t i = 0; i < c; ++i)
                        gs->grad[i] += gy[i] * (xr[i] - mu) * istd;
                }
                if (bs->requires_grad) {
                    bs->ensure_grad();
                    for (std::size_t i = 0; i < c; ++i) bs->grad[i] += gy[i];
                }
                if (xs->requires_grad) {
                    xs->ensure_grad();
                    T* gx = xs->grad.data() + r * c;
                    // dxhat_i = gy_i * gamma_i;
                    // dx = istd * (dxhat - mean(dxhat) - xhat * mean(dxhat .* xhat))
                    T sum_dxhat = 0;
                    T sum_dxhat_xhat = 0;
                    for (std::size_t i = 0; i < c; ++i) {
                        const T xhat = (xr[i] - mu) * istd;
                        const T dxhat = gy[i] * gs->values[i];
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += dxhat * xhat;
                    }
                    const T inv_c = T(1) / T(c);
                    for (std::size_t i = 0; i < c; ++i) {
                        const T xhat = (xr[i] - mu) * istd;
                        const T dxhat = gy[i] * gs->values[i];
                        gx[i] += istd * (dxhat - sum_dxhat * inv_c - xhat * sum_dxhat_xhat * inv_c);
                    }
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shape surgery
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> reshape(Tape<T>* tape, const Tensor<T>& x, Shape new_shape) {
    if (numel(new_shape) != x.size()) {
        throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                         shape_str(new_shape));
    }
    Tensor<T> out(std::move(new_shape));
    std::copy(x.values().begin(), x.values().end(), out.values().begin());
    out.set_requires_grad(x.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([xs = x.storage(), os = out.storage()] {
            xs->ensure_grad();
            for (std::size_t i = 0; i < os->grad.size(); ++i) xs->grad[i] += os->grad[i];
        });
    }
    return out;
}

namespace detail {

inline std::vector<std::size_t> row_major_strides(const Shape& shape) {
    std::vector<std::size_t> s(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
    return s;
}

// Copies src into dst with axes a and b swapped; src has shape `shape`.
template <typename T>
void transpose_copy(T* dst, const T* src, const Shape& shape, std::size_t a, std::size_t b) {
    const auto in_strides = row_major_strides(shape);
    Shape out_shape(shape);
    std::swap(out_shape[a], out_shape[b]);
    const auto out_strides = row_major_strides(out_shape);
    const std::size_t rank = shape.size();
    const std::size_t total = numel(shape);
    std::vector<std::size_t> coord(rank, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        std::size_t dst_idx = 0;
        for (std::size_t d = 0; d < rank; ++d) {
            coord[d] = rem / in_strides[d];
            rem %= in_strides[d];
        }
        std::swap(coord[a], coord[b]);
        for (std::size_t d = 0; d < rank; ++d) dst_idx += coord[d] * out_strides[d];
        dst[dst_idx] = src[flat];
    }
}

}  // namespace detail

template <typename T>
Tensor<T> transpose(Tape<T>* tape, const Tensor<T>& x, std::size_t axis_a, std::size_t axis_b) {
    if (axis_a >= x.rank() || axis_b >= x.rank()) throw ShapeError("transpose: axis out of range");
    Shape out_shape(x.shape());
    std::swap(out_shape[axis_a], out_shape[axis_b]);
    Tensor<T> out(out_shape);
    detail::transpose_copy(out.values().data(), x.values().data(), x.shape(), axis_a, axis_b);
    out.set_requires_grad(x.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([xs = x.storage(), os = out.storage(), out_shape, axis_a, axis_b] {
            xs->ensure_grad();
            std::vector<T> gin(xs->grad.size());
            detail::transpose_copy(gin.data(), os->grad.data(), out_shape, axis_a, axis_b);
            for (std::size_t i = 0; i < gin.size(); ++i) xs->grad[i] += gin[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> slice(Tape<T>* tape, const Tensor<T>& x, std::size_t axis, std::size_t start,
                std::size_t len) {
    if (axis >= x.rank()) throw ShapeError("slice: axis out of range");
    if (start + len > x.shape()[axis] || len == 0) {
        throw ShapeError("slice: range [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") exceeds extent " +
                         std::to_string(x.shape()[axis]));
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= x.shape()[d];
    for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.shape()[d];
    Shape out_shape(x.shape());
    out_shape[axis] = len;
    Tensor<T> out(out_shape);
    const std::size_t ext = x.shape()[axis];
    auto xv = x.values();
    auto ov = out.values();
    for (std::size_t o = 0; o < outer; ++o) {
        const T* src = xv.data() + (o * ext + start) * inner;
        T* dst = ov.data() + o * len * inner;
        std::copy(src, src + len * inner, dst);
    }
    out.set_requires_grad(x.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([xs = x.storage(), os = out.storage(), outer, inner, ext, start, len] {
            xs->ensure_grad();
            for (std::size_t o = 0; o < outer; ++o) {
                T* dst = xs->grad.data() + (o * ext + start) * inner;
                const T* src = os->grad.data() + o * len * inner;
                for (std::size_t i = 0; i < len * inner; ++i) dst[i] += src[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> concat(Tape<T>* tape, const std::vector<Tensor<T>>& xs, std::size_t axis) {
    if (xs.empty()) throw ShapeError("concat: need at least one input");
    const Shape& ref = xs[0].shape();
    if (axis >= ref.size()) throw ShapeError("concat: axis out of range");
    std::size_t total_ext = 0;
    bool rg = false;
    for (const auto& x : xs) {
        if (x.rank() != ref.size()) throw ShapeError("concat: rank mismatch");
        for (std::size_t d = 0; d < ref.size(); ++d) {
            if (d != axis && x.shape()[d] != ref[d]) {
                throw ShapeError("concat: shape mismatch on non-concat axis");
            }
        }
        total_ext += x.shape()[axis];
        rg = rg || x.requires_grad();
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= ref[d];
    for (std::size_t d = axis + 1; d < ref.size(); ++d) inner *= ref[d];
    Shape out_shape(ref);
    out_shape[axis] = total_ext;
    Tensor<T> out(out_shape);
    auto ov = out.values();
    std::size_t off = 0;
    for (const auto& x : xs) {
        const std::size_t ext = x.shape()[axis];
        auto xv = x.values();
        for (std::size_t o = 0; o < outer; ++o) {
            std::copy(xv.data() + o * ext * inner, xv.data() + (o + 1) * ext * inner,
                      ov.data() + (o * total_ext + off) * inner);
        }
        off += ext;
    }
    out.set_requires_grad(rg);
    if (taping(tape, rg)) {
        std::vector<std::shared_ptr<TensorStorage<T>>> stores;
        std::vector<std::size_t> exts;
        for (const auto& x : xs) {
            stores.push_back(x.storage());
            exts.push_back(x.shape()[axis]);
        }
        tape->record([stores = std::move(stores), exts = std::move(exts), os = out.storage(),
                      outer, inner, total_ext] {
            std::size_t off = 0;
            for (std::size_t t = 0; t < stores.size(); ++t) {
                const std::size_t ext = exts[t];
                if (stores[t]->requires_grad) {
                    stores[t]->ensure_grad();
                    for (std::size_t o = 0; o < outer; ++o) {
                        const T* src = os->grad.data() + (o * total_ext + off) * inner;
                        T* dst = stores[t]->grad.data() + o * ext * inner;
                        for (std::size_t i = 0; i < ext * inner; ++i) dst[i] += src[i];
                    }
                }
                off += ext;
            }
        });
    }
    return out;
}

// Row gather: x viewed as [R, rowsize]; out[r] = x[idx[r]]. Inverse-free
// backward (scatter-add), so it covers permutations and duplicating gathers.
template <typename T>
Tensor<T> gather_rows(Tape<T>* tape, const Tensor<T>& x, const std::vector<std::size_t>& idx) {
    if (x.rank() < 1) throw ShapeError("gather_rows: rank >= 1 required");
    const std::size_t rows = x.shape()[0];
    const std::size_t rowsize = x.size() / rows;
    for (std::size_t r : idx) {
        if (r >= rows) throw ShapeError("gather_rows: index out of range");
    }
    Shape out_shape(x.shape());
    out_shape[0] = idx.size();
    Tensor<T> out(out_shape);
    auto xv = x.values();
    auto ov = out.values();
    for (std::size_t r = 0; r < idx.size(); ++r) {
        std::copy(xv.data() + idx[r] * rowsize, xv.data() + (idx[r] + 1) * rowsize,
                  ov.data() + r * rowsize);
    }
    out.set_requires_grad(x.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([xs = x.storage(), os = out.storage(), idx, rowsize] {
            xs->ensure_grad();
            for (std::size_t r = 0; r < idx.size(); ++r) {
                const T* src = os->grad.data() + r * rowsize;
                T* dst = xs->grad.data() + idx[r] * rowsize;
                for (std::size_t i = 0; i < rowsize; ++i) dst[i] += src[i];
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> sum(Tape<T>* tape, const Tensor<T>& x) {
    T acc = 0;
    for (T v : x.values()) acc += v;
    Tensor<T> out = Tensor<T>::scalar(acc);
    out.set_requires_grad(x.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([xs = x.storage(), os = out.storage()] {
            xs->ensure_grad();
            const T g = os->grad[0];
            for (auto& gi : xs->grad) gi += g;
        });
    }
    return out;
}

template <typename T>
Tensor<T> mean(Tape<T>* tape, const Tensor<T>& x) {
    const T inv = T(1) / T(x.size());
    T acc = 0;
    for (T v : x.values()) acc += v;
    Tensor<T> out = Tensor<T>::scalar(acc * inv);
    out.set_requires_grad(x.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([xs = x.storage(), os = out.storage(), inv] {
            xs->ensure_grad();
            const T g = os->grad[0] * inv;
            for (auto& gi : xs->grad) gi += g;
        });
    }
    return out;
}

// Mean over axis 0 of a 2-d tensor: [R, C] -> [C].
template <typename T>
Tensor<T> mean_rows(Tape<T>* tape, const Tensor<T>& x) {
    if (x.rank() != 2) throw ShapeError("mean_rows: 2-d input required, got " + shape_str(x.shape()));
    const std::size_t r = x.shape()[0];
    const std::size_t c = x.shape()[1];
    Tensor<T> out({c});
    auto xv = x.values();
    auto ov = out.values();
    const T inv = T(1) / T(r);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) ov[j] += xv[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) ov[j] *= inv;
    out.set_requires_grad(x.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([xs = x.storage(), os = out.storage(), r, c, inv] {
            xs->ensure_grad();
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) xs->grad[i * c + j] += os->grad[j] * inv;
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Attention-specific helpers
// ---------------------------------------------------------------------------

// Materializes the additive bias matrix from a learnable table of shared
// offset parameters: out[h, i, j] = table[h, index[i*n + j]].
template <typename T>
Tensor<T> rel_pos_bias(Tape<T>* tape, const Tensor<T>& table,
                       const std::vector<std::size_t>& index, std::size_t n) {
    if (table.rank() != 2) throw ShapeError("rel_pos_bias: table must be [heads, entries]");
    if (index.size() != n * n) throw ShapeError("rel_pos_bias: index must cover n*n token pairs");
    const std::size_t heads = table.shape()[0];
    const std::size_t entries = table.shape()[1];
    for (std::size_t e : index) {
        if (e >= entries) throw ShapeError("rel_pos_bias: index out of table range");
    }
    Tensor<T> out({heads, n, n});
    auto tv = table.values();
    auto ov = out.values();
    for (std::size_t h = 0; h < heads; ++h) {
        const T* th = tv.data() + h * entries;
        T* oh = ov.data() + h * n * n;
        for (std::size_t ij = 0; ij < n * n; ++ij) oh[ij] = th[index[ij]];
    }
    out.set_requires_grad(table.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([ts = table.storage(), os = out.storage(), index, heads, entries, n] {
            ts->ensure_grad();
            for (std::size_t h = 0; h < heads; ++h) {
                const T* gh = os->grad.data() + h * n * n;
                T* th = ts->grad.data() + h * entries;
                for (std::size_t ij = 0; ij < n * n; ++ij) th[index[ij]] += gh[ij];
            }
        });
    }
    return out;
}

// scores: [W, H, n, n]; mask: [W, n, n], constant (no gradient path).
template <typename T>
Tensor<T> add_window_mask(Tape<T>* tape, const Tensor<T>& scores, const Tensor<T>& mask) {
    if (scores.rank() != 4) throw ShapeError("add_window_mask: scores must be [W, H, n, n]");
    const std::size_t w = scores.shape()[0];
    const std::size_t h = scores.shape()[1];
    const std::size_t n2 = scores.shape()[2] * scores.shape()[3];
    if (mask.size() != w * n2) {
        throw ShapeError("add_window_mask: mask " + shape_str(mask.shape()) +
                         " does not match scores " + shape_str(scores.shape()));
    }
    Tensor<T> out(scores.shape());
    auto sv = scores.values();
    auto mv = mask.values();
    auto ov = out.values();
    for (std::size_t wi = 0; wi < w; ++wi) {
        const T* mw = mv.data() + wi * n2;
        for (std::size_t hi = 0; hi < h; ++hi) {
            const std::size_t base = (wi * h + hi) * n2;
            for (std::size_t ij = 0; ij < n2; ++ij) ov[base + ij] = sv[base + ij] + mw[ij];
        }
    }
    out.set_requires_grad(scores.requires_grad());
    if (taping(tape, out.requires_grad())) {
        tape->record([ss = scores.storage(), os = out.storage()] {
            ss->ensure_grad();
            for (std::size_t i = 0; i < os->grad.size(); ++i) ss->grad[i] += os->grad[i];
        });
    }
    return out;
}

}  // namespace hst
