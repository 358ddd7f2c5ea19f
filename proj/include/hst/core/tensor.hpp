#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hst/core/error.hpp"

namespace hst {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

// Dense row-major value buffer with an optional gradient slot of the same
// shape. Shared by value-semantic Tensor handles; the values are treated as
// immutable once an op has consumed the tensor, only `grad` accumulates.
template <typename T>
struct TensorStorage {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;  // empty until first accumulation
    bool requires_grad = false;

    void ensure_grad() {
        if (grad.empty()) grad.assign(values.size(), T(0));
    }
};

template <typename T>
class Tensor {
  public:
    using value_type = T;

    Tensor() : storage_(std::make_shared<TensorStorage<T>>()) {}

    explicit Tensor(Shape shape, bool requires_grad = false)
        : storage_(std::make_shared<TensorStorage<T>>()) {
        for (std::size_t d : shape) {
            if (d == 0) throw ShapeError("tensor extents must be >= 1, got " + shape_str(shape));
        }
        storage_->shape = std::move(shape);
        storage_->values.assign(numel(storage_->shape), T(0));
        storage_->requires_grad = requires_grad;
    }

    Tensor(Shape shape, std::vector<T> values, bool requires_grad = false)
        : Tensor(std::move(shape), requires_grad) {
        if (values.size() != storage_->values.size()) {
            throw ShapeError("value count " + std::to_string(values.size()) +
                             " does not match shape " + shape_str(storage_->shape));
        }
        storage_->values = std::move(values);
    }

    static Tensor scalar(T v, bool requires_grad = false) {
        return Tensor({1}, {v}, requires_grad);
    }

    static Tensor full(Shape shape, T v, bool requires_grad = false) {
        Tensor t(std::move(shape), requires_grad);
        std::fill(t.storage_->values.begin(), t.storage_->values.end(), v);
        return t;
    }

    const Shape& shape() const { return storage_->shape; }
    std::size_t rank() const { return storage_->shape.size(); }
    std::size_t extent(std::size_t axis) const { return storage_->shape.at(axis); }
    std::size_t size() const { return storage_->values.size(); }

    std::span<T> values() { return storage_->values; }
    std::span<const T> values() const { return storage_->values; }
    T item() const {
        if (size() != 1) throw ContractError("item() requires a scalar tensor, got " + shape_str(shape()));
        return storage_->values[0];
    }

    bool requires_grad() const { return storage_->requires_grad; }
    void set_requires_grad(bool rg) { storage_->requires_grad = rg; }

    bool has_grad() const { return !storage_->grad.empty(); }
    std::span<T> grad() {
        storage_->ensure_grad();
        return storage_->grad;
    }
    std::span<const T> grad() const {
        if (!has_grad()) throw ContractError("gradient not populated");
        return storage_->grad;
    }
    void zero_grad() {
        if (has_grad()) std::fill(storage_->grad.begin(), storage_->grad.end(), T(0));
    }

    // Identity of the underlying buffer; used by the tape for accumulation.
    const std::shared_ptr<TensorStorage<T>>& storage() const { return storage_; }

    // Deep copy (values only, detached from any tape).
    Tensor clone() const {
        Tensor t;
        t.storage_->shape = storage_->shape;
        t.storage_->values = storage_->values;
        t.storage_->requires_grad = storage_->requires_grad;
        return t;
    }

  private:
    std::shared_ptr<TensorStorage<T>> storage_;
};

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    }
}

}  // namespace hst
