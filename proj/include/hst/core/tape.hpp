#pragma once

#include <functional>
#include <vector>

#include "hst/core/tensor.hpp"

namespace hst {

// Reverse-mode gradient tape. Ops append one node per executed primitive in
// forward order; backward() replays the nodes once, in reverse, which is a
// valid reverse topological order of the recorded graph. A tensor consumed by
// k ops receives the sum of the k partials because every node accumulates
// into the shared grad buffer with +=.
//
// A tape is single-threaded: record on one thread, backward on the same one.
template <typename T>
class Tape {
  public:
    void record(std::function<void()> backward_fn) {
        nodes_.push_back(std::move(backward_fn));
    }

    std::size_t size() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

    // Seeds d(loss)/d(loss) = 1 and propagates through every recorded node.
    void backward(Tensor<T>& loss) {
        if (loss.size() != 1) {
            throw ContractError("backward() requires a scalar output, got " + shape_str(loss.shape()));
        }
        loss.grad()[0] += T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    }

  private:
    std::vector<std::function<void()>> nodes_;
};

// Convenience: should this op record a backward node?
template <typename T>
inline bool taping(const Tape<T>* tape, bool any_input_requires_grad) {
    return tape != nullptr && any_input_requires_grad;
}

}  // namespace hst
