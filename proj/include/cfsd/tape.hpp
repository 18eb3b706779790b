#pragma once
#include <functional>
#include <span>
#include <unordered_set>

#include "cfsd/tensor.hpp"

namespace cfsd {

// Reverse-mode tape. Ops execute eagerly and record a pull-back closure;
// backward() replays the closures in reverse program order, which fixes the
// gradient accumulation order and makes backward bitwise deterministic.
// Single-owner, single-threaded during a training step.
class Tape {
public:
    TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);

    TensorPtr add(const TensorPtr& a, const TensorPtr& b);
    TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
    TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
    TensorPtr relu(const TensorPtr& x);
    TensorPtr sigmoid(const TensorPtr& x);
    TensorPtr log(const TensorPtr& x);
    TensorPtr exp(const TensorPtr& x);
    TensorPtr scale(const TensorPtr& x, double c);

    // broadcast add of a length-n vector over every row of an m x n matrix
    TensorPtr add_rowvec(const TensorPtr& m, const TensorPtr& v);

    // Unit-normalizes a vector, or every row of a 2-D tensor independently.
    // Zero input norm is a degenerate-input error.
    TensorPtr l2_normalize(const TensorPtr& x);

    // Seeds d(loss)/d(loss) = 1 and pulls gradients back to every tensor the
    // tape touched. Grads of all touched tensors (leaves included) are zeroed
    // first, so each backward call yields fresh gradients.
    void backward(const TensorPtr& loss);

    // Record a custom node. `out` must already hold forward values; `pull`
    // adds into the operands' grads when invoked.
    void record(std::function<void()> pull) { nodes_.push_back(std::move(pull)); }
    void track(const TensorPtr& t);

    std::size_t node_count() const { return nodes_.size(); }

private:
    TensorPtr unary(const TensorPtr& x, const std::function<double(double)>& f,
                    const std::function<double(double, double)>& dfdx);

    std::vector<std::function<void()>> nodes_;
    std::vector<TensorPtr> tracked_;
    std::unordered_set<const Tensor*> seen_;
};

// max_i |g_analytic_i - g_fd_i| / max(1, |g_fd_i|) over every coordinate of
// every tensor in `params`, with central differences of step h as the
// reference. `f` must deterministically rebuild the loss graph on the given
// tape from the current parameter values.
double grad_check(const std::function<TensorPtr(Tape&)>& f, std::span<const TensorPtr> params,
                  double h);

}  // namespace cfsd
