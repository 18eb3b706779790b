#pragma once
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfsd {

// Dense row-major tensor of 64-bit floats with a gradient slot of the same
// shape. Values and gradients live side by side so a parameter tensor can be
// reused across training steps while tapes write into its gradient.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        value.assign(count(shape), 0.0);
        grad.assign(value.size(), 0.0);
    }

    static std::size_t count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t e : s) n *= e;
        return n;
    }

    std::size_t size() const { return value.size(); }
    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 1 : shape[0]) : shape[1]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
};

using TensorPtr = std::shared_ptr<Tensor>;

inline TensorPtr make_tensor(std::vector<std::size_t> shape) {
    return std::make_shared<Tensor>(std::move(shape));
}

inline TensorPtr make_tensor(std::vector<std::size_t> shape, std::vector<double> data) {
    auto t = std::make_shared<Tensor>(std::move(shape));
    if (data.size() != t->size())
        throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                    " != shape count " + std::to_string(t->size()));
    t->value = std::move(data);
    return t;
}

inline TensorPtr make_scalar(double v) { return make_tensor({1}, {v}); }

}  // namespace cfsd
