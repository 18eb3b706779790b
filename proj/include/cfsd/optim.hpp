#pragma once
#include <cstddef>
#include <vector>

#include "cfsd/tensor.hpp"

namespace cfsd {

// lr_min + (lr_max - lr_min) * (1 + cos(pi t / T)) / 2
double cosine_lr(std::size_t t, std::size_t total_steps, double lr_max, double lr_min);

struct AdamWConfig {
    double lr_max = 5e-4;
    double lr_min = 1e-5;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t total_steps = 1;
};

// Decoupled-weight-decay adaptive optimizer state. One instance per training
// run; mutated single-threaded.
struct OptState {
    AdamWConfig cfg;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t t = 0;

    OptState() = default;
    OptState(const AdamWConfig& c, const std::vector<TensorPtr>& params);
};

// One AdamW step, reading gradients from params[i]->grad. Weight decay is
// decoupled (applied to the parameter directly, never entering m/v). Throws
// on nonfinite gradients, leaving params and state untouched.
void adamw_step(std::vector<TensorPtr>& params, OptState& state);

}  // namespace cfsd
