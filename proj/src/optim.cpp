#include "cfsd/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cfsd {

double cosine_lr(std::size_t t, std::size_t total_steps, double lr_max, double lr_min) {
    if (total_steps < 1) throw std::invalid_argument("cosine_lr: total_steps must be >= 1");
    if (t > total_steps) throw std::invalid_argument("cosine_lr: t out of range");
    const double frac = static_cast<double>(t) / static_cast<double>(total_steps);
    return lr_min + (lr_max - lr_min) * (1.0 + std::cos(3.14159265358979323846 * frac)) / 2.0;
}

OptState::OptState(const AdamWConfig& c, const std::vector<TensorPtr>& params) : cfg(c) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const auto& p : params) {
        m.emplace_back(p->size(), 0.0);
        v.emplace_back(p->size(), 0.0);
    }
}

void adamw_step(std::vector<TensorPtr>& params, OptState& state) {
    if (params.size() != state.m.size())
        throw std::invalid_argument("adamw_step: state/parameter count mismatch");
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        if (params[pi]->size() != state.m[pi].size())
            throw std::invalid_argument("adamw_step: state/parameter shape mismatch");
        for (double g : params[pi]->grad)
            if (!std::isfinite(g))
                throw std::runtime_error("adamw_step: nonfinite gradient in parameter " +
                                         std::to_string(pi) + " at step " +
                                         std::to_string(state.t + 1) + ", step rejected");
    }

    const auto& c = state.cfg;
    const double lr = cosine_lr(state.t, c.total_steps, c.lr_max, c.lr_min);
    state.t += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi]->value;
        const auto& g = params[pi]->grad;
        auto& m = state.m[pi];
        auto& v = state.v[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= lr * (mhat / (std::sqrt(vhat) + c.eps) + c.weight_decay * p[i]);
        }
    }
}

}  // namespace cfsd
