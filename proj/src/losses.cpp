#include "cfsd/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace cfsd {

namespace {
constexpr double kScoreClamp = 1e-12;
constexpr double kNormGuard = 1e-30;
}  // namespace

LossGrad ce_loss(std::span<const double> scores, std::span<const int> labels) {
    const std::size_t n = scores.size();
    if (n == 0) throw std::invalid_argument("ce_loss: empty batch");
    if (labels.size() != n) throw std::invalid_argument("ce_loss: scores/labels length mismatch");
    LossGrad out;
    out.grad.assign(n, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::min(std::max(scores[i], kScoreClamp), 1.0 - kScoreClamp);
        const double y = labels[i] ? 1.0 : 0.0;
        acc += y * std::log(s) + (1.0 - y) * std::log(1.0 - s);
        out.grad[i] = (-y / s + (1.0 - y) / (1.0 - s)) / static_cast<double>(n);
    }
    out.value = -acc / static_cast<double>(n);
    return out;
}

LossGrad supcon_loss(std::span<const double> embeddings, std::size_t n, std::size_t d,
                     std::span<const int> labels, double beta, SupconNorm norm) {
    if (beta <= 0.0) throw std::invalid_argument("supcon_loss: temperature must be positive");
    if (n < 2) throw std::invalid_argument("supcon_loss: need at least 2 samples");
    if (embeddings.size() != n * d || labels.size() != n)
        throw std::invalid_argument("supcon_loss: shape mismatch");

    // row-normalize
    std::vector<double> zh(n * d);
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += embeddings[i * d + j] * embeddings[i * d + j];
        norms[i] = std::max(std::sqrt(s), kNormGuard);
        for (std::size_t j = 0; j < d; ++j) zh[i * d + j] = embeddings[i * d + j] / norms[i];
    }

    // pairwise similarities / beta
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < n; ++l) {
            if (l == i) continue;
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += zh[i * d + j] * zh[l * d + j];
            a[i * n + l] = dot / beta;
        }

    double loss = 0.0;
    std::vector<double> ga(n * n, 0.0);  // d(loss)/d(a_il)
    std::vector<double> softmax(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t npos = 0;
        for (std::size_t l = 0; l < n; ++l)
            if (l != i && labels[l] == labels[i]) ++npos;
        if (npos == 0) continue;  // zero-positive anchors contribute nothing

        // log-sum-exp over l != i with max subtraction
        double mx = -1e300;
        for (std::size_t l = 0; l < n; ++l)
            if (l != i) mx = std::max(mx, a[i * n + l]);
        double denom = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            if (l == i) continue;
            softmax[l] = std::exp(a[i * n + l] - mx);
            denom += softmax[l];
        }
        const double lse = mx + std::log(denom);

        const double w = norm == SupconNorm::kPaper ? 1.0 / static_cast<double>(n - 1)
                                                    : 1.0 / static_cast<double>(npos);
        for (std::size_t l = 0; l < n; ++l) {
            if (l == i) continue;
            if (labels[l] == labels[i]) {
                loss += w * (lse - a[i * n + l]);
                ga[i * n + l] -= w;
            }
            ga[i * n + l] += w * static_cast<double>(npos) * (softmax[l] / denom);
        }
    }

    // a_il = zh_i . zh_l / beta, and a is used for both (i,l) and (l,i) roles
    std::vector<double> gzh(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < n; ++l) {
            if (l == i) continue;
            const double g = (ga[i * n + l] + ga[l * n + i]) / beta;
            if (g == 0.0) continue;
            for (std::size_t j = 0; j < d; ++j) gzh[i * d + j] += g * zh[l * d + j];
        }

    // through the row normalization: (I - zh zh^T)/||z||
    LossGrad out;
    out.value = loss;
    out.grad.assign(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += gzh[i * d + j] * zh[i * d + j];
        for (std::size_t j = 0; j < d; ++j)
            out.grad[i * d + j] = (gzh[i * d + j] - dot * zh[i * d + j]) / norms[i];
    }
    return out;
}

TensorPtr ce_loss_node(Tape& tape, const TensorPtr& scores, std::vector<int> labels) {
    auto res = ce_loss(scores->value, labels);
    auto out = make_scalar(res.value);
    tape.track(scores);
    tape.track(out);
    tape.record([scores, out, grad = std::move(res.grad)] {
        for (std::size_t i = 0; i < grad.size(); ++i) scores->grad[i] += out->grad[0] * grad[i];
    });
    return out;
}

TensorPtr supcon_loss_node(Tape& tape, const TensorPtr& embeddings, std::vector<int> labels,
                           double beta, SupconNorm norm) {
    const std::size_t n = embeddings->rows();
    const std::size_t d = embeddings->shape.size() == 2 ? embeddings->shape[1] : 1;
    auto res = supcon_loss(embeddings->value, n, d, labels, beta, norm);
    auto out = make_scalar(res.value);
    tape.track(embeddings);
    tape.track(out);
    tape.record([embeddings, out, grad = std::move(res.grad)] {
        for (std::size_t i = 0; i < grad.size(); ++i) embeddings->grad[i] += out->grad[0] * grad[i];
    });
    return out;
}

TensorPtr combined_loss_node(Tape& tape, const TensorPtr& scores, const TensorPtr& embeddings,
                             const std::vector<int>& labels, double lambda, double beta,
                             SupconNorm norm) {
    if (lambda < 0.0) throw std::invalid_argument("combined_loss: lambda must be >= 0");
    auto ce = ce_loss_node(tape, scores, labels);
    if (lambda == 0.0) return ce;
    auto sc = supcon_loss_node(tape, embeddings, labels, beta, norm);
    return tape.add(ce, tape.scale(sc, lambda));
}

}  // namespace cfsd
