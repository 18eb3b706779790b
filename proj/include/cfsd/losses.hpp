#pragma once
#include <span>
#include <vector>

#include "cfsd/tape.hpp"

namespace cfsd {

// Positive-set normalization of the supervised contrastive loss: `kPaper`
// divides every anchor's positive sum by (N-1) as printed in the source
// formulation; `kPositives` divides by the anchor's own positive count.
enum class SupconNorm { kPaper, kPositives };

struct LossGrad {
    double value = 0.0;
    std::vector<double> grad;
};

// Mean binary cross-entropy over the batch, scores clamped to
// [1e-12, 1-1e-12] before the logs. grad is d(loss)/d(score_i).
LossGrad ce_loss(std::span<const double> scores, std::span<const int> labels);

// Supervised contrastive loss with temperature beta. Embeddings (n x d,
// row-major) are L2-normalized internally; anchors with no same-class
// partner contribute 0. grad is d(loss)/d(embedding), n x d row-major.
LossGrad supcon_loss(std::span<const double> embeddings, std::size_t n, std::size_t d,
                     std::span<const int> labels, double beta,
                     SupconNorm norm = SupconNorm::kPaper);

// Tape-recorded versions: forward value as a scalar tensor, analytic
// gradients pulled into the argument tensors on backward.
TensorPtr ce_loss_node(Tape& tape, const TensorPtr& scores, std::vector<int> labels);
TensorPtr supcon_loss_node(Tape& tape, const TensorPtr& embeddings, std::vector<int> labels,
                           double beta, SupconNorm norm = SupconNorm::kPaper);

// L_CE + lambda * L_SC on one batch. With lambda == 0 the SC term is not
// evaluated at all, so the optimization path is exactly the CE-only one.
TensorPtr combined_loss_node(Tape& tape, const TensorPtr& scores, const TensorPtr& embeddings,
                             const std::vector<int>& labels, double lambda, double beta,
                             SupconNorm norm = SupconNorm::kPaper);

}  // namespace cfsd
