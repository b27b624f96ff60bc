#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ecan/banks.hpp"
#include "ecan/tensor.hpp"

namespace ecan {

// Detached per-batch numbers for logging; `total` always equals
// div + lambda*ncl + beta*scl.
struct LossBreakdown {
  double ncl = 0.0;
  double scl = 0.0;
  double div = 0.0;
  double total = 0.0;
  double lambda = 0.0;
  double beta = 0.0;
};

struct HyperParams {
  double tau = 0.05;          // contrastive temperature
  std::size_t k = 1;          // nearest neighbors per anchor
  double lambda = 1.0;        // weight on the neighborhood term
  double beta = 0.3;          // weight on the pseudo-label term
  std::size_t batch_size = 32;
  std::size_t epochs = 30;            // adaptation epochs
  std::size_t pretrain_epochs = 100;
  double lr_pretrain = 0.01;
  double lr_adapt = 0.001;
  double momentum = 0.9;
  double label_smoothing = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Scalar loss plus its detached breakdown, produced together so the caller
/// can backprop through `value` and log the parts.
struct TotalLoss {
  Tensor value;
  LossBreakdown breakdown;
};

/// Neighborhood contrastive term: each batch anchor attracts its k nearest
/// bank rows against all other bank rows (anchor's own row excluded from the
/// denominator), temperature tau. Mean over batch anchors. Gradient flows
/// through batch_features only; the bank is a constant.
Tensor ncl_loss(Tape& tape, const Tensor& batch_features,
                const std::vector<std::size_t>& batch_indices,
                const FeatureBank& bank, double tau, std::size_t k);

/// Pseudo-label contrastive term: positives are the bank rows whose argmax
/// score matches the anchor's, each anchor's sum scaled by 1/|positives|;
/// anchors with no positives contribute 0. Mean over batch anchors.
Tensor scl_loss(Tape& tape, const Tensor& batch_features,
                const std::vector<std::size_t>& batch_indices,
                const FeatureBank& feature_bank, const ScoreBank& score_bank,
                double tau);

/// Prediction-balance term: sum_c pbar_c * log(C * pbar_c) over the batch
/// column-mean pbar. Zero iff pbar is uniform.
Tensor div_loss(Tape& tape, const Tensor& batch_probs);

/// total = div + lambda*ncl + beta*scl, with the detached breakdown.
TotalLoss total_loss(Tape& tape, const Tensor& ncl, const Tensor& scl,
                     const Tensor& div, double lambda, double beta);

/// Smoothed cross-entropy: target mass 1-epsilon on the true class and
/// epsilon/(C-1) spread over the rest; mean over the batch.
Tensor ce_label_smoothing(Tape& tape, const Tensor& probs,
                          const std::vector<int>& labels, double epsilon);

}  // namespace ecan
