#include "ecan/losses.hpp"

#include <string>

#include "ecan/errors.hpp"

namespace ecan {

void HyperParams::validate() const {
  if (tau <= 0.0) throw ConfigError("hyperparams: tau must be positive");
  if (k < 1) throw ConfigError("hyperparams: k must be at least 1");
  if (lambda < 0.0 || beta < 0.0) {
    throw ConfigError("hyperparams: lambda and beta must be nonnegative");
  }
  if (batch_size < 1) throw ConfigError("hyperparams: batch_size must be positive");
  if (epochs < 1) throw ConfigError("hyperparams: epochs must be positive");
  if (pretrain_epochs < 1) {
    throw ConfigError("hyperparams: pretrain_epochs must be positive");
  }
  if (lr_pretrain <= 0.0 || lr_adapt <= 0.0) {
    throw ConfigError("hyperparams: learning rates must be positive");
  }
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ConfigError("hyperparams: momentum must be in [0, 1)");
  }
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
    throw ConfigError("hyperparams: label_smoothing must be in [0, 1)");
  }
}

namespace {

constexpr double kLogFloor = 1e-12;

// Shared head of both contrastive terms: live anchors against the constant
// bank. Returns similarities/tau [n x N] and the log of the per-anchor
// denominator (all bank rows except the anchor's own) [n].
struct ContrastiveHead {
  Tensor scaled;     // [n x N]
  Tensor log_denom;  // [n]
};

ContrastiveHead contrastive_head(Tape& tape, const Tensor& batch_features,
                                 const std::vector<std::size_t>& batch_indices,
                                 const FeatureBank& bank, double tau) {
  const std::size_t big_n = bank.size();
  if (big_n < 2) {
    throw ConfigError("contrastive loss: need at least 2 bank rows");
  }
  if (tau <= 0.0) throw ConfigError("contrastive loss: tau must be positive");
  if (batch_features.rank() != 2) {
    throw DimensionError("contrastive loss: batch features must be rank 2");
  }
  const std::size_t n = batch_features.rows();
  if (n == 0) throw DimensionError("contrastive loss: empty batch");
  if (n != batch_indices.size()) {
    throw DimensionError("contrastive loss: one bank index per batch row");
  }
  if (batch_features.cols() != bank.dim()) {
    throw DimensionError("contrastive loss: feature width != bank width");
  }
  for (std::size_t idx : batch_indices) {
    if (idx >= big_n) throw IndexError("contrastive loss: bank index out of range");
  }

  const Tensor fhat = tape.l2_normalize_rows(batch_features);
  const Tensor bank_const = Tensor::matrix(big_n, bank.dim(), bank.rows.v);
  const Tensor sims = tape.matmul(fhat, tape.transpose(bank_const));
  const Tensor scaled = tape.scale(sims, 1.0 / tau);
  const Tensor expd = tape.exp(scaled);

  // Zero out each anchor's own bank column before the denominator sum.
  std::vector<double> mask(n * big_n, 1.0);
  for (std::size_t r = 0; r < n; ++r) mask[r * big_n + batch_indices[r]] = 0.0;
  const Tensor masked = tape.mul(expd, Tensor::matrix(n, big_n, std::move(mask)));
  const Tensor log_denom = tape.log(tape.row_sum(masked));
  return {scaled, log_denom};
}

// -(1/n) * sum_p w_p * (scaled[pick_p] - log_denom[anchor of pick_p]).
Tensor weighted_pick_loss(Tape& tape, const ContrastiveHead& head,
                          const std::vector<std::size_t>& pick_rows,
                          const std::vector<std::size_t>& pick_cols,
                          const std::vector<double>& weights, std::size_t n) {
  if (pick_rows.empty()) return Tensor::scalar(0.0);
  const Tensor picks = tape.gather(head.scaled, pick_rows, pick_cols);
  const Tensor denom = tape.take(head.log_denom, pick_rows);
  Tensor diff = tape.add(picks, tape.scale(denom, -1.0));
  if (!weights.empty()) {
    diff = tape.mul(diff, Tensor::vector(weights));
  }
  return tape.scale(tape.sum(diff), -1.0 / static_cast<double>(n));
}

}  // namespace

Tensor ncl_loss(Tape& tape, const Tensor& batch_features,
                const std::vector<std::size_t>& batch_indices,
                const FeatureBank& bank, double tau, std::size_t k) {
  const ContrastiveHead head =
      contrastive_head(tape, batch_features, batch_indices, bank, tau);
  const std::size_t n = batch_features.rows();

  std::vector<std::size_t> pick_rows, pick_cols;
  pick_rows.reserve(n * k);
  pick_cols.reserve(n * k);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j : knn(bank, batch_indices[r], k)) {
      pick_rows.push_back(r);
      pick_cols.push_back(j);
    }
  }
  return weighted_pick_loss(tape, head, pick_rows, pick_cols, {}, n);
}

Tensor scl_loss(Tape& tape, const Tensor& batch_features,
                const std::vector<std::size_t>& batch_indices,
                const FeatureBank& feature_bank, const ScoreBank& score_bank,
                double tau) {
  if (feature_bank.size() != score_bank.size()) {
    throw DimensionError("scl_loss: feature and score banks disagree on size");
  }
  const ContrastiveHead head =
      contrastive_head(tape, batch_features, batch_indices, feature_bank, tau);
  const std::size_t n = batch_features.rows();

  std::vector<std::size_t> pick_rows, pick_cols;
  std::vector<double> weights;
  for (std::size_t r = 0; r < n; ++r) {
    const std::vector<std::size_t> positives =
        same_class_set(score_bank, batch_indices[r]);
    if (positives.empty()) continue;  // nothing to attract; contributes 0
    const double w = 1.0 / static_cast<double>(positives.size());
    for (std::size_t j : positives) {
      pick_rows.push_back(r);
      pick_cols.push_back(j);
      weights.push_back(w);
    }
  }
  return weighted_pick_loss(tape, head, pick_rows, pick_cols, weights, n);
}

Tensor div_loss(Tape& tape, const Tensor& batch_probs) {
  if (batch_probs.rank() != 2 || batch_probs.rows() == 0) {
    throw DimensionError("div_loss: probs must be a nonempty rank-2 tensor");
  }
  const std::size_t class_count = batch_probs.cols();
  const Tensor pbar = tape.col_mean(batch_probs);  // [C]
  const Tensor scaled = tape.scale(pbar, static_cast<double>(class_count));
  const Tensor lg = tape.log(tape.clamp_min(scaled, kLogFloor));
  return tape.sum(tape.mul(pbar, lg));
}

TotalLoss total_loss(Tape& tape, const Tensor& ncl, const Tensor& scl,
                     const Tensor& div, double lambda, double beta) {
  if (lambda < 0.0 || beta < 0.0) {
    throw ConfigError("total_loss: lambda and beta must be nonnegative");
  }
  const Tensor weighted =
      tape.add(div, tape.add(tape.scale(ncl, lambda), tape.scale(scl, beta)));
  TotalLoss out;
  out.value = weighted;
  out.breakdown.ncl = ncl.item();
  out.breakdown.scl = scl.item();
  out.breakdown.div = div.item();
  out.breakdown.total = weighted.item();
  out.breakdown.lambda = lambda;
  out.breakdown.beta = beta;
  return out;
}

Tensor ce_label_smoothing(Tape& tape, const Tensor& probs,
                          const std::vector<int>& labels, double epsilon) {
  if (probs.rank() != 2 || probs.rows() == 0) {
    throw DimensionError("cross-entropy: probs must be a nonempty rank-2 tensor");
  }
  const std::size_t n = probs.rows();
  const std::size_t class_count = probs.cols();
  if (labels.size() != n) {
    throw DimensionError("cross-entropy: one label per batch row");
  }
  if (epsilon < 0.0 || epsilon >= 1.0) {
    throw ConfigError("cross-entropy: epsilon must be in [0, 1)");
  }
  if (epsilon > 0.0 && class_count < 2) {
    throw ConfigError("cross-entropy: smoothing needs at least 2 classes");
  }

  const double off = epsilon > 0.0
                         ? epsilon / static_cast<double>(class_count - 1)
                         : 0.0;
  std::vector<double> target(n * class_count, off);
  for (std::size_t r = 0; r < n; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= class_count) {
      throw DataError("cross-entropy: label " + std::to_string(label) +
                      " outside [0, " + std::to_string(class_count) + ")");
    }
    target[r * class_count + static_cast<std::size_t>(label)] = 1.0 - epsilon;
  }

  const Tensor lg = tape.log(tape.clamp_min(probs, kLogFloor));
  const Tensor weighted =
      tape.mul(Tensor::matrix(n, class_count, std::move(target)), lg);
  return tape.scale(tape.sum(weighted), -1.0 / static_cast<double>(n));
}

}  // namespace ecan
