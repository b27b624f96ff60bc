#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ecan/banks.hpp"
#include "ecan/data.hpp"
#include "ecan/losses.hpp"
#include "ecan/model.hpp"

namespace ecan {

// Heavy-ball SGD over a fixed parameter list: v <- momentum*v + g,
// p <- p - lr*v, then grads are zeroed. Parameters with no gradient buffer
// count as g = 0 (their velocity still decays).
class SgdOptimizer {
 public:
  SgdOptimizer(std::vector<Tensor> params, double lr, double momentum);

  void step();

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> velocity_;
  double lr_;
  double momentum_;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown loss;     // per-batch means; total stays div + lambda*ncl + beta*scl
  double uar = std::numeric_limits<double>::quiet_NaN();  // NaN: target unlabeled
  double wall_seconds = 0.0;  // in-memory diagnostics; never serialized
};

struct RunLog {
  std::vector<EpochRecord> epochs;
};

// Loss-term switches mirroring the ablation rows: a disabled term is neither
// computed nor counted (logged as 0 with weight 0).
struct AblationFlags {
  bool disable_ncl = false;
  bool disable_scl = false;
  bool disable_div = false;
};

// Snapshot handed to the adaptation observer once per batch, after the bank
// update and loss computation but before the optimizer step.
struct AdaptBatchView {
  std::size_t epoch = 0;  // 1-based
  std::size_t batch = 0;  // 0-based within the epoch
  const std::vector<std::size_t>& indices;
  const Banks& banks;
  const EcanModel& model;  // parameters not yet stepped
  const LossBreakdown& loss;
};
using AdaptObserver = std::function<void(const AdaptBatchView&)>;

/// Supervised source training: smoothed cross-entropy, SGD with momentum,
/// deterministic per-epoch shuffles. hp.pretrain_epochs == 0 returns the
/// freshly initialized model untouched.
EcanModel pretrain(const Corpus& source, const ModelSpec& spec,
                   const HyperParams& hp);

/// Source-free adaptation: per batch, forward -> refresh banks with the
/// current outputs -> neighborhood + pseudo-label + balance losses -> SGD
/// step. Target labels are never read by the update path; when present they
/// feed the read-only per-epoch UAR in the log.
std::pair<EcanModel, RunLog> adapt(EcanModel model, const Corpus& target,
                                   const HyperParams& hp,
                                   const AblationFlags& ablation = {},
                                   const AdaptObserver& observer = {});

/// Line-delimited JSON, one {epoch, ncl, scl, div, total, uar} record per
/// epoch; uar is null for unlabeled targets.
void write_run_log(const RunLog& log, const std::string& path);

}  // namespace ecan
