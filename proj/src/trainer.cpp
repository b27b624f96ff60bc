#include "ecan/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "ecan/errors.hpp"
#include "ecan/eval.hpp"
#include "ecan/rng.hpp"

namespace ecan {

SgdOptimizer::SgdOptimizer(std::vector<Tensor> params, double lr, double momentum)
    : params_(std::move(params)), lr_(lr), momentum_(momentum) {
  if (lr_ <= 0.0) throw ConfigError("sgd: learning rate must be positive");
  if (momentum_ < 0.0 || momentum_ >= 1.0) {
    throw ConfigError("sgd: momentum must be in [0, 1)");
  }
  velocity_.reserve(params_.size());
  for (const Tensor& p : params_) velocity_.emplace_back(p.numel(), 0.0);
}

void SgdOptimizer::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    std::vector<double>& v = velocity_[i];
    std::vector<double>& values = p.values();
    if (p.has_grad()) {
      const std::vector<double>& g = p.grad();
      for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = momentum_ * v[j] + g[j];
        values[j] -= lr_ * v[j];
      }
      p.zero_grad();
    } else {
      for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = momentum_ * v[j];
        values[j] -= lr_ * v[j];
      }
    }
  }
}

namespace {

// Stream tags keeping pretrain and adaptation shuffles independent.
constexpr std::uint64_t kPretrainPhase = 0x7072657472ull;
constexpr std::uint64_t kAdaptPhase = 0x6164617074ull;

Tensor batch_tensor(const Corpus& corpus, const std::vector<std::size_t>& idx) {
  std::vector<double> values;
  values.reserve(idx.size() * corpus.dim());
  for (std::size_t i : idx) {
    const auto row = corpus.features.row(i);
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor::matrix(idx.size(), corpus.dim(), std::move(values));
}

std::vector<std::vector<std::size_t>> epoch_batches(
    std::uint64_t seed, std::uint64_t phase, std::size_t epoch, std::size_t n,
    std::size_t batch_size) {
  Rng rng(mix_seed(seed, phase, epoch));
  const std::vector<std::size_t> perm = rng.permutation(n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace

EcanModel pretrain(const Corpus& source, const ModelSpec& spec,
                   const HyperParams& hp) {
  spec.validate();
  if (source.size() == 0) throw DataError("pretrain: empty source corpus");
  if (source.dim() != spec.input_dim) {
    throw DimensionError("pretrain: source dim != model input_dim");
  }
  if (source.class_count != spec.class_count) {
    throw ConfigError("pretrain: source class_count != model class_count");
  }
  if (!source.fully_labeled()) {
    throw DataError("pretrain: source corpus must be fully labeled");
  }
  for (int l : source.labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= spec.class_count) {
      throw DataError("pretrain: label outside [0, C)");
    }
  }

  EcanModel model = EcanModel::init(spec, hp.seed);
  SgdOptimizer opt(model.parameters(), hp.lr_pretrain, hp.momentum);

  for (std::size_t epoch = 1; epoch <= hp.pretrain_epochs; ++epoch) {
    for (const auto& idx :
         epoch_batches(hp.seed, kPretrainPhase, epoch, source.size(),
                       hp.batch_size)) {
      std::vector<int> labels;
      labels.reserve(idx.size());
      for (std::size_t i : idx) labels.push_back(source.labels[i]);

      Tape tape;
      const ModelForward out = model.forward(tape, batch_tensor(source, idx));
      const Tensor loss =
          ce_label_smoothing(tape, out.probs, labels, hp.label_smoothing);
      tape.backward(loss);
      opt.step();
    }
  }
  return model;
}

std::pair<EcanModel, RunLog> adapt(EcanModel model, const Corpus& target,
                                   const HyperParams& hp,
                                   const AblationFlags& ablation,
                                   const AdaptObserver& observer) {
  if (target.size() < 2) {
    throw ConfigError("adapt: target corpus needs at least 2 samples");
  }
  if (target.dim() != model.spec().input_dim) {
    throw ConfigError("adapt: target dim != model input_dim");
  }
  if (target.class_count != model.spec().class_count) {
    throw ConfigError("adapt: target class_count != model class_count");
  }
  if (hp.k + 1 > target.size()) {
    throw ConfigError("adapt: k must be < target sample count");
  }

  const double lambda = ablation.disable_ncl ? 0.0 : hp.lambda;
  const double beta = ablation.disable_scl ? 0.0 : hp.beta;
  // Read-only epoch metric; never feeds the update path.
  const bool log_uar = target.fully_labeled();

  Banks banks = init_banks(model, target);
  SgdOptimizer opt(model.parameters(), hp.lr_adapt, hp.momentum);
  RunLog log;

  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    LossBreakdown epoch_sum;
    std::size_t batch_count = 0;

    for (const auto& idx : epoch_batches(hp.seed, kAdaptPhase, epoch,
                                         target.size(), hp.batch_size)) {
      Tape tape;
      const ModelForward out = model.forward(tape, batch_tensor(target, idx));
      update(banks, idx, out.features, out.probs);

      const Tensor ncl =
          lambda > 0.0
              ? ncl_loss(tape, out.features, idx, banks.features, hp.tau, hp.k)
              : Tensor::scalar(0.0);
      const Tensor scl =
          beta > 0.0 ? scl_loss(tape, out.features, idx, banks.features,
                                banks.scores, hp.tau)
                     : Tensor::scalar(0.0);
      const Tensor div = ablation.disable_div ? Tensor::scalar(0.0)
                                              : div_loss(tape, out.probs);
      const TotalLoss total = total_loss(tape, ncl, scl, div, lambda, beta);

      if (observer) {
        observer(AdaptBatchView{epoch, batch_count, idx, banks, model,
                                total.breakdown});
      }

      tape.backward(total.value);
      opt.step();

      epoch_sum.ncl += total.breakdown.ncl;
      epoch_sum.scl += total.breakdown.scl;
      epoch_sum.div += total.breakdown.div;
      epoch_sum.total += total.breakdown.total;
      ++batch_count;
    }

    EpochRecord record;
    record.epoch = epoch;
    const double inv = 1.0 / static_cast<double>(batch_count);
    record.loss.ncl = epoch_sum.ncl * inv;
    record.loss.scl = epoch_sum.scl * inv;
    record.loss.div = epoch_sum.div * inv;
    record.loss.total = epoch_sum.total * inv;
    record.loss.lambda = lambda;
    record.loss.beta = beta;
    if (log_uar) {
      record.uar = unweighted_average_recall(target.labels,
                                             predict(model, target),
                                             target.class_count);
    }
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    log.epochs.push_back(std::move(record));
  }
  return {std::move(model), std::move(log)};
}

void write_run_log(const RunLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  for (const EpochRecord& r : log.epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["ncl"] = r.loss.ncl;
    j["scl"] = r.loss.scl;
    j["div"] = r.loss.div;
    j["total"] = r.loss.total;
    if (std::isnan(r.uar)) {
      j["uar"] = nullptr;
    } else {
      j["uar"] = r.uar;
    }
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace ecan
