#include "ecan/banks.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ecan/errors.hpp"

namespace ecan {

Banks init_banks(const EcanModel& model, const Corpus& target) {
  if (target.size() == 0) throw ConfigError("init_banks: empty target corpus");

  Tape tape;
  const Tensor batch = Tensor::matrix(target.size(), target.dim(),
                                      target.features.v);
  const ModelForward out = model.forward(tape, batch);

  Banks banks;
  banks.features.rows =
      Matrix(target.size(), model.spec().feature_dim);
  banks.features.rows.v = out.features.values();
  l2_normalize_rows_inplace(banks.features.rows);

  banks.scores.rows = Matrix(target.size(), model.spec().class_count);
  banks.scores.rows.v = out.probs.values();
  return banks;
}

void update(Banks& banks, const std::vector<std::size_t>& batch_indices,
            const Tensor& features, const Tensor& probs) {
  const std::size_t n = batch_indices.size();
  if (features.rank() != 2 || probs.rank() != 2 || features.rows() != n ||
      probs.rows() != n) {
    throw DimensionError("bank update: row counts must equal index count");
  }
  if (features.cols() != banks.features.dim() ||
      probs.cols() != banks.scores.class_count()) {
    throw DimensionError("bank update: feature/score width mismatch");
  }
  for (std::size_t idx : batch_indices) {
    if (idx >= banks.features.size()) {
      throw IndexError("bank update: index " + std::to_string(idx) +
                       " outside [0, " + std::to_string(banks.features.size()) +
                       ")");
    }
  }

  Matrix staged(n, features.cols());
  staged.v = features.values();
  l2_normalize_rows_inplace(staged);

  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t idx = batch_indices[r];
    std::copy_n(staged.row(r).data(), staged.cols,
                banks.features.rows.row(idx).data());
    for (std::size_t c = 0; c < banks.scores.class_count(); ++c) {
      banks.scores.rows.at(idx, c) = probs.at(r, c);
    }
  }
}

std::vector<std::size_t> knn(const FeatureBank& bank, std::size_t anchor_index,
                             std::size_t k) {
  const std::size_t n = bank.size();
  if (anchor_index >= n) throw IndexError("knn: anchor index out of range");
  if (k < 1 || k > n - 1) {
    throw ConfigError("knn: k must be in [1, " + std::to_string(n - 1) +
                      "], got " + std::to_string(k));
  }

  const auto anchor = bank.rows.row(anchor_index);
  std::vector<double> sim(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const auto row = bank.rows.row(j);
    double dot = 0.0;
    for (std::size_t c = 0; c < bank.dim(); ++c) dot += anchor[c] * row[c];
    sim[j] = dot;
  }

  std::vector<std::size_t> order;
  order.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != anchor_index) order.push_back(j);
  }
  // Highest similarity first; equal similarities keep index order.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });
  order.resize(k);
  return order;
}

namespace {

std::size_t argmax_row(const Matrix& m, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < m.cols; ++c) {
    if (m.at(r, c) > m.at(r, best)) best = c;
  }
  return best;
}

}  // namespace

std::vector<std::size_t> same_class_set(const ScoreBank& scores,
                                        std::size_t anchor_index) {
  if (anchor_index >= scores.size()) {
    throw IndexError("same_class_set: anchor index out of range");
  }
  const std::size_t anchor_class = argmax_row(scores.rows, anchor_index);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j == anchor_index) continue;
    if (argmax_row(scores.rows, j) == anchor_class) out.push_back(j);
  }
  return out;
}

}  // namespace ecan
