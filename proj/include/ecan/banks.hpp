#pragma once

#include <cstddef>
#include <vector>

#include "ecan/data.hpp"
#include "ecan/matrix.hpp"
#include "ecan/model.hpp"

namespace ecan {

// Per-sample feature memory, row i <-> target sample i. Rows are stored
// L2-normalized, so cosine similarity is a plain dot product.
struct FeatureBank {
  Matrix rows;  // N_t x d, unit rows

  std::size_t size() const { return rows.rows; }
  std::size_t dim() const { return rows.cols; }
};

// Softmax scores aligned with FeatureBank indexing.
struct ScoreBank {
  Matrix rows;  // N_t x C, rows sum to 1

  std::size_t size() const { return rows.rows; }
  std::size_t class_count() const { return rows.cols; }
};

struct Banks {
  FeatureBank features;
  ScoreBank scores;
};

/// One full forward pass over the target corpus; stores normalized features
/// and softmax scores. The stored values carry no gradient linkage.
Banks init_banks(const EcanModel& model, const Corpus& target);

/// Replace rows at batch_indices with the (normalized) current features and
/// scores; every other row is left bit-identical. Values are detached copies.
void update(Banks& banks, const std::vector<std::size_t>& batch_indices,
            const Tensor& features, const Tensor& probs);

/// Indices of the k bank rows most cosine-similar to row anchor_index,
/// excluding the anchor itself. Ties break toward the lowest index.
std::vector<std::size_t> knn(const FeatureBank& bank, std::size_t anchor_index,
                             std::size_t k);

/// All indices j != anchor whose argmax score matches the anchor's argmax
/// (argmax ties break toward the lowest class). May be empty.
std::vector<std::size_t> same_class_set(const ScoreBank& scores,
                                        std::size_t anchor_index);

}  // namespace ecan
