#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecan/tensor.hpp"

namespace ecan {

// MLP architecture: input_dim -> hidden... (ReLU) -> feature_dim, with a
// linear classifier head feature_dim -> class_count on top. Features are
// the raw output of the last extractor layer; normalization happens at bank
// insertion and similarity computation, not here.
struct ModelSpec {
  std::size_t input_dim = 16;
  std::vector<std::size_t> hidden = {64};
  std::size_t feature_dim = 32;
  std::size_t class_count = 4;

  void validate() const;
};

struct ModelForward {
  Tensor features;  // [n x feature_dim]
  Tensor logits;    // [n x class_count]
  Tensor probs;     // [n x class_count], rows sum to 1
};

// Feature extractor plus classifier head. Move-only; clone() for an
// independent copy (adaptation trains a clone, evaluation reads one).
class EcanModel {
 public:
  EcanModel(const EcanModel&) = delete;
  EcanModel& operator=(const EcanModel&) = delete;
  EcanModel(EcanModel&&) = default;
  EcanModel& operator=(EcanModel&&) = default;

  /// Glorot-uniform weights, zero biases, deterministic in the seed.
  static EcanModel init(const ModelSpec& spec, std::uint64_t seed);

  ModelForward forward(Tape& tape, const Tensor& batch) const;

  /// Trainable tensors in fixed order: extractor W0,b0,W1,b1,... then
  /// classifier W,b.
  std::vector<Tensor> parameters() const;

  const ModelSpec& spec() const { return spec_; }

  Tensor extractor_weight(std::size_t layer) const { return extractor_w_[layer]; }
  Tensor extractor_bias(std::size_t layer) const { return extractor_b_[layer]; }
  Tensor classifier_weight() const { return classifier_w_; }
  Tensor classifier_bias() const { return classifier_b_; }
  std::size_t extractor_layers() const { return extractor_w_.size(); }

  EcanModel clone() const;

  /// JSON model file; load(save(m)) reproduces parameters bit-exactly.
  void save(const std::string& path) const;
  static EcanModel load(const std::string& path);

 private:
  EcanModel() = default;

  ModelSpec spec_;
  std::vector<Tensor> extractor_w_;
  std::vector<Tensor> extractor_b_;
  Tensor classifier_w_;
  Tensor classifier_b_;
};

}  // namespace ecan
