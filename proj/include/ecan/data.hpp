#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ecan/matrix.hpp"

namespace ecan {

// Fixed-dimension feature vectors with optional integer labels.
// A label of -1 marks an unlabeled sample.
struct Corpus {
  std::string name;
  std::size_t class_count = 0;
  Matrix features;          // N x dim
  std::vector<int> labels;  // length N

  std::size_t size() const { return features.rows; }
  std::size_t dim() const { return features.cols; }
  bool fully_labeled() const;
};

// Parameterized Gaussian domain-shift task. Source clusters sit on the unit
// circle in the first two feature dimensions (std 0.3 per coordinate); the
// target draws from the same clusters pushed through rotation -> scale ->
// translation plus extra observation noise.
struct ShiftSpec {
  std::size_t class_count = 4;
  std::size_t dim = 16;
  std::size_t samples_per_class = 150;
  double rotation_angle = 0.0;  // radians, applied in the first two dims
  std::vector<double> translation;  // empty = zero vector
  double scale = 1.0;
  double noise_sigma = 0.0;
  std::vector<double> class_imbalance;  // empty = all classes equal
  std::uint64_t seed = 0;

  void validate() const;
};

/// Deterministic (source, target) pair; target labels are attached but are
/// meant for evaluation only.
std::pair<Corpus, Corpus> generate_pair(const ShiftSpec& spec);

/// CSV corpus with header `label,f0,...,f{D-1}` plus a manifest JSON
/// ({name, C, dim, N}) alongside, extension `.manifest.json`.
Corpus load_corpus(const std::string& csv_path);
void save_corpus(const Corpus& corpus, const std::string& csv_path);

std::string manifest_path_for(const std::string& csv_path);

}  // namespace ecan
