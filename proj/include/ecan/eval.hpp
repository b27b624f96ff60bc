#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "ecan/data.hpp"
#include "ecan/matrix.hpp"
#include "ecan/model.hpp"

namespace ecan {

struct EvalReport {
  double uar = 0.0;       // mean of per-class recalls, zero-sample classes skipped
  double accuracy = 0.0;  // plain fraction correct
  std::vector<double> per_class_recall;  // NaN marks a zero-sample class
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

/// Argmax class per sample; ties resolve to the lowest class index.
std::vector<int> predict(const EcanModel& model, const Corpus& corpus);

/// Recall bookkeeping shared with per-epoch logging. NaN if every class has
/// zero samples.
double unweighted_average_recall(const std::vector<int>& truth,
                                 const std::vector<int>& predictions,
                                 std::size_t class_count);

EvalReport evaluate(const EcanModel& model, const Corpus& corpus);

// 2-D PCA view of the extractor's feature space.
struct Projection {
  Matrix points;            // N x 2
  std::vector<int> labels;  // copied from the corpus, -1 allowed
  std::array<double, 2> eigenvalues{};
  double variance_captured = 0.0;  // (ev1 + ev2) / total feature variance
};

/// Mean-centered features projected onto the top two principal directions
/// (power iteration, 200 rounds, deflation; each direction's sign is fixed
/// so its first nonzero loading is positive). Deterministic.
Projection project_2d(const EcanModel& model, const Corpus& corpus);

/// Mean intra-class cosine minus mean inter-class cosine over normalized
/// features; larger means tighter, better-separated clusters.
double cluster_quality(const EcanModel& model, const Corpus& corpus);

void write_report_json(const EvalReport& report, const std::string& path);
void write_projection_csv(const Projection& projection, const std::string& path);
void write_projection_summary(const Projection& projection, double cluster_quality,
                              const std::string& path);

}  // namespace ecan
