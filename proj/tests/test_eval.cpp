#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "ecan/data.hpp"
#include "ecan/errors.hpp"
#include "ecan/eval.hpp"
#include "ecan/model.hpp"
#include "ecan/rng.hpp"

using ecan::Corpus;
using ecan::EcanModel;
using ecan::EvalReport;
using ecan::Matrix;
using ecan::ModelSpec;
using ecan::Projection;
using ecan::Rng;
using ecan::Tape;
using ecan::Tensor;

namespace {

// Single linear layer with identity weights: features == inputs, so tests
// control the feature geometry directly through the corpus.
EcanModel identity_model(std::size_t dim, std::size_t class_count,
                         double classifier_gain) {
  ModelSpec spec;
  spec.input_dim = dim;
  spec.hidden = {};
  spec.feature_dim = dim;
  spec.class_count = class_count;
  EcanModel m = EcanModel::init(spec, 0);

  Tensor w0 = m.extractor_weight(0);
  for (double& x : w0.values()) x = 0.0;
  for (std::size_t i = 0; i < dim; ++i) w0.values()[i * dim + i] = 1.0;

  Tensor cw = m.classifier_weight();
  for (double& x : cw.values()) x = 0.0;
  for (std::size_t i = 0; i < std::min(dim, class_count); ++i) {
    cw.values()[i * class_count + i] = classifier_gain;
  }
  return m;
}

Corpus corpus_from(Matrix features, std::vector<int> labels,
                   std::size_t class_count) {
  Corpus c;
  c.name = "test";
  c.class_count = class_count;
  c.features = std::move(features);
  c.labels = std::move(labels);
  return c;
}

Matrix random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, d);
  for (double& x : m.v) x = rng.uniform(-2.0, 2.0);
  return m;
}

double pairwise_distance(const Matrix& m, std::size_t i, std::size_t j) {
  double acc = 0.0;
  for (std::size_t c = 0; c < m.cols; ++c) {
    const double diff = m.at(i, c) - m.at(j, c);
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("recall arithmetic") {
  // Class 0 fully recalled, class 1 half recalled.
  const std::vector<int> truth = {0, 0, 1, 1};
  const std::vector<int> preds = {0, 0, 1, 0};
  CHECK(ecan::unweighted_average_recall(truth, preds, 2) ==
        doctest::Approx(0.75).epsilon(1e-12));

  // Zero-sample class 2 is skipped, not counted as recall 0.
  CHECK(ecan::unweighted_average_recall(truth, preds, 3) ==
        doctest::Approx(0.75).epsilon(1e-12));

  CHECK(std::isnan(ecan::unweighted_average_recall({}, {}, 3)));
  CHECK_THROWS_AS(ecan::unweighted_average_recall({0, 3}, {0, 0}, 2),
                  ecan::DataError);
  CHECK_THROWS_AS(ecan::unweighted_average_recall({0, -1}, {0, 0}, 2),
                  ecan::DataError);
  CHECK_THROWS_AS(ecan::unweighted_average_recall({0}, {0, 1}, 2),
                  ecan::DimensionError);
}

TEST_CASE("recall is invariant under consistent relabeling") {
  Rng rng(31);
  std::vector<int> truth(40), preds(40);
  for (auto& t : truth) t = static_cast<int>(rng.below(4));
  for (auto& p : preds) p = static_cast<int>(rng.below(4));
  const double base = ecan::unweighted_average_recall(truth, preds, 4);

  const std::vector<int> perm = {2, 0, 3, 1};
  std::vector<int> truth_p(40), preds_p(40);
  for (std::size_t i = 0; i < 40; ++i) {
    truth_p[i] = perm[static_cast<std::size_t>(truth[i])];
    preds_p[i] = perm[static_cast<std::size_t>(preds[i])];
  }
  CHECK(ecan::unweighted_average_recall(truth_p, preds_p, 4) == base);
}

TEST_CASE("perfect classifier scores a perfect report") {
  const EcanModel model = identity_model(3, 3, 10.0);
  Matrix features(6, 3);
  std::vector<int> labels(6);
  for (std::size_t i = 0; i < 6; ++i) {
    labels[i] = static_cast<int>(i % 3);
    features.at(i, static_cast<std::size_t>(labels[i])) = 2.0;
  }
  const Corpus corpus = corpus_from(features, labels, 3);

  const EvalReport report = ecan::evaluate(model, corpus);
  CHECK(report.uar == 1.0);
  CHECK(report.accuracy == 1.0);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(report.per_class_recall[c] == 1.0);
    CHECK(report.confusion[c][c] == 2);
  }
}

TEST_CASE("evaluate matches an independent counting pass") {
  const ModelSpec spec{.input_dim = 5, .hidden = {7}, .feature_dim = 4,
                       .class_count = 3};
  const EcanModel model = EcanModel::init(spec, 19);
  Rng rng(20);
  Matrix features = random_points(30, 5, 21);
  std::vector<int> labels(30);
  for (auto& l : labels) l = static_cast<int>(rng.below(3));
  const Corpus corpus = corpus_from(features, labels, 3);

  const EvalReport report = ecan::evaluate(model, corpus);

  // Oracle: one forward pass per sample, manual argmax, manual counting.
  std::vector<std::size_t> total(3, 0), correct(3, 0);
  std::size_t sum_correct = 0;
  std::vector<std::vector<std::size_t>> confusion(3, std::vector<std::size_t>(3, 0));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Tape tape;
    std::vector<double> row(corpus.features.row(i).begin(),
                            corpus.features.row(i).end());
    const auto out = model.forward(tape, Tensor::matrix(1, 5, row));
    std::size_t best = 0;
    for (std::size_t c = 1; c < 3; ++c) {
      if (out.probs.at(0, c) > out.probs.at(0, best)) best = c;
    }
    const auto t = static_cast<std::size_t>(labels[i]);
    ++total[t];
    ++confusion[t][best];
    if (best == t) {
      ++correct[t];
      ++sum_correct;
    }
  }
  double recall_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    if (total[c] == 0) continue;
    recall_sum += static_cast<double>(correct[c]) / static_cast<double>(total[c]);
    ++present;
  }
  CHECK(report.uar ==
        doctest::Approx(recall_sum / static_cast<double>(present)).epsilon(1e-12));
  CHECK(report.accuracy ==
        doctest::Approx(static_cast<double>(sum_correct) / 30.0).epsilon(1e-12));
  CHECK(report.confusion == confusion);

  std::size_t grand_total = 0;
  for (const auto& row : report.confusion)
    for (std::size_t x : row) grand_total += x;
  CHECK(grand_total == corpus.size());
}

TEST_CASE("zero-sample classes are skipped and marked") {
  const EcanModel model = identity_model(3, 3, 10.0);
  Matrix features(4, 3);
  std::vector<int> labels = {0, 0, 1, 1};  // class 2 absent
  for (std::size_t i = 0; i < 4; ++i)
    features.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  const EvalReport report = ecan::evaluate(model, corpus_from(features, labels, 3));
  CHECK(report.uar == 1.0);
  CHECK(std::isnan(report.per_class_recall[2]));
}

TEST_CASE("evaluate input validation") {
  const EcanModel model = identity_model(3, 3, 1.0);
  Matrix features(2, 3);
  features.at(0, 0) = 1.0;
  features.at(1, 1) = 1.0;

  Corpus unlabeled = corpus_from(features, {0, -1}, 3);
  CHECK_THROWS_AS(ecan::evaluate(model, unlabeled), ecan::UsageError);

  Corpus wrong_c = corpus_from(features, {0, 1}, 4);
  CHECK_THROWS_AS(ecan::evaluate(model, wrong_c), ecan::ConfigError);

  Corpus empty;
  empty.class_count = 3;
  empty.features = Matrix(0, 3);
  CHECK_THROWS_AS(ecan::evaluate(model, empty), ecan::ConfigError);
}

TEST_CASE("prediction ties resolve to the lowest class") {
  const EcanModel model = identity_model(3, 3, 0.0);  // all logits zero
  Matrix features(3, 3);
  features.at(0, 0) = 1.0;
  features.at(1, 1) = 1.0;
  features.at(2, 2) = 1.0;
  const Corpus corpus = corpus_from(features, {0, 1, 2}, 3);
  CHECK(ecan::predict(model, corpus) == std::vector<int>{0, 0, 0});
}

TEST_CASE("projection of full-rank 2-D data preserves distances") {
  const EcanModel model = identity_model(2, 2, 1.0);
  Matrix pts = random_points(12, 2, 40);
  // Center so the projection is exactly an orthogonal change of basis.
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < pts.rows; ++i) mean += pts.at(i, c);
    mean /= static_cast<double>(pts.rows);
    for (std::size_t i = 0; i < pts.rows; ++i) pts.at(i, c) -= mean;
  }
  const Corpus corpus = corpus_from(pts, std::vector<int>(12, 0), 2);
  const Projection proj = ecan::project_2d(model, corpus);

  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = i + 1; j < 12; ++j) {
      CHECK(pairwise_distance(proj.points, i, j) ==
            doctest::Approx(pairwise_distance(pts, i, j)).epsilon(1e-6));
    }
  }
  CHECK(proj.variance_captured == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(proj.eigenvalues[0] >= proj.eigenvalues[1]);
}

TEST_CASE("duplicated samples project to duplicated rows") {
  const EcanModel model = identity_model(3, 2, 1.0);
  Matrix pts = random_points(6, 3, 41);
  for (std::size_t c = 0; c < 3; ++c) pts.at(5, c) = pts.at(2, c);
  const Projection proj =
      ecan::project_2d(model, corpus_from(pts, std::vector<int>(6, 0), 2));
  CHECK(proj.points.at(5, 0) == proj.points.at(2, 0));
  CHECK(proj.points.at(5, 1) == proj.points.at(2, 1));
}

TEST_CASE("two principal components beat any two coordinate axes") {
  const EcanModel model = identity_model(4, 2, 1.0);
  // Correlated cloud so principal directions are off-axis.
  Rng rng(42);
  Matrix pts(40, 4);
  for (std::size_t i = 0; i < 40; ++i) {
    const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-0.5, 0.5);
    pts.at(i, 0) = a + 0.2 * b;
    pts.at(i, 1) = a - 0.3 * b;
    pts.at(i, 2) = 0.7 * a + b;
    pts.at(i, 3) = rng.uniform(-0.2, 0.2);
  }
  const Corpus corpus = corpus_from(pts, std::vector<int>(40, 0), 2);
  const Projection proj = ecan::project_2d(model, corpus);

  std::vector<double> axis_var(4, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 40; ++i) mean += pts.at(i, c);
    mean /= 40.0;
    for (std::size_t i = 0; i < 40; ++i) {
      const double d = pts.at(i, c) - mean;
      axis_var[c] += d * d;
    }
    axis_var[c] /= 39.0;
    total += axis_var[c];
  }
  std::sort(axis_var.begin(), axis_var.end());
  const double best_axes = (axis_var[2] + axis_var[3]) / total;
  CHECK(proj.variance_captured >= best_axes - 1e-9);
}

TEST_CASE("projection is deterministic and handles rank-1 data") {
  const EcanModel model = identity_model(2, 2, 1.0);
  Matrix line(5, 2);
  for (std::size_t i = 0; i < 5; ++i) {
    const double t = static_cast<double>(i) - 2.0;
    line.at(i, 0) = t * 1.0;
    line.at(i, 1) = t * 2.0;
  }
  const Corpus corpus = corpus_from(line, std::vector<int>(5, 0), 2);
  const Projection a = ecan::project_2d(model, corpus);
  const Projection b = ecan::project_2d(model, corpus);
  CHECK(a.points == b.points);
  CHECK(a.eigenvalues == b.eigenvalues);

  // All variance lives on the line; the second direction carries none.
  CHECK(a.variance_captured == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(a.eigenvalues[1] == doctest::Approx(0.0).epsilon(1e-9));
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(std::fabs(a.points.at(i, 1)) < 1e-6);
  // Sign convention: first loading positive, so x ascends with t.
  CHECK(a.points.at(4, 0) > a.points.at(0, 0));
}

TEST_CASE("projection failure modes") {
  const EcanModel model = identity_model(2, 2, 1.0);

  Matrix constant(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    constant.at(i, 0) = 1.0;
    constant.at(i, 1) = -0.5;
  }
  CHECK_THROWS_AS(
      ecan::project_2d(model, corpus_from(constant, std::vector<int>(4, 0), 2)),
      ecan::NumericError);

  Matrix two(2, 2);
  two.at(0, 0) = 1.0;
  two.at(1, 1) = 1.0;
  CHECK_THROWS_AS(
      ecan::project_2d(model, corpus_from(two, std::vector<int>(2, 0), 2)),
      ecan::ConfigError);
}

TEST_CASE("cluster quality separates tight clusters from mixed labels") {
  const EcanModel model = identity_model(2, 2, 1.0);
  Matrix pts(8, 2);
  std::vector<int> labels(8);
  Rng rng(50);
  for (std::size_t i = 0; i < 8; ++i) {
    const bool second = i >= 4;
    labels[i] = second ? 1 : 0;
    pts.at(i, 0) = (second ? 0.0 : 1.0) + 0.01 * rng.uniform(-1.0, 1.0);
    pts.at(i, 1) = (second ? 1.0 : 0.0) + 0.01 * rng.uniform(-1.0, 1.0);
  }
  const Corpus corpus = corpus_from(pts, labels, 2);
  CHECK(ecan::cluster_quality(model, corpus) > 0.8);

  Corpus unlabeled = corpus;
  unlabeled.labels[3] = -1;
  CHECK_THROWS_AS(ecan::cluster_quality(model, unlabeled), ecan::UsageError);

  Corpus one_class = corpus;
  one_class.labels.assign(8, 0);
  CHECK_THROWS_AS(ecan::cluster_quality(model, one_class), ecan::DataError);
}

TEST_CASE("report and projection writers") {
  const std::string report_path = "/tmp/ecan_eval_test_report.json";
  const std::string csv_path = "/tmp/ecan_eval_test_projection.csv";
  const std::string summary_path = "/tmp/ecan_eval_test_summary.json";

  EvalReport report;
  report.uar = 0.75;
  report.accuracy = 0.8;
  report.per_class_recall = {1.0, 0.5, std::numeric_limits<double>::quiet_NaN()};
  report.confusion = {{2, 0, 0}, {1, 1, 0}, {0, 0, 0}};
  ecan::write_report_json(report, report_path);
  {
    std::ifstream in(report_path);
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("uar").get<double>() == 0.75);
    CHECK(j.at("accuracy").get<double>() == 0.8);
    CHECK(j.at("per_class_recall")[2].is_null());
    CHECK(j.at("confusion")[0][0].get<int>() == 2);
  }

  const EcanModel model = identity_model(2, 2, 1.0);
  const Matrix pts = random_points(5, 2, 60);
  const Projection proj =
      ecan::project_2d(model, corpus_from(pts, {0, 1, 0, 1, -1}, 2));
  ecan::write_projection_csv(proj, csv_path);
  {
    std::ifstream in(csv_path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "x,y,label");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      if (!line.empty()) ++rows;
    }
    CHECK(rows == 5);
  }

  ecan::write_projection_summary(proj, std::numeric_limits<double>::quiet_NaN(),
                                 summary_path);
  {
    std::ifstream in(summary_path);
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("cluster_quality").is_null());
    CHECK(j.at("variance_captured").get<double>() >= 0.0);
    CHECK(j.at("eigenvalues").size() == 2);
  }

  std::remove(report_path.c_str());
  std::remove(csv_path.c_str());
  std::remove(summary_path.c_str());
}
