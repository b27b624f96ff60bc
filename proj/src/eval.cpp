#include "ecan/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "ecan/errors.hpp"
#include "ecan/rng.hpp"
#include "ecan/tensor.hpp"

namespace ecan {

using nlohmann::ordered_json;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

Matrix forward_features(const EcanModel& model, const Corpus& corpus,
                        Matrix* probs_out) {
  if (corpus.size() == 0) throw ConfigError("evaluation: empty corpus");
  if (corpus.dim() != model.spec().input_dim) {
    throw ConfigError("evaluation: corpus dim != model input_dim");
  }
  Tape tape;
  const Tensor batch =
      Tensor::matrix(corpus.size(), corpus.dim(), corpus.features.v);
  const ModelForward out = model.forward(tape, batch);
  if (probs_out) {
    *probs_out = Matrix(corpus.size(), model.spec().class_count);
    probs_out->v = out.probs.values();
  }
  Matrix features(corpus.size(), model.spec().feature_dim);
  features.v = out.features.values();
  return features;
}

int argmax_lowest(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return static_cast<int>(best);
}

}  // namespace

std::vector<int> predict(const EcanModel& model, const Corpus& corpus) {
  Matrix probs;
  forward_features(model, corpus, &probs);
  std::vector<int> preds(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    preds[i] = argmax_lowest(probs.row(i));
  }
  return preds;
}

double unweighted_average_recall(const std::vector<int>& truth,
                                 const std::vector<int>& predictions,
                                 std::size_t class_count) {
  if (truth.size() != predictions.size()) {
    throw DimensionError("uar: truth/prediction length mismatch");
  }
  std::vector<std::size_t> total(class_count, 0), correct(class_count, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    if (t < 0 || static_cast<std::size_t>(t) >= class_count) {
      throw DataError("uar: label outside [0, C)");
    }
    ++total[static_cast<std::size_t>(t)];
    if (predictions[i] == t) ++correct[static_cast<std::size_t>(t)];
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < class_count; ++c) {
    if (total[c] == 0) continue;
    sum += static_cast<double>(correct[c]) / static_cast<double>(total[c]);
    ++present;
  }
  return present == 0 ? kNan : sum / static_cast<double>(present);
}

EvalReport evaluate(const EcanModel& model, const Corpus& corpus) {
  if (!corpus.fully_labeled()) {
    throw UsageError("evaluate: corpus must be fully labeled");
  }
  if (corpus.class_count != model.spec().class_count) {
    throw ConfigError("evaluate: corpus class_count != model class_count");
  }
  const std::vector<int> preds = predict(model, corpus);
  const std::size_t class_count = corpus.class_count;

  EvalReport report;
  report.confusion.assign(class_count, std::vector<std::size_t>(class_count, 0));
  std::size_t correct_total = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto t = static_cast<std::size_t>(corpus.labels[i]);
    const auto p = static_cast<std::size_t>(preds[i]);
    ++report.confusion[t][p];
    if (t == p) ++correct_total;
  }

  report.per_class_recall.assign(class_count, kNan);
  double recall_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < class_count; ++c) {
    std::size_t row_total = 0;
    for (std::size_t p = 0; p < class_count; ++p) row_total += report.confusion[c][p];
    if (row_total == 0) continue;
    report.per_class_recall[c] = static_cast<double>(report.confusion[c][c]) /
                                 static_cast<double>(row_total);
    recall_sum += report.per_class_recall[c];
    ++present;
  }
  if (present == 0) throw DataError("evaluate: no class has any samples");
  report.uar = recall_sum / static_cast<double>(present);
  report.accuracy =
      static_cast<double>(correct_total) / static_cast<double>(corpus.size());
  return report;
}

namespace {

// Symmetric d x d covariance acting on a vector.
std::vector<double> mat_vec(const Matrix& s, const std::vector<double>& x) {
  std::vector<double> y(s.rows, 0.0);
  for (std::size_t r = 0; r < s.rows; ++r) {
    double acc = 0.0;
    const auto row = s.row(r);
    for (std::size_t c = 0; c < s.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

double norm2(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void fix_sign(std::vector<double>& v) {
  for (double x : v) {
    if (std::fabs(x) > 1e-12) {
      if (x < 0.0) {
        for (double& y : v) y = -y;
      }
      return;
    }
  }
}

// Leading eigenvector by 200 power-iteration rounds; returns false when the
// operator is (numerically) zero along every probed direction.
bool power_iterate(const Matrix& s, Rng& rng, std::vector<double>& v,
                   double& eigenvalue) {
  const std::size_t d = s.rows;
  v.assign(d, 0.0);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  double n = norm2(v);
  for (double& x : v) x /= n;
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<double> next = mat_vec(s, v);
    n = norm2(next);
    if (n < 1e-15) return false;
    for (double& x : next) x /= n;
    v = std::move(next);
  }
  eigenvalue = dot(v, mat_vec(s, v));
  return eigenvalue > 1e-15;
}

// Deterministic unit vector orthogonal to v1 (used when the feature cloud is
// effectively one-dimensional).
std::vector<double> orthogonal_completion(const std::vector<double>& v1) {
  const std::size_t d = v1.size();
  std::size_t pick = 0;
  for (std::size_t i = 1; i < d; ++i) {
    if (std::fabs(v1[i]) < std::fabs(v1[pick])) pick = i;
  }
  std::vector<double> v2(d, 0.0);
  v2[pick] = 1.0;
  const double proj = dot(v2, v1);
  for (std::size_t i = 0; i < d; ++i) v2[i] -= proj * v1[i];
  const double n = norm2(v2);
  for (double& x : v2) x /= n;
  return v2;
}

}  // namespace

Projection project_2d(const EcanModel& model, const Corpus& corpus) {
  if (corpus.size() < 3) throw ConfigError("project_2d: need at least 3 samples");
  Matrix features = forward_features(model, corpus, nullptr);
  const std::size_t n = features.rows;
  const std::size_t d = features.cols;

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = features.row(i);
    for (std::size_t c = 0; c < d; ++c) mean[c] += row[c];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = features.row(i);
    for (std::size_t c = 0; c < d; ++c) row[c] -= mean[c];
  }

  Matrix cov(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = features.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) cov.at(a, b) += row[a] * row[b];
    }
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov.at(a, b) /= denom;
      cov.at(b, a) = cov.at(a, b);
    }
  }
  double total_variance = 0.0;
  for (std::size_t a = 0; a < d; ++a) total_variance += cov.at(a, a);
  if (total_variance < 1e-18) {
    throw NumericError("project_2d: features have no variance");
  }

  Rng rng(mix_seed(0x70636132ull));  // fixed internal stream: output is a pure function of inputs
  std::vector<double> v1, v2;
  double ev1 = 0.0, ev2 = 0.0;
  if (!power_iterate(cov, rng, v1, ev1)) {
    throw NumericError("project_2d: power iteration found no leading direction");
  }
  fix_sign(v1);
  ev1 = dot(v1, mat_vec(cov, v1));

  Matrix deflated = cov;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) deflated.at(a, b) -= ev1 * v1[a] * v1[b];
  }
  if (power_iterate(deflated, rng, v2, ev2)) {
    // Re-orthogonalize against v1 to shed deflation round-off.
    const double proj = dot(v2, v1);
    for (std::size_t i = 0; i < d; ++i) v2[i] -= proj * v1[i];
    const double nv = norm2(v2);
    if (nv < 1e-12) {
      v2 = orthogonal_completion(v1);
    } else {
      for (double& x : v2) x /= nv;
    }
  } else {
    v2 = orthogonal_completion(v1);
  }
  fix_sign(v2);
  ev2 = dot(v2, mat_vec(cov, v2));
  if (ev2 < 0.0 && ev2 > -1e-12) ev2 = 0.0;

  Projection out;
  out.points = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = features.row(i);
    double x = 0.0, y = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      x += row[c] * v1[c];
      y += row[c] * v2[c];
    }
    out.points.at(i, 0) = x;
    out.points.at(i, 1) = y;
  }
  out.labels = corpus.labels;
  if (out.labels.size() != n) out.labels.assign(n, -1);
  out.eigenvalues = {ev1, ev2};
  out.variance_captured = std::min(1.0, (ev1 + ev2) / total_variance);
  return out;
}

double cluster_quality(const EcanModel& model, const Corpus& corpus) {
  if (!corpus.fully_labeled()) {
    throw UsageError("cluster_quality: corpus must be fully labeled");
  }
  Matrix features = forward_features(model, corpus, nullptr);
  l2_normalize_rows_inplace(features);
  const std::size_t n = features.rows;

  double intra_sum = 0.0, inter_sum = 0.0;
  std::size_t intra_count = 0, inter_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ri = features.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto rj = features.row(j);
      double cosine = 0.0;
      for (std::size_t c = 0; c < features.cols; ++c) cosine += ri[c] * rj[c];
      if (corpus.labels[i] == corpus.labels[j]) {
        intra_sum += cosine;
        ++intra_count;
      } else {
        inter_sum += cosine;
        ++inter_count;
      }
    }
  }
  if (intra_count == 0 || inter_count == 0) {
    throw DataError("cluster_quality: needs both intra- and inter-class pairs");
  }
  return intra_sum / static_cast<double>(intra_count) -
         inter_sum / static_cast<double>(inter_count);
}

void write_report_json(const EvalReport& report, const std::string& path) {
  ordered_json j;
  j["uar"] = report.uar;
  j["accuracy"] = report.accuracy;
  j["per_class_recall"] = ordered_json::array();
  for (double r : report.per_class_recall) {
    if (std::isnan(r)) {
      j["per_class_recall"].push_back(nullptr);
    } else {
      j["per_class_recall"].push_back(r);
    }
  }
  j["confusion"] = report.confusion;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  out << j.dump(1) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

void write_projection_csv(const Projection& projection, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  out << "x,y,label\n";
  char buf[128];
  for (std::size_t i = 0; i < projection.points.rows; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d", projection.points.at(i, 0),
                  projection.points.at(i, 1), projection.labels[i]);
    out << buf << "\n";
  }
  if (!out) throw IoError("write failed for " + path);
}

void write_projection_summary(const Projection& projection, double cluster_quality,
                              const std::string& path) {
  ordered_json j;
  j["variance_captured"] = projection.variance_captured;
  j["eigenvalues"] = {projection.eigenvalues[0], projection.eigenvalues[1]};
  if (std::isnan(cluster_quality)) {
    j["cluster_quality"] = nullptr;
  } else {
    j["cluster_quality"] = cluster_quality;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  out << j.dump(1) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace ecan
