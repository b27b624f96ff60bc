#include "ecan/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ecan/errors.hpp"
#include "ecan/rng.hpp"

namespace ecan {

using nlohmann::json;

void ModelSpec::validate() const {
  if (input_dim == 0 || feature_dim == 0 || class_count == 0) {
    throw ConfigError("model spec: input_dim, feature_dim and class_count must be positive");
  }
  for (std::size_t h : hidden) {
    if (h == 0) throw ConfigError("model spec: hidden widths must be positive");
  }
}

namespace {

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> w(fan_in * fan_out);
  for (double& x : w) x = rng.uniform(-a, a);
  return Tensor::matrix(fan_in, fan_out, std::move(w), /*requires_grad=*/true);
}

}  // namespace

EcanModel EcanModel::init(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  EcanModel m;
  m.spec_ = spec;
  Rng rng(mix_seed(seed, 0x6d6f64656cull));  // "model" stream

  std::vector<std::size_t> widths;
  widths.push_back(spec.input_dim);
  for (std::size_t h : spec.hidden) widths.push_back(h);
  widths.push_back(spec.feature_dim);

  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    m.extractor_w_.push_back(glorot_uniform(widths[l], widths[l + 1], rng));
    m.extractor_b_.push_back(
        Tensor::zeros({widths[l + 1]}, /*requires_grad=*/true));
  }
  m.classifier_w_ = glorot_uniform(spec.feature_dim, spec.class_count, rng);
  m.classifier_b_ = Tensor::zeros({spec.class_count}, /*requires_grad=*/true);
  return m;
}

ModelForward EcanModel::forward(Tape& tape, const Tensor& batch) const {
  if (batch.rank() != 2 || batch.cols() != spec_.input_dim) {
    throw DimensionError("forward: batch width " +
                         std::to_string(batch.rank() == 2 ? batch.cols() : 0) +
                         " does not match input_dim " +
                         std::to_string(spec_.input_dim));
  }
  Tensor h = batch;
  for (std::size_t l = 0; l < extractor_w_.size(); ++l) {
    h = tape.add_rowvec(tape.matmul(h, extractor_w_[l]), extractor_b_[l]);
    if (l + 1 < extractor_w_.size()) h = tape.relu(h);
  }
  ModelForward out;
  out.features = h;
  out.logits = tape.add_rowvec(tape.matmul(h, classifier_w_), classifier_b_);
  out.probs = tape.softmax_rows(out.logits);
  return out;
}

std::vector<Tensor> EcanModel::parameters() const {
  std::vector<Tensor> p;
  for (std::size_t l = 0; l < extractor_w_.size(); ++l) {
    p.push_back(extractor_w_[l]);
    p.push_back(extractor_b_[l]);
  }
  p.push_back(classifier_w_);
  p.push_back(classifier_b_);
  return p;
}

EcanModel EcanModel::clone() const {
  EcanModel m;
  m.spec_ = spec_;
  for (std::size_t l = 0; l < extractor_w_.size(); ++l) {
    m.extractor_w_.push_back(extractor_w_[l].clone(/*requires_grad=*/true));
    m.extractor_b_.push_back(extractor_b_[l].clone(/*requires_grad=*/true));
  }
  m.classifier_w_ = classifier_w_.clone(/*requires_grad=*/true);
  m.classifier_b_ = classifier_b_.clone(/*requires_grad=*/true);
  return m;
}

namespace {

json weight_to_json(const Tensor& w) {
  json rows = json::array();
  for (std::size_t i = 0; i < w.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < w.cols(); ++j) row.push_back(w.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json bias_to_json(const Tensor& b) {
  json out = json::array();
  for (double x : b.values()) out.push_back(x);
  return out;
}

Tensor weight_from_json(const json& j, std::size_t rows, std::size_t cols,
                        const char* what) {
  if (!j.is_array() || j.size() != rows) {
    throw FormatError(std::string("model file: ") + what + " has wrong row count");
  }
  std::vector<double> v;
  v.reserve(rows * cols);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols) {
      throw FormatError(std::string("model file: ") + what + " has wrong column count");
    }
    for (const auto& x : row) {
      if (!x.is_number()) throw FormatError(std::string("model file: ") + what + " has a non-numeric entry");
      v.push_back(x.get<double>());
    }
  }
  return Tensor::matrix(rows, cols, std::move(v), /*requires_grad=*/true);
}

Tensor bias_from_json(const json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) {
    throw FormatError(std::string("model file: ") + what + " has wrong length");
  }
  std::vector<double> v;
  v.reserve(n);
  for (const auto& x : j) {
    if (!x.is_number()) throw FormatError(std::string("model file: ") + what + " has a non-numeric entry");
    v.push_back(x.get<double>());
  }
  return Tensor::vector(std::move(v), /*requires_grad=*/true);
}

}  // namespace

void EcanModel::save(const std::string& path) const {
  json j;
  j["format"] = "ecan-model";
  j["version"] = 1;
  j["input_dim"] = spec_.input_dim;
  j["hidden"] = spec_.hidden;
  j["feature_dim"] = spec_.feature_dim;
  j["class_count"] = spec_.class_count;
  json extractor = json::array();
  for (std::size_t l = 0; l < extractor_w_.size(); ++l) {
    json layer;
    layer["weight"] = weight_to_json(extractor_w_[l]);
    layer["bias"] = bias_to_json(extractor_b_[l]);
    extractor.push_back(std::move(layer));
  }
  j["extractor"] = std::move(extractor);
  j["classifier"] = {{"weight", weight_to_json(classifier_w_)},
                     {"bias", bias_to_json(classifier_b_)}};

  std::ofstream out(path);
  if (!out) throw IoError("model save: cannot open " + path);
  out << j.dump(1) << "\n";
  if (!out) throw IoError("model save: write failed for " + path);
}

EcanModel EcanModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("model load: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("model file " + path + ": parse error at byte " +
                      std::to_string(e.byte) + ": " + e.what());
  }

  try {
    if (j.value("format", "") != "ecan-model") {
      throw FormatError("model file " + path + ": missing or wrong format tag");
    }
    ModelSpec spec;
    spec.input_dim = j.at("input_dim").get<std::size_t>();
    spec.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    spec.feature_dim = j.at("feature_dim").get<std::size_t>();
    spec.class_count = j.at("class_count").get<std::size_t>();
    spec.validate();

    std::vector<std::size_t> widths;
    widths.push_back(spec.input_dim);
    for (std::size_t h : spec.hidden) widths.push_back(h);
    widths.push_back(spec.feature_dim);

    const json& extractor = j.at("extractor");
    if (!extractor.is_array() || extractor.size() + 1 != widths.size()) {
      throw FormatError("model file " + path + ": extractor layer count does not match hidden spec");
    }

    EcanModel m;
    m.spec_ = spec;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      m.extractor_w_.push_back(weight_from_json(extractor[l].at("weight"),
                                                widths[l], widths[l + 1],
                                                "extractor weight"));
      m.extractor_b_.push_back(
          bias_from_json(extractor[l].at("bias"), widths[l + 1], "extractor bias"));
    }
    m.classifier_w_ = weight_from_json(j.at("classifier").at("weight"),
                                       spec.feature_dim, spec.class_count,
                                       "classifier weight");
    m.classifier_b_ = bias_from_json(j.at("classifier").at("bias"),
                                     spec.class_count, "classifier bias");
    return m;
  } catch (const json::exception& e) {
    throw FormatError("model file " + path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError("model file " + path + ": " + e.what());
  }
}

}  // namespace ecan
