#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ecan/errors.hpp"
#include "ecan/model.hpp"
#include "ecan/rng.hpp"
#include "ecan/tensor.hpp"

using ecan::EcanModel;
using ecan::ModelSpec;
using ecan::Rng;
using ecan::Tape;
using ecan::Tensor;

namespace {

ModelSpec small_spec() {
  ModelSpec s;
  s.input_dim = 8;
  s.hidden = {16};
  s.feature_dim = 4;
  s.class_count = 3;
  return s;
}

Tensor random_batch(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n * dim);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::matrix(n, dim, std::move(v));
}

std::string temp_path(const char* name) {
  return std::string("/tmp/ecan_model_test_") + name + ".json";
}

}  // namespace

TEST_CASE("init is deterministic in the seed") {
  const ModelSpec spec = small_spec();
  const EcanModel a = EcanModel::init(spec, 7);
  const EcanModel b = EcanModel::init(spec, 7);
  const EcanModel c = EcanModel::init(spec, 8);

  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  REQUIRE(pa.size() == pb.size());
  bool any_diff_seed = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].values() == pb[i].values());
    if (pa[i].values() != pc[i].values()) any_diff_seed = true;
  }
  CHECK(any_diff_seed);
}

TEST_CASE("init shapes, zero biases, Glorot bound") {
  const ModelSpec spec = small_spec();
  const EcanModel m = EcanModel::init(spec, 0);

  REQUIRE(m.extractor_layers() == 2);
  CHECK(m.extractor_weight(0).rows() == 8);
  CHECK(m.extractor_weight(0).cols() == 16);
  CHECK(m.extractor_weight(1).rows() == 16);
  CHECK(m.extractor_weight(1).cols() == 4);
  CHECK(m.classifier_weight().rows() == 4);
  CHECK(m.classifier_weight().cols() == 3);
  CHECK(m.classifier_bias().numel() == 3);

  for (double b : m.extractor_bias(0).values()) CHECK(b == 0.0);
  for (double b : m.classifier_bias().values()) CHECK(b == 0.0);

  const double bound = std::sqrt(6.0 / (8.0 + 16.0));
  for (double w : m.extractor_weight(0).values()) {
    CHECK(w >= -bound);
    CHECK(w <= bound);
  }

  // 2 extractor layers + classifier, weight+bias each.
  CHECK(m.parameters().size() == 6);
  for (const Tensor& p : m.parameters()) CHECK(p.requires_grad());
}

TEST_CASE("invalid specs are rejected") {
  ModelSpec s = small_spec();
  s.feature_dim = 0;
  CHECK_THROWS_AS(EcanModel::init(s, 0), ecan::ConfigError);
  s = small_spec();
  s.hidden = {16, 0};
  CHECK_THROWS_AS(EcanModel::init(s, 0), ecan::ConfigError);
  s = small_spec();
  s.class_count = 0;
  CHECK_THROWS_AS(EcanModel::init(s, 0), ecan::ConfigError);
}

TEST_CASE("zeroed classifier predicts uniformly") {
  const EcanModel m = EcanModel::init(small_spec(), 1);
  Tensor w = m.classifier_weight();
  for (double& x : w.values()) x = 0.0;

  Tape tape;
  const auto out = m.forward(tape, random_batch(5, 8, 99));
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(out.probs.at(r, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("forward shapes and probability rows") {
  const EcanModel m = EcanModel::init(small_spec(), 2);
  Tape tape;
  const auto out = m.forward(tape, random_batch(6, 8, 5));
  CHECK(out.features.rows() == 6);
  CHECK(out.features.cols() == 4);
  CHECK(out.logits.cols() == 3);
  for (std::size_t r = 0; r < 6; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) s += out.probs.at(r, c);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }

  CHECK_THROWS_AS(m.forward(tape, random_batch(2, 9, 0)), ecan::DimensionError);
}

TEST_CASE("empty batch forwards to empty outputs") {
  const EcanModel m = EcanModel::init(small_spec(), 3);
  Tape tape;
  const auto out = m.forward(tape, Tensor::matrix(0, 8, {}));
  CHECK(out.features.rows() == 0);
  CHECK(out.features.cols() == 4);
  CHECK(out.probs.rows() == 0);
  CHECK(out.probs.cols() == 3);
}

TEST_CASE("save/load round trip is bit exact") {
  const std::string path = temp_path("roundtrip");
  const EcanModel m = EcanModel::init(small_spec(), 11);
  m.save(path);
  const EcanModel loaded = EcanModel::load(path);

  const auto pm = m.parameters(), pl = loaded.parameters();
  REQUIRE(pm.size() == pl.size());
  for (std::size_t i = 0; i < pm.size(); ++i) CHECK(pm[i].values() == pl[i].values());

  Tape t1, t2;
  const Tensor batch = random_batch(4, 8, 21);
  const auto o1 = m.forward(t1, batch);
  const auto o2 = loaded.forward(t2, batch);
  CHECK(o1.probs.values() == o2.probs.values());
  std::remove(path.c_str());
}

TEST_CASE("load failure modes") {
  CHECK_THROWS_AS(EcanModel::load("/tmp/ecan_no_such_model.json"), ecan::IoError);

  const std::string truncated = temp_path("truncated");
  {
    std::ofstream out(truncated);
    out << "{\"format\": \"ecan-model\", \"version\": 1, \"input_d";
  }
  CHECK_THROWS_AS(EcanModel::load(truncated), ecan::FormatError);
  std::remove(truncated.c_str());

  const std::string wrong_tag = temp_path("wrongtag");
  {
    std::ofstream out(wrong_tag);
    out << "{\"format\": \"other\"}";
  }
  CHECK_THROWS_AS(EcanModel::load(wrong_tag), ecan::FormatError);
  std::remove(wrong_tag.c_str());

  // Declared class_count disagrees with the classifier matrix.
  const std::string mismatched = temp_path("mismatch");
  const EcanModel m = EcanModel::init(small_spec(), 0);
  m.save(mismatched);
  {
    std::ifstream in(mismatched);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    const std::string needle = "\"class_count\": 3";
    const auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, needle.size(), "\"class_count\": 5");
    std::ofstream out(mismatched);
    out << text;
  }
  CHECK_THROWS_AS(EcanModel::load(mismatched), ecan::FormatError);
  std::remove(mismatched.c_str());
}

TEST_CASE("clone is independent") {
  const EcanModel m = EcanModel::init(small_spec(), 4);
  const EcanModel c = m.clone();
  Tensor cw = c.classifier_weight();
  cw.values()[0] += 1.0;
  CHECK(m.classifier_weight().values()[0] != c.classifier_weight().values()[0]);
}
