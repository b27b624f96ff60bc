#include "ecan/data.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ecan/errors.hpp"
#include "ecan/rng.hpp"

namespace ecan {

using nlohmann::json;

bool Corpus::fully_labeled() const {
  if (labels.size() != size()) return false;
  for (int l : labels)
    if (l < 0) return false;
  return true;
}

void ShiftSpec::validate() const {
  if (class_count < 2) throw ConfigError("shift spec: need at least 2 classes");
  if (dim < 2) throw ConfigError("shift spec: need dim >= 2 (rotation plane)");
  if (samples_per_class == 0) throw ConfigError("shift spec: samples_per_class must be positive");
  if (scale <= 0.0) throw ConfigError("shift spec: scale must be positive");
  if (noise_sigma < 0.0) throw ConfigError("shift spec: noise_sigma must be nonnegative");
  if (!translation.empty() && translation.size() != dim) {
    throw ConfigError("shift spec: translation length must equal dim");
  }
  if (!class_imbalance.empty() && class_imbalance.size() != class_count) {
    throw ConfigError("shift spec: class_imbalance length must equal class_count");
  }
}

namespace {

constexpr double kClusterStd = 0.3;
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<std::size_t> per_class_counts(const ShiftSpec& spec) {
  std::vector<std::size_t> counts(spec.class_count, spec.samples_per_class);
  if (!spec.class_imbalance.empty()) {
    for (std::size_t c = 0; c < spec.class_count; ++c) {
      const long long scaled =
          std::llround(spec.class_imbalance[c] *
                       static_cast<double>(spec.samples_per_class));
      if (scaled < 1) throw ConfigError("shift spec: imbalance gives an empty class");
      counts[c] = static_cast<std::size_t>(scaled);
    }
  }
  return counts;
}

// Class means on the unit circle in dims (0, 1), zeros elsewhere.
std::vector<double> class_mean(std::size_t c, std::size_t class_count,
                               std::size_t dim) {
  std::vector<double> mu(dim, 0.0);
  const double angle = kTwoPi * static_cast<double>(c) /
                       static_cast<double>(class_count);
  mu[0] = std::cos(angle);
  mu[1] = std::sin(angle);
  return mu;
}

Corpus draw_clusters(const ShiftSpec& spec, const std::vector<std::size_t>& counts,
                     Rng& rng, const std::string& name) {
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  Corpus corpus;
  corpus.name = name;
  corpus.class_count = spec.class_count;
  corpus.features = Matrix(total, spec.dim);
  corpus.labels.resize(total);
  std::size_t row = 0;
  for (std::size_t c = 0; c < spec.class_count; ++c) {
    const std::vector<double> mu = class_mean(c, spec.class_count, spec.dim);
    for (std::size_t s = 0; s < counts[c]; ++s, ++row) {
      for (std::size_t j = 0; j < spec.dim; ++j) {
        corpus.features.at(row, j) = mu[j] + kClusterStd * rng.normal();
      }
      corpus.labels[row] = static_cast<int>(c);
    }
  }
  return corpus;
}

void apply_shift(Corpus& corpus, const ShiftSpec& spec, Rng& rng) {
  const double ca = std::cos(spec.rotation_angle);
  const double sa = std::sin(spec.rotation_angle);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto r = corpus.features.row(i);
    const double x0 = r[0], x1 = r[1];
    r[0] = ca * x0 - sa * x1;
    r[1] = sa * x0 + ca * x1;
    for (std::size_t j = 0; j < corpus.dim(); ++j) {
      r[j] *= spec.scale;
      if (!spec.translation.empty()) r[j] += spec.translation[j];
      if (spec.noise_sigma > 0.0) r[j] += spec.noise_sigma * rng.normal();
    }
  }
}

}  // namespace

std::pair<Corpus, Corpus> generate_pair(const ShiftSpec& spec) {
  spec.validate();
  const std::vector<std::size_t> counts = per_class_counts(spec);

  Rng source_rng(mix_seed(spec.seed, 0x736f7572ull));  // "sour" stream
  Corpus source = draw_clusters(spec, counts, source_rng, "source");

  Rng target_rng(mix_seed(spec.seed, 0x74617267ull));  // "targ" stream
  Corpus target = draw_clusters(spec, counts, target_rng, "target");
  apply_shift(target, spec, target_rng);

  return {std::move(source), std::move(target)};
}

std::string manifest_path_for(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension("");
  p += ".manifest.json";
  return p.string();
}

void save_corpus(const Corpus& corpus, const std::string& csv_path) {
  if (corpus.size() == 0 || corpus.dim() == 0) {
    throw DataError("save_corpus: refusing to write an empty corpus");
  }
  if (corpus.labels.size() != corpus.size()) {
    throw DataError("save_corpus: label count does not match sample count");
  }
  if (corpus.class_count == 0) throw DataError("save_corpus: class_count not set");

  std::ofstream out(csv_path);
  if (!out) throw IoError("save_corpus: cannot open " + csv_path);
  out << "label";
  for (std::size_t j = 0; j < corpus.dim(); ++j) out << ",f" << j;
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out << corpus.labels[i];
    for (std::size_t j = 0; j < corpus.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", corpus.features.at(i, j));
      out << ',' << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("save_corpus: write failed for " + csv_path);
  out.close();

  json manifest;
  manifest["name"] = corpus.name;
  manifest["C"] = corpus.class_count;
  manifest["dim"] = corpus.dim();
  manifest["N"] = corpus.size();
  std::ofstream mout(manifest_path_for(csv_path));
  if (!mout) throw IoError("save_corpus: cannot open " + manifest_path_for(csv_path));
  mout << manifest.dump(1) << "\n";
  if (!mout) throw IoError("save_corpus: manifest write failed");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double_field(const std::string& field, const std::string& path,
                          std::size_t line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double x = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw FormatError(path + ": line " + std::to_string(line_no) +
                      ": non-numeric cell '" + field + "'");
  }
  if (!std::isfinite(x)) {
    throw FormatError(path + ": line " + std::to_string(line_no) +
                      ": non-finite feature value");
  }
  return x;
}

}  // namespace

Corpus load_corpus(const std::string& csv_path) {
  const std::string manifest_path = manifest_path_for(csv_path);
  std::ifstream min(manifest_path);
  if (!min) throw IoError("load_corpus: cannot open manifest " + manifest_path);
  json manifest;
  try {
    manifest = json::parse(min);
  } catch (const json::parse_error& e) {
    throw FormatError("manifest " + manifest_path + ": parse error at byte " +
                      std::to_string(e.byte) + ": " + e.what());
  }

  Corpus corpus;
  std::size_t expected_n = 0;
  std::size_t dim = 0;
  try {
    corpus.name = manifest.at("name").get<std::string>();
    corpus.class_count = manifest.at("C").get<std::size_t>();
    dim = manifest.at("dim").get<std::size_t>();
    expected_n = manifest.at("N").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError("manifest " + manifest_path + ": " + e.what());
  }
  if (corpus.class_count == 0 || dim == 0 || expected_n == 0) {
    throw FormatError("manifest " + manifest_path + ": C, dim and N must be positive");
  }

  std::ifstream in(csv_path);
  if (!in) throw IoError("load_corpus: cannot open " + csv_path);

  std::string line;
  if (!std::getline(in, line)) throw FormatError(csv_path + ": missing header line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::string expected_header = "label";
    for (std::size_t j = 0; j < dim; ++j) expected_header += ",f" + std::to_string(j);
    if (line != expected_header) {
      throw FormatError(csv_path + ": line 1: header must be '" + expected_header + "'");
    }
  }

  std::vector<double> values;
  values.reserve(expected_n * dim);
  corpus.labels.reserve(expected_n);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != dim + 1) {
      throw FormatError(csv_path + ": line " + std::to_string(line_no) + ": expected " +
                        std::to_string(dim + 1) + " fields, got " +
                        std::to_string(fields.size()));
    }
    const char* lbegin = fields[0].c_str();
    char* lend = nullptr;
    const long label = std::strtol(lbegin, &lend, 10);
    if (lend == lbegin || *lend != '\0') {
      throw FormatError(csv_path + ": line " + std::to_string(line_no) +
                        ": non-integer label '" + fields[0] + "'");
    }
    if (label < -1 || label >= static_cast<long>(corpus.class_count)) {
      throw FormatError(csv_path + ": line " + std::to_string(line_no) + ": label " +
                        std::to_string(label) + " outside [-1, " +
                        std::to_string(corpus.class_count) + ")");
    }
    corpus.labels.push_back(static_cast<int>(label));
    for (std::size_t j = 0; j < dim; ++j) {
      values.push_back(parse_double_field(fields[j + 1], csv_path, line_no));
    }
  }

  const std::size_t n = corpus.labels.size();
  if (n == 0) throw FormatError(csv_path + ": no samples");
  if (n != expected_n) {
    throw FormatError(csv_path + ": manifest declares N=" + std::to_string(expected_n) +
                      " but file has " + std::to_string(n) + " rows");
  }
  corpus.features.rows = n;
  corpus.features.cols = dim;
  corpus.features.v = std::move(values);
  return corpus;
}

}  // namespace ecan
