#include "ecan/run_config.hpp"

#include <fstream>
#include <limits>

#include "json.hpp"

#include "ecan/errors.hpp"

namespace ecan {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::size_t as_count(const json& value, const std::string& key) {
  if (!value.is_number_integer()) {
    throw ConfigError("config: key '" + key + "' must be an integer");
  }
  const long long x = value.get<long long>();
  if (x < 0) throw ConfigError("config: key '" + key + "' must be nonnegative");
  return static_cast<std::size_t>(x);
}

double as_real(const json& value, const std::string& key) {
  if (!value.is_number()) {
    throw ConfigError("config: key '" + key + "' must be a number");
  }
  return value.get<double>();
}

std::string as_text(const json& value, const std::string& key) {
  if (!value.is_string()) {
    throw ConfigError("config: key '" + key + "' must be a string");
  }
  return value.get<std::string>();
}

bool as_flag(const json& value, const std::string& key) {
  if (!value.is_boolean()) {
    throw ConfigError("config: key '" + key + "' must be a boolean");
  }
  return value.get<bool>();
}

}  // namespace

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("config " + path + ": parse error at byte " +
                      std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError("config " + path + ": expected an object");

  for (const auto& [key, value] : j.items()) {
    if (key == "tau") cfg.hp.tau = as_real(value, key);
    else if (key == "k") cfg.hp.k = as_count(value, key);
    else if (key == "lambda") cfg.hp.lambda = as_real(value, key);
    else if (key == "beta") cfg.hp.beta = as_real(value, key);
    else if (key == "batch_size") cfg.hp.batch_size = as_count(value, key);
    else if (key == "epochs") cfg.hp.epochs = as_count(value, key);
    else if (key == "pretrain_epochs") cfg.hp.pretrain_epochs = as_count(value, key);
    else if (key == "lr_pretrain") cfg.hp.lr_pretrain = as_real(value, key);
    else if (key == "lr_adapt") cfg.hp.lr_adapt = as_real(value, key);
    else if (key == "momentum") cfg.hp.momentum = as_real(value, key);
    else if (key == "label_smoothing") cfg.hp.label_smoothing = as_real(value, key);
    else if (key == "seed") cfg.hp.seed = static_cast<std::uint64_t>(as_count(value, key));
    else if (key == "input_dim") {
      cfg.model.input_dim = as_count(value, key);
      cfg.explicit_input_dim = true;
    } else if (key == "hidden") {
      if (!value.is_array()) throw ConfigError("config: key 'hidden' must be an array");
      cfg.model.hidden.clear();
      for (const auto& w : value) cfg.model.hidden.push_back(as_count(w, key));
    } else if (key == "feature_dim") cfg.model.feature_dim = as_count(value, key);
    else if (key == "class_count") {
      cfg.model.class_count = as_count(value, key);
      cfg.explicit_class_count = true;
    } else if (key == "samples_per_class") cfg.samples_per_class = as_count(value, key);
    else if (key == "rotation_angle") cfg.rotation_angle = as_real(value, key);
    else if (key == "translation") cfg.translation = as_real(value, key);
    else if (key == "scale") cfg.scale = as_real(value, key);
    else if (key == "noise_sigma") cfg.noise_sigma = as_real(value, key);
    else if (key == "class_imbalance") {
      if (!value.is_array()) {
        throw ConfigError("config: key 'class_imbalance' must be an array");
      }
      cfg.class_imbalance.clear();
      for (const auto& w : value) cfg.class_imbalance.push_back(as_real(w, key));
    } else if (key == "source") cfg.source = as_text(value, key);
    else if (key == "target") cfg.target = as_text(value, key);
    else if (key == "model_in") cfg.model_in = as_text(value, key);
    else if (key == "model_out") cfg.model_out = as_text(value, key);
    else if (key == "log_out") cfg.log_out = as_text(value, key);
    else if (key == "out_dir") cfg.out_dir = as_text(value, key);
    else if (key == "disable_ncl") cfg.ablation.disable_ncl = as_flag(value, key);
    else if (key == "disable_scl") cfg.ablation.disable_scl = as_flag(value, key);
    else if (key == "disable_div") cfg.ablation.disable_div = as_flag(value, key);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
}

void write_resolved_config(const RunConfig& cfg, const std::string& path) {
  ordered_json j;
  j["tau"] = cfg.hp.tau;
  j["k"] = cfg.hp.k;
  j["lambda"] = cfg.hp.lambda;
  j["beta"] = cfg.hp.beta;
  j["batch_size"] = cfg.hp.batch_size;
  j["epochs"] = cfg.hp.epochs;
  j["pretrain_epochs"] = cfg.hp.pretrain_epochs;
  j["lr_pretrain"] = cfg.hp.lr_pretrain;
  j["lr_adapt"] = cfg.hp.lr_adapt;
  j["momentum"] = cfg.hp.momentum;
  j["label_smoothing"] = cfg.hp.label_smoothing;
  j["seed"] = cfg.hp.seed;
  j["input_dim"] = cfg.model.input_dim;
  j["hidden"] = cfg.model.hidden;
  j["feature_dim"] = cfg.model.feature_dim;
  j["class_count"] = cfg.model.class_count;
  j["samples_per_class"] = cfg.samples_per_class;
  j["rotation_angle"] = cfg.rotation_angle;
  j["translation"] = cfg.translation;
  j["scale"] = cfg.scale;
  j["noise_sigma"] = cfg.noise_sigma;
  j["class_imbalance"] = cfg.class_imbalance;
  j["source"] = cfg.source;
  j["target"] = cfg.target;
  j["model_in"] = cfg.model_in;
  j["model_out"] = cfg.model_out;
  j["log_out"] = cfg.log_out;
  j["out_dir"] = cfg.out_dir;
  j["disable_ncl"] = cfg.ablation.disable_ncl;
  j["disable_scl"] = cfg.ablation.disable_scl;
  j["disable_div"] = cfg.ablation.disable_div;

  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  out << j.dump(1) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

ShiftSpec shift_spec_from(const RunConfig& cfg) {
  ShiftSpec spec;
  spec.class_count = cfg.model.class_count;
  spec.dim = cfg.model.input_dim;
  spec.samples_per_class = cfg.samples_per_class;
  spec.rotation_angle = cfg.rotation_angle;
  if (cfg.translation != 0.0) {
    spec.translation.assign(cfg.model.input_dim, cfg.translation);
  }
  spec.scale = cfg.scale;
  spec.noise_sigma = cfg.noise_sigma;
  spec.class_imbalance = cfg.class_imbalance;
  spec.seed = cfg.hp.seed;
  return spec;
}

}  // namespace ecan
