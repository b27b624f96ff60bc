#pragma once

#include <string>
#include <vector>

#include "ecan/data.hpp"
#include "ecan/losses.hpp"
#include "ecan/model.hpp"
#include "ecan/trainer.hpp"

namespace ecan {

// Union of every tunable the command-line surface understands, with the
// stock shift-task parameters as defaults. One flat JSON object <-> one
// RunConfig; command flags override file values.
struct RunConfig {
  HyperParams hp;
  ModelSpec model;

  // synthetic-pair generation
  std::size_t samples_per_class = 150;
  double rotation_angle = 0.5235987755982988;  // pi/6
  double translation = 0.5;  // scalar, replicated across all dims
  double scale = 1.2;
  double noise_sigma = 0.1;
  std::vector<double> class_imbalance;  // empty = balanced

  // paths
  std::string source;
  std::string target;
  std::string model_in;
  std::string model_out;
  std::string log_out;
  std::string out_dir;

  AblationFlags ablation;

  // set when the file (or a flag) pinned these, so commands know whether to
  // adopt corpus dimensions instead
  bool explicit_input_dim = false;
  bool explicit_class_count = false;
};

/// Merge a flat-key JSON file into cfg. Unknown keys are rejected.
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Echo of the effective configuration, written as resolved_config.json so a
/// run can be reproduced from its output directory alone.
void write_resolved_config(const RunConfig& cfg, const std::string& path);

ShiftSpec shift_spec_from(const RunConfig& cfg);

}  // namespace ecan
