#pragma once

#include <string>
#include <vector>

#include "uda/data.hpp"
#include "uda/eval.hpp"
#include "uda/trainer.hpp"

namespace uda {

// Everything a run needs; every field has a default and a fully defaulted
// config is runnable (synthetic task). Serialized as flat key=value text.
struct RunConfig {
  std::string manifest;  // empty -> synthetic data from the spec below
  ShiftSpec data;

  std::vector<int> feature_widths = {2, 64, 32};
  std::vector<int> classifier_hidden;           // empty -> single linear layer
  std::vector<int> discriminator_hidden = {32};

  TrainConfig train;
  ProbeConfig probe;

  int compare_seeds = 5;
  std::string out_dir = "runs/out";
  bool export_feature_matrices = false;
};

// All recognized keys in serialization order.
std::vector<std::string> config_keys();

// Unknown keys or malformed values raise config_error with the field name.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);
void load_config_file(RunConfig& cfg, const std::string& path);
std::string get_config_entry(const RunConfig& cfg, const std::string& key);
std::string resolved_config_text(const RunConfig& cfg);
void validate_config(const RunConfig& cfg);

}  // namespace uda
