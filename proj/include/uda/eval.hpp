#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uda/data.hpp"
#include "uda/model.hpp"

namespace uda {

// The binary domain classifier behind the A-distance. d_A values are only
// comparable under a fixed probe, so this config is reported alongside them.
struct ProbeConfig {
  int hidden = 32;
  int steps = 500;
  double lr = 0.1;
  double momentum = 0.9;
  int batch = 64;
};

struct EvalReport {
  double source_accuracy = 0.0;
  double target_accuracy = 0.0;
  double a_distance = 0.0;
  int n_source = 0;
  int n_target = 0;
  ProbeConfig probe;
};

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

inline double a_distance_from_error(double eps) { return 2.0 * (1.0 - 2.0 * eps); }

// Splits each feature set 50/50 (seeded shuffle), trains a fresh 2-layer
// probe to classify domain, and returns 2*(1 - 2*test_error).
double a_distance(const Tensor& source_features, const Tensor& target_features,
                  const ProbeConfig& cfg, std::uint64_t seed);

// One CSV per domain: feature_0..feature_{d-1},label,domain. Target labels
// come from the hidden ground-truth store.
void export_features(ModelParams& model, const LabeledSet& source, const UnlabeledSet& target,
                     const HiddenLabels& target_truth, const std::string& dir);

void write_report(const EvalReport& r, const std::string& path);
EvalReport read_report(const std::string& path);

}  // namespace uda
