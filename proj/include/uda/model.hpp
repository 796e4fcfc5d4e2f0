#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uda/tensor.hpp"

namespace uda {

// Widths from input to output, e.g. {2, 64, 32}. Hidden layers are
// rectified, the final layer is linear.
struct MlpSpec {
  std::vector<int> widths;
};

struct LinearLayer {
  Tensor w;  // [in x out]
  Tensor b;  // [out]
};

struct Mlp {
  MlpSpec spec;
  std::vector<LinearLayer> layers;
};

// The three parametric networks: feature extractor, label classifier head,
// domain discriminator (2-way).
struct ModelParams {
  Mlp feature;
  Mlp classifier;
  Mlp discriminator;
};

// Fan-scaled uniform init (bound sqrt(6/(fan_in+fan_out))), zero biases,
// deterministic in the seed.
Mlp init_mlp(const MlpSpec& spec, Rng& rng);
ModelParams init_params(const MlpSpec& spec_f, const MlpSpec& spec_y, const MlpSpec& spec_d,
                        std::uint64_t seed);

Tape::Id mlp_forward(Tape& tape, Mlp& mlp, Tape::Id x);
Tape::Id forward_features(Tape& tape, ModelParams& params, Tape::Id x);
// Log-probabilities per category; exponentiate on demand for probabilities.
Tape::Id classify_logprobs(Tape& tape, ModelParams& params, Tape::Id features);
// Applies gradient reversal to the features before the discriminator.
Tape::Id discriminate_logprobs(Tape& tape, ModelParams& params, Tape::Id features,
                               double grl_coeff);

// Parameter tensors in a stable order (feature, classifier, discriminator).
std::vector<Tensor*> param_tensors(ModelParams& params);
std::vector<Tensor*> param_tensors(Mlp& mlp);
void zero_grads(ModelParams& params);

// Grad-free convenience forwards for evaluation and mining.
Tensor extract_features(ModelParams& params, const Tensor& x);
Tensor predict_logprobs(ModelParams& params, const Tensor& x);
std::vector<int> predict_labels(ModelParams& params, const Tensor& x);

// Checkpoint container: "UDACKPT1" magic, little-endian u32 counts/dims and
// f64 payloads, named tensors. Layout documented in the README.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace uda
