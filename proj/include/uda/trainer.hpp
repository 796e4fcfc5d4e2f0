#pragma once

#include <functional>
#include <string>
#include <vector>

#include "uda/data.hpp"
#include "uda/losses.hpp"
#include "uda/mining.hpp"
#include "uda/model.hpp"

namespace uda {

struct TrainConfig {
  LossConfig loss;
  MiningConfig mining;
  int s0 = 4000;             // max co-training steps
  int pretrain_steps = 2000; // classifier warm-up; one refresh period
  int batch_size = 64;       // even; half source, half target
  double lr0 = 0.02;
  double momentum = 0.9;
  double lr_alpha = 10.0;
  double lr_beta = 0.75;
  double grl_gamma = 10.0;
  double head_lr_multiplier = 1.0;  // classifier/discriminator lr factor
  double pretrain_acc_floor = 0.9;
  bool use_target_entropy = true;   // Em term; off for the plain DANN ablation
  std::uint64_t seed = 1;
};

// Heavy-ball velocity buffers, one per parameter tensor.
struct OptimizerState {
  std::vector<std::vector<double>> velocity;
};

OptimizerState make_optimizer_state(const std::vector<Tensor*>& params);
// v <- momentum * v + g ; p <- p - lr * v
void sgd_momentum_step(const std::vector<Tensor*>& params, OptimizerState& state, double lr,
                       double momentum);

// lr0 * (1 + lr_alpha * p)^(-lr_beta), p = step / s0
double lr_schedule(int step, int s0, double lr0, double lr_alpha, double lr_beta);
// 2 / (1 + exp(-grl_gamma * p)) - 1, ramping the reversal in over training
double grl_schedule(int step, int s0, double grl_gamma);

struct StepRecord {
  int step = 0;
  double loss_total = 0.0;
  double loss_cls = 0.0;
  double loss_adv = 0.0;
  double loss_bptri = 0.0;
  int n_pseudo = 0;
  double threshold_mean = 0.0;
  double src_acc = 0.0;
  double tgt_acc = 0.0;
  double wall_ms = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<std::string> warnings;
};

// Evaluation hook: maps (model, step) to {source accuracy, target accuracy}.
// The trainer never sees hidden target labels; accuracy against them comes
// in through this probe, wired up by the caller.
using MetricsProbe = std::function<std::pair<double, double>(ModelParams&, int)>;
using CheckpointSink = std::function<void(const ModelParams&, int)>;

// Classifier warm-up on classification + lambda1 * adversarial loss over
// half source / half raw-target batches. No triplet term.
TrainLog pretrain(ModelParams& model, const LabeledSet& source, const UnlabeledSet& target,
                  const TrainConfig& cfg, const MetricsProbe& probe = {});

struct TrainResult {
  TrainLog log;
  std::vector<int> target_predictions;
};

// The co-training loop: refresh pseudo-labels at s=1 and every
// refresh_period steps, build half/half batches over the selected pool,
// minimize lambda1*adv + lambda2*bptri + cls with one SGD step per training
// step. Gradient reversal encodes the discriminator's max.
TrainResult train(ModelParams& model, const LabeledSet& source, const UnlabeledSet& target,
                  const TrainConfig& cfg, const MetricsProbe& probe = {},
                  const CheckpointSink& checkpoint = {});

}  // namespace uda
