#pragma once

#include <vector>

#include "uda/tensor.hpp"

namespace uda {

struct LossConfig {
  double alpha = 1.0;    // exponential likelihood hyper-parameter
  double gamma = 1.0;    // focusing parameter of the modulating factor
  double margin = 0.3;   // triplet margin m
  double lambda1 = 1.0;  // adversarial weight
  double lambda2 = 1.0;  // triplet weight
  // Divide each classification term by its own set size. Off = raw sums,
  // kept for exactness tests.
  bool normalize_by_set_size = true;
  // Trainer-side: divide the triplet term by the triplet count. The raw sum
  // grows with the batch and its gradient scales with feature magnitude,
  // which destabilizes any single learning rate; bp_triplet_loss itself
  // always returns the plain sum.
  bool normalize_triplet = true;
  // Ablation: treat the modulating weight as a constant during backward.
  bool omega_stop_grad = false;
};

// Indices into a mixed batch; label(anchor) == label(positive) != label(negative).
struct Triplet {
  int anchor;
  int positive;
  int negative;
};

// Pairwise likelihood p(s_ij, s_ik | f_i, f_j, f_k): the closed form
// exp(alpha * ((-1)^s_ij * d_ij + (-1)^s_ik * d_ik - (s_ij XOR s_ik) * m)),
// which reproduces all four piecewise exponential branches exactly.
double pair_likelihood(int s_ij, int s_ik, double d_ij, double d_ik, double alpha,
                       double margin);

// Self-weighting triplet loss over the given index triples:
//   sum over triplets of  alpha * (1 - exp(-alpha * v+))^gamma * v+
// with v = d(anchor,positive) - d(anchor,negative) + m and v+ = max(v, 0).
// The weight is computed from the clamped violation so fractional gamma is
// well defined; this matches the hinged objective exactly. Empty list -> 0.
Tape::Id bp_triplet_loss(Tape& tape, Tape::Id features, const std::vector<Triplet>& triplets,
                         const LossConfig& cfg);

// Source cross-entropy plus target conditional entropy, each term divided by
// its own set size (or left as raw sums when the config says so). Either
// log-prob block may be Tape::kNone to mean "empty set contributes 0".
Tape::Id classification_loss(Tape& tape, Tape::Id source_logprobs,
                             const std::vector<int>& source_labels, Tape::Id target_logprobs,
                             const LossConfig& cfg);

// Mean 2-way cross-entropy of the domain discriminator over the batch. The
// min/max game is realized by the gradient reversal inside discriminate, so
// the trainer minimizes this single value for all parameter groups.
Tape::Id adversarial_loss(Tape& tape, Tape::Id domain_logprobs,
                          const std::vector<int>& domain_labels);

// lambda1 * adv + lambda2 * bptri + cls
Tape::Id total_loss(Tape& tape, Tape::Id l_adv, Tape::Id l_bptri, Tape::Id l_cls,
                    const LossConfig& cfg);

}  // namespace uda
