#pragma once

#include <set>
#include <span>
#include <vector>

#include "uda/losses.hpp"
#include "uda/tensor.hpp"

namespace uda {

// A target sample retained by the confidence gate.
struct PseudoLabeled {
  int sample_index;
  int pseudo_label;
  double confidence;  // argmax probability
  double threshold;   // the dynamic threshold that admitted it
};

struct MiningConfig {
  int n0 = 3;                    // minimum per-category count for pairing
  double warm_threshold = 0.9;   // floor of the dynamic threshold
  int refresh_period = 2000;     // steps between pseudo-label refreshes
  int triplets_per_anchor = 1;
};

// Self-adjusting confidence threshold
//   T = max(floor, 1 - (-p_i log p_i) / (-sum_c p_c log p_c)),  i = argmax
// computed in extended precision. A fully confident row (total entropy
// below 1e-12) takes the ratio as 0, so T = 1 and the sample still passes
// the non-strict p_i >= T gate. Base-invariant: the ratio of entropies
// cancels the logarithm base.
double dynamic_threshold(std::span<const double> probs, double warm_floor = 0.9);

// Argmax pseudo-labels (ties to the lowest index) gated per row by the
// dynamic threshold. Replaces, never merges, earlier selections.
std::vector<PseudoLabeled> assign_pseudo_labels(const Tensor& probs, const MiningConfig& cfg);

// Mean dynamic threshold over all rows, for logging.
double mean_threshold(const Tensor& probs, const MiningConfig& cfg);

// Categories whose selected-sample count reaches n0.
std::set<int> eligible_categories(const std::vector<PseudoLabeled>& selected, int n0);

struct BatchMember {
  int domain;  // 0 source, 1 target
  int index;   // row in its own dataset
  int label;   // ground truth for source, pseudo-label for target
};

struct MixedBatch {
  std::vector<BatchMember> members;  // source half first, then target half
};

// Half source / half selected target. Pools at least as large as a half are
// sampled without replacement, smaller pools with replacement; an empty
// target pool degrades to a source-only batch.
MixedBatch build_batch(int n_source, const std::vector<int>& source_labels,
                       const std::vector<PseudoLabeled>& target_selected, int batch_size,
                       Rng& rng);

// Every member whose category may pair (source always; target only when its
// pseudo-category is eligible) and that has at least one same-category
// partner and one different-category member anchors triplets_per_anchor
// uniform draws.
std::vector<Triplet> sample_triplets(const std::vector<BatchMember>& members,
                                     const std::set<int>& eligible, const MiningConfig& cfg,
                                     Rng& rng);

}  // namespace uda
