#include "uda/mining.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace uda {

double dynamic_threshold(std::span<const double> probs, double warm_floor) {
  if (probs.size() < 2) throw config_error("dynamic_threshold needs at least 2 classes");
  if (!(warm_floor > 0.0 && warm_floor < 1.0))
    throw config_error("warm threshold must lie in (0,1)");
  long double total = 0.0L;
  std::size_t best = 0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const double p = probs[c];
    if (!(p >= 0.0) || !(p <= 1.0)) throw config_error("invalid probability row");
    total += static_cast<long double>(p);
    if (p > probs[best]) best = c;
  }
  if (std::abs(static_cast<double>(total) - 1.0) > 1e-9)
    throw config_error("probability row does not sum to 1");

  long double entropy_total = 0.0L;
  for (const double p : probs)
    if (p > 0.0) entropy_total -= static_cast<long double>(p) * std::log(static_cast<long double>(p));
  const double p_i = probs[best];
  const long double entropy_best =
      p_i > 0.0 ? -static_cast<long double>(p_i) * std::log(static_cast<long double>(p_i))
                : 0.0L;

  long double ratio = entropy_total < 1e-12L ? 0.0L : entropy_best / entropy_total;
  const double t = static_cast<double>(1.0L - ratio);
  return std::max(warm_floor, t);
}

namespace {

int argmax_row(const Tensor& probs, int row) {
  int best = 0;
  for (int j = 1; j < probs.cols(); ++j)
    if (probs.at2(row, j) > probs.at2(row, best)) best = j;
  return best;
}

}  // namespace

std::vector<PseudoLabeled> assign_pseudo_labels(const Tensor& probs, const MiningConfig& cfg) {
  std::vector<PseudoLabeled> selected;
  const int n = probs.rows();
  const int c = probs.cols();
  for (int i = 0; i < n; ++i) {
    std::span<const double> row(probs.data() + static_cast<std::size_t>(i) * c,
                                static_cast<std::size_t>(c));
    const double threshold = dynamic_threshold(row, cfg.warm_threshold);
    const int label = argmax_row(probs, i);
    const double confidence = probs.at2(i, label);
    if (confidence >= threshold) selected.push_back({i, label, confidence, threshold});
  }
  return selected;
}

double mean_threshold(const Tensor& probs, const MiningConfig& cfg) {
  const int n = probs.rows();
  if (n == 0) return 0.0;
  const int c = probs.cols();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    std::span<const double> row(probs.data() + static_cast<std::size_t>(i) * c,
                                static_cast<std::size_t>(c));
    acc += dynamic_threshold(row, cfg.warm_threshold);
  }
  return acc / n;
}

std::set<int> eligible_categories(const std::vector<PseudoLabeled>& selected, int n0) {
  std::map<int, int> counts;
  for (const PseudoLabeled& p : selected) ++counts[p.pseudo_label];
  std::set<int> eligible;
  for (const auto& [label, count] : counts)
    if (count >= n0) eligible.insert(label);
  return eligible;
}

namespace {

// Uniform draw of k items: without replacement when the pool suffices
// (partial Fisher-Yates), with replacement otherwise.
std::vector<int> draw(int pool, int k, Rng& rng) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  if (pool >= k) {
    std::vector<int> idx(static_cast<std::size_t>(pool));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
      const int j = i + rng.index(pool - i);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      out.push_back(idx[static_cast<std::size_t>(i)]);
    }
  } else {
    for (int i = 0; i < k; ++i) out.push_back(rng.index(pool));
  }
  return out;
}

}  // namespace

MixedBatch build_batch(int n_source, const std::vector<int>& source_labels,
                       const std::vector<PseudoLabeled>& target_selected, int batch_size,
                       Rng& rng) {
  if (batch_size < 2 || batch_size % 2 != 0)
    throw config_error("batch_size must be even and >= 2");
  if (n_source <= 0) throw config_error("source dataset is empty");
  if (static_cast<int>(source_labels.size()) != n_source)
    throw shape_error("one label per source sample required");

  MixedBatch batch;
  const int half = batch_size / 2;
  const int n_src_draw = target_selected.empty() ? batch_size : half;
  for (int i : draw(n_source, n_src_draw, rng))
    batch.members.push_back({0, i, source_labels[static_cast<std::size_t>(i)]});
  if (!target_selected.empty()) {
    for (int k : draw(static_cast<int>(target_selected.size()), half, rng)) {
      const PseudoLabeled& p = target_selected[static_cast<std::size_t>(k)];
      batch.members.push_back({1, p.sample_index, p.pseudo_label});
    }
  }
  return batch;
}

std::vector<Triplet> sample_triplets(const std::vector<BatchMember>& members,
                                     const std::set<int>& eligible, const MiningConfig& cfg,
                                     Rng& rng) {
  if (cfg.triplets_per_anchor < 1)
    throw config_error("triplets_per_anchor must be positive");
  const int n = static_cast<int>(members.size());
  std::vector<Triplet> out;
  std::vector<int> positives, negatives;
  for (int a = 0; a < n; ++a) {
    const BatchMember& anchor = members[static_cast<std::size_t>(a)];
    // source labels are ground truth; pseudo-categories must be eligible
    if (anchor.domain != 0 && eligible.find(anchor.label) == eligible.end()) continue;
    positives.clear();
    negatives.clear();
    for (int i = 0; i < n; ++i) {
      if (i == a) continue;
      if (members[static_cast<std::size_t>(i)].label == anchor.label)
        positives.push_back(i);
      else
        negatives.push_back(i);
    }
    if (positives.empty() || negatives.empty()) continue;
    for (int t = 0; t < cfg.triplets_per_anchor; ++t) {
      const int p = positives[static_cast<std::size_t>(rng.index(static_cast<int>(positives.size())))];
      const int g = negatives[static_cast<std::size_t>(rng.index(static_cast<int>(negatives.size())))];
      out.push_back({a, p, g});
    }
  }
  return out;
}

}  // namespace uda
