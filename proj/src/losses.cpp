#include "uda/losses.hpp"

#include <cmath>

namespace uda {

double pair_likelihood(int s_ij, int s_ik, double d_ij, double d_ik, double alpha,
                       double margin) {
  const double sign_ij = s_ij ? -1.0 : 1.0;
  const double sign_ik = s_ik ? -1.0 : 1.0;
  const double beta = (s_ij ^ s_ik) ? 1.0 : 0.0;
  return std::exp(alpha * (sign_ij * d_ij + sign_ik * d_ik - beta * margin));
}

Tape::Id bp_triplet_loss(Tape& tape, Tape::Id features, const std::vector<Triplet>& triplets,
                         const LossConfig& cfg) {
  if (cfg.alpha <= 0.0) throw config_error("alpha must be positive");
  if (cfg.gamma < 0.0) throw config_error("gamma must be non-negative");
  if (cfg.margin < 0.0) throw config_error("margin must be non-negative");
  if (triplets.empty()) return tape.input(Tensor::scalar(0.0));

  const int rows = tape.value(features).rows();
  Tape::Id total = Tape::kNone;
  for (const Triplet& t : triplets) {
    if (t.anchor < 0 || t.anchor >= rows || t.positive < 0 || t.positive >= rows ||
        t.negative < 0 || t.negative >= rows)
      throw shape_error("triplet index out of range");
    if (t.anchor == t.positive || t.anchor == t.negative || t.positive == t.negative)
      throw shape_error("triplet indices must be distinct");

    Tape::Id d_ij = tape.sqdist_rows(features, t.anchor, t.positive);
    Tape::Id d_ik = tape.sqdist_rows(features, t.anchor, t.negative);
    Tape::Id violation = tape.add_scalar(tape.sub(d_ij, d_ik), cfg.margin);
    Tape::Id clamped = tape.relu(violation);
    Tape::Id omega_src = cfg.omega_stop_grad ? tape.detach(clamped) : clamped;
    // (1 - exp(-alpha * v+))^gamma
    Tape::Id decayed = tape.exp(tape.mul_scalar(omega_src, -cfg.alpha));
    Tape::Id base = tape.add_scalar(tape.mul_scalar(decayed, -1.0), 1.0);
    Tape::Id omega = tape.pow_scalar(base, cfg.gamma);
    Tape::Id term = tape.mul(omega, clamped);
    total = total == Tape::kNone ? term : tape.add(total, term);
  }
  return tape.mul_scalar(total, cfg.alpha);
}

Tape::Id classification_loss(Tape& tape, Tape::Id source_logprobs,
                             const std::vector<int>& source_labels, Tape::Id target_logprobs,
                             const LossConfig& cfg) {
  Tape::Id total = Tape::kNone;

  if (source_logprobs != Tape::kNone && !source_labels.empty()) {
    const int n_s = tape.value(source_logprobs).rows();
    if (n_s != static_cast<int>(source_labels.size()))
      throw shape_error("one label per source row required");
    Tape::Id picked = tape.pick_per_row(source_logprobs, source_labels);
    const double scale = cfg.normalize_by_set_size ? -1.0 / n_s : -1.0;
    total = tape.mul_scalar(tape.sum(picked), scale);
  }

  if (target_logprobs != Tape::kNone && tape.value(target_logprobs).rows() > 0) {
    const int n_t = tape.value(target_logprobs).rows();
    // conditional entropy: -sum_c p_c log p_c, with 0 log 0 = 0
    Tape::Id probs = tape.exp(target_logprobs);
    Tape::Id plogp = tape.mul(probs, target_logprobs);
    const double scale = cfg.normalize_by_set_size ? -1.0 / n_t : -1.0;
    Tape::Id entropy = tape.mul_scalar(tape.sum(plogp), scale);
    total = total == Tape::kNone ? entropy : tape.add(total, entropy);
  }

  if (total == Tape::kNone) return tape.input(Tensor::scalar(0.0));
  return total;
}

Tape::Id adversarial_loss(Tape& tape, Tape::Id domain_logprobs,
                          const std::vector<int>& domain_labels) {
  if (domain_logprobs == Tape::kNone || domain_labels.empty())
    throw shape_error("adversarial loss needs a non-empty batch");
  const Tensor& logp = tape.value(domain_logprobs);
  if (logp.cols() != 2) throw shape_error("domain log-probs must be 2-way");
  if (logp.rows() != static_cast<int>(domain_labels.size()))
    throw shape_error("one domain label per row required");
  for (int d : domain_labels)
    if (d != 0 && d != 1) throw config_error("domain labels must be 0 or 1");
  Tape::Id picked = tape.pick_per_row(domain_logprobs, domain_labels);
  return tape.mul_scalar(tape.sum(picked), -1.0 / logp.rows());
}

Tape::Id total_loss(Tape& tape, Tape::Id l_adv, Tape::Id l_bptri, Tape::Id l_cls,
                    const LossConfig& cfg) {
  Tape::Id weighted = tape.add(tape.mul_scalar(l_adv, cfg.lambda1),
                               tape.mul_scalar(l_bptri, cfg.lambda2));
  return tape.add(weighted, l_cls);
}

}  // namespace uda
