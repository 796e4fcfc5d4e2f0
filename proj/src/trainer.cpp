#include "uda/trainer.hpp"

#include <chrono>
#include <cmath>

namespace uda {

namespace {

void validate(const TrainConfig& cfg) {
  if (cfg.s0 < 0 || cfg.pretrain_steps < 0) throw config_error("step counts must be >= 0");
  if (cfg.batch_size < 2 || cfg.batch_size % 2 != 0)
    throw config_error("batch_size must be even and >= 2");
  if (!(cfg.lr0 > 0.0)) throw config_error("lr0 must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw config_error("momentum must lie in [0,1)");
  if (cfg.mining.refresh_period < 1) throw config_error("refresh_period must be positive");
  if (cfg.mining.n0 < 1) throw config_error("n0 must be positive");
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Gathers the feature rows of a mixed batch into one [b x d] input.
Tensor gather_rows(const Tensor& src, const Tensor& tgt,
                   const std::vector<BatchMember>& members) {
  const int d = src.cols();
  Tensor out(Shape{static_cast<int>(members.size()), d});
  for (std::size_t k = 0; k < members.size(); ++k) {
    const Tensor& from = members[k].domain == 0 ? src : tgt;
    const double* row = from.data() + static_cast<std::size_t>(members[k].index) * d;
    std::copy(row, row + d, out.data() + k * d);
  }
  return out;
}

struct BatchViews {
  std::vector<int> source_rows, target_rows;
  std::vector<int> source_labels, domain_labels;
};

BatchViews split_batch(const std::vector<BatchMember>& members) {
  BatchViews v;
  for (std::size_t k = 0; k < members.size(); ++k) {
    v.domain_labels.push_back(members[k].domain);
    if (members[k].domain == 0) {
      v.source_rows.push_back(static_cast<int>(k));
      v.source_labels.push_back(members[k].label);
    } else {
      v.target_rows.push_back(static_cast<int>(k));
    }
  }
  return v;
}

double source_train_accuracy(ModelParams& model, const LabeledSet& source) {
  const std::vector<int> pred = predict_labels(model, source.x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == source.y[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// Feature extractor and heads step separately so the head learning rate
// can be scaled; with multiplier 1 the updates match a single joint step.
struct Optimizer {
  std::vector<Tensor*> feat, heads;
  OptimizerState feat_state, head_state;

  explicit Optimizer(ModelParams& model) {
    feat = param_tensors(model.feature);
    heads = param_tensors(model.classifier);
    for (Tensor* t : param_tensors(model.discriminator)) heads.push_back(t);
    feat_state = make_optimizer_state(feat);
    head_state = make_optimizer_state(heads);
  }

  void step(const TrainConfig& cfg, double lr) {
    sgd_momentum_step(feat, feat_state, lr, cfg.momentum);
    sgd_momentum_step(heads, head_state, lr * cfg.head_lr_multiplier, cfg.momentum);
  }
};

}  // namespace

OptimizerState make_optimizer_state(const std::vector<Tensor*>& params) {
  OptimizerState state;
  for (const Tensor* t : params) state.velocity.emplace_back(t->size(), 0.0);
  return state;
}

void sgd_momentum_step(const std::vector<Tensor*>& params, OptimizerState& state, double lr,
                       double momentum) {
  if (params.size() != state.velocity.size())
    throw shape_error("optimizer state does not match parameter list");
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    std::vector<double>& v = state.velocity[k];
    if (v.size() != p.size()) throw shape_error("velocity shape mismatch");
    p.ensure_grad();
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = momentum * v[i] + p.grad[i];
      p.values[i] -= lr * v[i];
    }
  }
}

double lr_schedule(int step, int s0, double lr0, double lr_alpha, double lr_beta) {
  const double p = s0 > 0 ? static_cast<double>(step) / s0 : 0.0;
  return lr0 * std::pow(1.0 + lr_alpha * p, -lr_beta);
}

double grl_schedule(int step, int s0, double grl_gamma) {
  const double p = s0 > 0 ? static_cast<double>(step) / s0 : 0.0;
  return 2.0 / (1.0 + std::exp(-grl_gamma * p)) - 1.0;
}

TrainLog pretrain(ModelParams& model, const LabeledSet& source, const UnlabeledSet& target,
                  const TrainConfig& cfg, const MetricsProbe& probe) {
  validate(cfg);
  if (source.x.rows() == 0 || target.x.rows() == 0)
    throw config_error("pretrain needs non-empty source and target sets");

  TrainLog log;
  if (cfg.pretrain_steps == 0) return log;

  const int half = cfg.batch_size / 2;
  BatchIterator src_iter(source.x.rows(), half, Rng(mix_seed(cfg.seed, 0x707273ULL)));
  BatchIterator tgt_iter(target.x.rows(), half, Rng(mix_seed(cfg.seed, 0x707274ULL)));

  Optimizer opt(model);
  const auto t0 = std::chrono::steady_clock::now();
  for (int s = 1; s <= cfg.pretrain_steps; ++s) {
    std::vector<BatchMember> members;
    for (int i : src_iter.next()) members.push_back({0, i, source.y[static_cast<std::size_t>(i)]});
    for (int i : tgt_iter.next()) members.push_back({1, i, -1});
    const BatchViews views = split_batch(members);

    Tape tape;
    Tape::Id x = tape.input(gather_rows(source.x, target.x, members));
    Tape::Id features = forward_features(tape, model, x);
    Tape::Id logp = classify_logprobs(tape, model, features);
    Tape::Id src_logp = tape.select_rows(logp, views.source_rows);
    Tape::Id tgt_logp = cfg.use_target_entropy ? tape.select_rows(logp, views.target_rows)
                                               : Tape::kNone;
    Tape::Id cls = classification_loss(tape, src_logp, views.source_labels, tgt_logp, cfg.loss);

    const double grl = grl_schedule(s, cfg.pretrain_steps, cfg.grl_gamma);
    Tape::Id dom_logp = discriminate_logprobs(tape, model, features, grl);
    Tape::Id adv = adversarial_loss(tape, dom_logp, views.domain_labels);

    Tape::Id loss = tape.add(tape.mul_scalar(adv, cfg.loss.lambda1), cls);
    const double loss_v = tape.scalar_value(loss);
    if (!std::isfinite(loss_v))
      throw numeric_error("pretrain diverged at step " + std::to_string(s) +
                          " (loss = " + fmt_double(loss_v) + ")");

    zero_grads(model);
    tape.backward(loss);
    opt.step(cfg, lr_schedule(s, cfg.pretrain_steps, cfg.lr0, cfg.lr_alpha, cfg.lr_beta));

    StepRecord rec;
    rec.step = s;
    rec.loss_total = loss_v;
    rec.loss_cls = tape.scalar_value(cls);
    rec.loss_adv = tape.scalar_value(adv);
    rec.wall_ms = elapsed_ms(t0);
    if (probe && (s == cfg.pretrain_steps || s % cfg.mining.refresh_period == 0)) {
      const auto [sa, ta] = probe(model, s);
      rec.src_acc = sa;
      rec.tgt_acc = ta;
    }
    log.steps.push_back(rec);
  }

  const double src_acc = source_train_accuracy(model, source);
  if (src_acc < cfg.pretrain_acc_floor)
    log.warnings.push_back("pretrain source accuracy " + fmt_double(src_acc) +
                           " below floor " + fmt_double(cfg.pretrain_acc_floor));
  return log;
}

TrainResult train(ModelParams& model, const LabeledSet& source, const UnlabeledSet& target,
                  const TrainConfig& cfg, const MetricsProbe& probe,
                  const CheckpointSink& checkpoint) {
  validate(cfg);
  if (source.x.rows() == 0 || target.x.rows() == 0)
    throw config_error("train needs non-empty source and target sets");

  TrainResult result;
  Rng rng(mix_seed(cfg.seed, 0x747261696eULL));
  Optimizer opt(model);

  std::vector<PseudoLabeled> selected;
  std::set<int> eligible;
  double thr_mean = 0.0;
  double src_acc = 0.0, tgt_acc = 0.0;

  const auto t0 = std::chrono::steady_clock::now();
  for (int s = 1; s <= cfg.s0; ++s) {
    if (s == 1 || s % cfg.mining.refresh_period == 0) {
      Tensor logp = predict_logprobs(model, target.x);
      Tensor probs(logp.shape());
      for (std::size_t i = 0; i < logp.size(); ++i) probs.values[i] = std::exp(logp.values[i]);
      selected = assign_pseudo_labels(probs, cfg.mining);
      eligible = eligible_categories(selected, cfg.mining.n0);
      thr_mean = mean_threshold(probs, cfg.mining);
      if (probe) {
        const auto [sa, ta] = probe(model, s);
        src_acc = sa;
        tgt_acc = ta;
      }
      if (checkpoint) checkpoint(model, s);
    }

    MixedBatch batch = build_batch(source.x.rows(), source.y, selected, cfg.batch_size, rng);
    const BatchViews views = split_batch(batch.members);
    std::vector<Triplet> triplets;
    if (!eligible.empty()) triplets = sample_triplets(batch.members, eligible, cfg.mining, rng);

    Tape tape;
    Tape::Id x = tape.input(gather_rows(source.x, target.x, batch.members));
    Tape::Id features = forward_features(tape, model, x);

    Tape::Id logp = classify_logprobs(tape, model, features);
    Tape::Id src_logp = tape.select_rows(logp, views.source_rows);
    Tape::Id tgt_logp = (cfg.use_target_entropy && !views.target_rows.empty())
                            ? tape.select_rows(logp, views.target_rows)
                            : Tape::kNone;
    Tape::Id cls = classification_loss(tape, src_logp, views.source_labels, tgt_logp, cfg.loss);

    const double grl = grl_schedule(s, cfg.s0, cfg.grl_gamma);
    Tape::Id dom_logp = discriminate_logprobs(tape, model, features, grl);
    Tape::Id adv = adversarial_loss(tape, dom_logp, views.domain_labels);

    Tape::Id bptri = (cfg.loss.lambda2 != 0.0 && !triplets.empty())
                         ? bp_triplet_loss(tape, features, triplets, cfg.loss)
                         : tape.input(Tensor::scalar(0.0));
    if (cfg.loss.normalize_triplet && !triplets.empty())
      bptri = tape.mul_scalar(bptri, 1.0 / static_cast<double>(triplets.size()));
    Tape::Id loss = total_loss(tape, adv, bptri, cls, cfg.loss);

    const double loss_v = tape.scalar_value(loss);
    if (!std::isfinite(loss_v))
      throw numeric_error("training diverged at step " + std::to_string(s) +
                          " (loss = " + fmt_double(loss_v) + ")");

    zero_grads(model);
    tape.backward(loss);
    opt.step(cfg, lr_schedule(s, cfg.s0, cfg.lr0, cfg.lr_alpha, cfg.lr_beta));

    StepRecord rec;
    rec.step = s;
    rec.loss_total = loss_v;
    rec.loss_cls = tape.scalar_value(cls);
    rec.loss_adv = tape.scalar_value(adv);
    rec.loss_bptri = tape.scalar_value(bptri);
    rec.n_pseudo = static_cast<int>(selected.size());
    rec.threshold_mean = thr_mean;
    rec.src_acc = src_acc;
    rec.tgt_acc = tgt_acc;
    rec.wall_ms = elapsed_ms(t0);
    result.log.steps.push_back(rec);
  }

  result.target_predictions = predict_labels(model, target.x);
  return result;
}

}  // namespace uda
