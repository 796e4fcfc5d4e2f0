#include "uda/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "uda/losses.hpp"
#include "uda/trainer.hpp"

namespace uda {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.empty()) throw config_error("accuracy of an empty prediction set");
  if (predictions.size() != labels.size())
    throw shape_error("predictions and labels differ in length");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

namespace {

struct Split {
  Tensor train_x, test_x;
  std::vector<int> train_y, test_y;
};

// 50/50 per-domain split after a seeded shuffle; domain is the label.
Split split_features(const Tensor& src, const Tensor& tgt, Rng& rng) {
  const int d = src.cols();
  if (tgt.cols() != d) throw shape_error("feature widths differ between domains");

  std::vector<std::pair<const Tensor*, std::vector<int>>> domains;
  for (const Tensor* t : {&src, &tgt}) {
    std::vector<int> idx(static_cast<std::size_t>(t->rows()));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = t->rows() - 1; i > 0; --i)
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(rng.index(i + 1))]);
    domains.emplace_back(t, std::move(idx));
  }

  std::vector<const double*> train_rows, test_rows;
  Split split;
  for (int dom = 0; dom < 2; ++dom) {
    const Tensor* t = domains[static_cast<std::size_t>(dom)].first;
    const std::vector<int>& idx = domains[static_cast<std::size_t>(dom)].second;
    const int half = t->rows() / 2;
    for (int k = 0; k < t->rows(); ++k) {
      const double* row = t->data() + static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]) * d;
      if (k < half) {
        train_rows.push_back(row);
        split.train_y.push_back(dom);
      } else {
        test_rows.push_back(row);
        split.test_y.push_back(dom);
      }
    }
  }

  auto pack = [d](const std::vector<const double*>& rows) {
    Tensor out(Shape{static_cast<int>(rows.size()), d});
    for (std::size_t i = 0; i < rows.size(); ++i)
      std::copy(rows[i], rows[i] + d, out.data() + i * d);
    return out;
  };
  split.train_x = pack(train_rows);
  split.test_x = pack(test_rows);
  return split;
}

}  // namespace

double a_distance(const Tensor& source_features, const Tensor& target_features,
                  const ProbeConfig& cfg, std::uint64_t seed) {
  if (source_features.rows() == 0 || target_features.rows() == 0)
    throw config_error("a_distance needs non-empty feature sets");

  Rng rng(mix_seed(seed, 0x61646973ULL));
  Split split = split_features(source_features, target_features, rng);

  const int d = source_features.cols();
  MlpSpec spec{{d, cfg.hidden, 2}};
  Mlp probe = init_mlp(spec, rng);

  std::vector<Tensor*> params = param_tensors(probe);
  OptimizerState state = make_optimizer_state(params);
  BatchIterator batches(split.train_x.rows(), cfg.batch,
                        Rng(mix_seed(seed, 0x6164697462ULL)));

  for (int s = 1; s <= cfg.steps; ++s) {
    const std::vector<int> idx = batches.next();
    Tensor bx(Shape{static_cast<int>(idx.size()), d});
    std::vector<int> by;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double* row = split.train_x.data() + static_cast<std::size_t>(idx[k]) * d;
      std::copy(row, row + d, bx.data() + k * d);
      by.push_back(split.train_y[static_cast<std::size_t>(idx[k])]);
    }
    Tape tape;
    Tape::Id logits = mlp_forward(tape, probe, tape.input(std::move(bx)));
    Tape::Id logp = tape.log_softmax(logits);
    Tape::Id loss = adversarial_loss(tape, logp, by);
    for (Tensor* t : params) t->zero_grad();
    tape.backward(loss);
    sgd_momentum_step(params, state, cfg.lr, cfg.momentum);
  }

  Tape tape;
  Tape::Id logits = mlp_forward(tape, probe, tape.input(split.test_x));
  const Tensor& out = tape.value(logits);
  std::size_t wrong = 0;
  for (int i = 0; i < out.rows(); ++i) {
    const int pred = out.at2(i, 1) > out.at2(i, 0) ? 1 : 0;
    if (pred != split.test_y[static_cast<std::size_t>(i)]) ++wrong;
  }
  const double eps = static_cast<double>(wrong) / static_cast<double>(out.rows());
  return a_distance_from_error(eps);
}

namespace {

void write_feature_csv(const Tensor& feats, const std::vector<int>& labels,
                       const char* domain, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw io_error("cannot write: " + path);
  for (int j = 0; j < feats.cols(); ++j) os << "feature_" << j << ',';
  os << "label,domain\n";
  for (int i = 0; i < feats.rows(); ++i) {
    for (int j = 0; j < feats.cols(); ++j) os << fmt_double(feats.at2(i, j)) << ',';
    os << labels[static_cast<std::size_t>(i)] << ',' << domain << '\n';
  }
  if (!os) throw io_error("write failed: " + path);
}

}  // namespace

void export_features(ModelParams& model, const LabeledSet& source, const UnlabeledSet& target,
                     const HiddenLabels& target_truth, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const Tensor src_feats = extract_features(model, source.x);
  const Tensor tgt_feats = extract_features(model, target.x);
  write_feature_csv(src_feats, source.y, "source",
                    (std::filesystem::path(dir) / "features_source.csv").string());
  write_feature_csv(tgt_feats, target_truth.y, "target",
                    (std::filesystem::path(dir) / "features_target.csv").string());
}

void write_report(const EvalReport& r, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw io_error("cannot write report: " + path);
  os << "source_accuracy=" << fmt_double(r.source_accuracy) << "\n";
  os << "target_accuracy=" << fmt_double(r.target_accuracy) << "\n";
  os << "a_distance=" << fmt_double(r.a_distance) << "\n";
  os << "n_source=" << r.n_source << "\n";
  os << "n_target=" << r.n_target << "\n";
  os << "probe_hidden=" << r.probe.hidden << "\n";
  os << "probe_steps=" << r.probe.steps << "\n";
  os << "probe_lr=" << fmt_double(r.probe.lr) << "\n";
  os << "probe_momentum=" << fmt_double(r.probe.momentum) << "\n";
  os << "probe_batch=" << r.probe.batch << "\n";
  if (!os) throw io_error("write failed: " + path);
}

EvalReport read_report(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open report: " + path);
  EvalReport r;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw io_error("bad report line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "source_accuracy")
      r.source_accuracy = parse_double(val);
    else if (key == "target_accuracy")
      r.target_accuracy = parse_double(val);
    else if (key == "a_distance")
      r.a_distance = parse_double(val);
    else if (key == "n_source")
      r.n_source = static_cast<int>(parse_int(val));
    else if (key == "n_target")
      r.n_target = static_cast<int>(parse_int(val));
    else if (key == "probe_hidden")
      r.probe.hidden = static_cast<int>(parse_int(val));
    else if (key == "probe_steps")
      r.probe.steps = static_cast<int>(parse_int(val));
    else if (key == "probe_lr")
      r.probe.lr = parse_double(val);
    else if (key == "probe_momentum")
      r.probe.momentum = parse_double(val);
    else if (key == "probe_batch")
      r.probe.batch = static_cast<int>(parse_int(val));
    else
      throw io_error("unknown report key: " + key);
  }
  return r;
}

}  // namespace uda
