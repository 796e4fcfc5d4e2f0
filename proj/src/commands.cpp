#include "uda/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace uda {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc | std::ios::binary);
  if (!os) throw io_error("cannot write " + path);
  os << text;
  if (!os) throw io_error("write failed: " + path);
}

std::string in_dir(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

SyntheticTask load_or_generate(const RunConfig& cfg) {
  if (!cfg.manifest.empty()) return load_task(cfg.manifest);
  return generate_shifted_mixture(cfg.data);
}

struct ModelSpecs {
  MlpSpec f, y, d;
};

ModelSpecs model_specs(const RunConfig& cfg, int input_dim, int categories) {
  ModelSpecs specs;
  specs.f.widths = cfg.feature_widths;
  if (specs.f.widths.front() != input_dim)
    throw config_error("feature_widths input " + std::to_string(specs.f.widths.front()) +
                       " does not match data dimension " + std::to_string(input_dim));
  const int feat = specs.f.widths.back();
  specs.y.widths.push_back(feat);
  for (int w : cfg.classifier_hidden) specs.y.widths.push_back(w);
  specs.y.widths.push_back(categories);
  specs.d.widths.push_back(feat);
  for (int w : cfg.discriminator_hidden) specs.d.widths.push_back(w);
  specs.d.widths.push_back(2);
  return specs;
}

std::string metrics_csv(const TrainLog& log) {
  std::string out = "step,loss_total,loss_cls,loss_adv,loss_bptri,n_pseudo,threshold_mean,src_acc,tgt_acc\n";
  for (const StepRecord& r : log.steps) {
    out += std::to_string(r.step) + ',' + fmt_double(r.loss_total) + ',' +
           fmt_double(r.loss_cls) + ',' + fmt_double(r.loss_adv) + ',' +
           fmt_double(r.loss_bptri) + ',' + std::to_string(r.n_pseudo) + ',' +
           fmt_double(r.threshold_mean) + ',' + fmt_double(r.src_acc) + ',' +
           fmt_double(r.tgt_acc) + '\n';
  }
  return out;
}

// Runs pretrain + train and returns the final target accuracy. Used by both
// cmd_train and the compare ladder.
struct RunOutput {
  ModelParams model;
  TrainLog pretrain_log;
  TrainResult result;
  double src_acc = 0.0;
  double tgt_acc = 0.0;
};

RunOutput run_training(const RunConfig& cfg, SyntheticTask& task,
                       const CheckpointSink& checkpoint = {}) {
  validate_config(cfg);
  const int input_dim = task.source.x.cols();
  const int categories = task.source.categories;
  const ModelSpecs specs = model_specs(cfg, input_dim, categories);

  RunOutput out;
  out.model = init_params(specs.f, specs.y, specs.d, cfg.train.seed);

  MetricsProbe probe = [&task](ModelParams& m, int) {
    const double sa = accuracy(predict_labels(m, task.source.x), task.source.y);
    const double ta = accuracy(predict_labels(m, task.target.x), task.target_truth.y);
    return std::make_pair(sa, ta);
  };

  out.pretrain_log = pretrain(out.model, task.source, task.target, cfg.train, probe);
  out.result = train(out.model, task.source, task.target, cfg.train, probe, checkpoint);
  out.src_acc = accuracy(predict_labels(out.model, task.source.x), task.source.y);
  out.tgt_acc = accuracy(out.result.target_predictions, task.target_truth.y);
  return out;
}

}  // namespace

void cmd_generate(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_dir(cfg.out_dir);
  const SyntheticTask task = generate_shifted_mixture(cfg.data);

  DatasetManifest m;
  m.format = "csv";
  m.source_images = "source_features.csv";
  m.source_labels = "source_labels.csv";
  m.target_images = "target_features.csv";
  m.target_hidden_labels = "target_hidden_labels.csv";
  m.n_source = task.source.x.rows();
  m.n_target = task.target.x.rows();
  m.feature_dim = task.source.x.cols();
  m.categories = task.source.categories;

  write_matrix_csv(task.source.x, in_dir(cfg.out_dir, m.source_images));
  write_labels_csv(task.source.y, in_dir(cfg.out_dir, m.source_labels));
  write_matrix_csv(task.target.x, in_dir(cfg.out_dir, m.target_images));
  write_labels_csv(task.target_truth.y, in_dir(cfg.out_dir, m.target_hidden_labels));
  write_manifest(m, in_dir(cfg.out_dir, "manifest.txt"));
  write_text(in_dir(cfg.out_dir, "resolved.cfg"), resolved_config_text(cfg));

  std::cout << "wrote " << m.n_source << " source and " << m.n_target
            << " target samples under " << cfg.out_dir << "\n";
}

void cmd_train(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_dir(cfg.out_dir);
  write_text(in_dir(cfg.out_dir, "resolved.cfg"), resolved_config_text(cfg));

  SyntheticTask task = load_or_generate(cfg);
  CheckpointSink checkpoint = [&cfg](const ModelParams& m, int step) {
    char name[64];
    std::snprintf(name, sizeof(name), "checkpoint_step%06d.bin", step);
    save_checkpoint(m, in_dir(cfg.out_dir, name));
  };

  RunOutput out = run_training(cfg, task, checkpoint);

  write_text(in_dir(cfg.out_dir, "pretrain_metrics.csv"), metrics_csv(out.pretrain_log));
  write_text(in_dir(cfg.out_dir, "metrics.csv"), metrics_csv(out.result.log));
  save_checkpoint(out.model, in_dir(cfg.out_dir, "checkpoint_final.bin"));

  {
    std::string pred = "index,prediction\n";
    for (std::size_t i = 0; i < out.result.target_predictions.size(); ++i)
      pred += std::to_string(i) + ',' + std::to_string(out.result.target_predictions[i]) + '\n';
    write_text(in_dir(cfg.out_dir, "target_predictions.csv"), pred);
  }

  EvalReport report;
  report.source_accuracy = out.src_acc;
  report.target_accuracy = out.tgt_acc;
  report.n_source = task.source.x.rows();
  report.n_target = task.target.x.rows();
  report.probe = cfg.probe;
  report.a_distance =
      a_distance(extract_features(out.model, task.source.x),
                 extract_features(out.model, task.target.x), cfg.probe, cfg.train.seed);
  write_report(report, in_dir(cfg.out_dir, "eval_report.txt"));

  if (cfg.export_feature_matrices)
    export_features(out.model, task.source, task.target, task.target_truth, cfg.out_dir);

  std::string warn_text;
  for (const std::string& w : out.pretrain_log.warnings) warn_text += w + "\n";
  for (const std::string& w : out.result.log.warnings) warn_text += w + "\n";
  if (!warn_text.empty()) {
    write_text(in_dir(cfg.out_dir, "warnings.txt"), warn_text);
    std::cerr << warn_text;
  }

  std::cout << "source_accuracy=" << fmt_double(report.source_accuracy)
            << " target_accuracy=" << fmt_double(report.target_accuracy)
            << " a_distance=" << fmt_double(report.a_distance) << "\n";
}

GradcheckReport cmd_gradcheck(const RunConfig& cfg, int n_seeds) {
  const GradcheckReport report = gradcheck_run_many(n_seeds, cfg.train.seed);
  for (const GradcheckComponent& c : report.components)
    std::cout << (c.pass ? "PASS" : "FAIL") << " " << c.name
              << ": max relative error " << fmt_double(c.max_rel_err) << " (tolerance "
              << fmt_double(kGradcheckTol) << ")\n";
  std::cout << (report.pass ? "PASS" : "FAIL") << " gradcheck over " << n_seeds
            << " seeds in " << fmt_double(report.seconds) << " s\n";
  return report;
}

const std::vector<std::string>& compare_variant_names() {
  static const std::vector<std::string> names = {
      "source_only", "no_adversarial", "adversarial", "adversarial_entropy",
      "plain_triplet", "full"};
  return names;
}

RunConfig compare_variant(const RunConfig& base, const std::string& name) {
  RunConfig cfg = base;
  if (name == "source_only") {
    cfg.train.loss.lambda1 = 0.0;
    cfg.train.loss.lambda2 = 0.0;
    cfg.train.use_target_entropy = false;
  } else if (name == "no_adversarial") {
    cfg.train.loss.lambda1 = 0.0;
  } else if (name == "adversarial") {
    cfg.train.loss.lambda2 = 0.0;
    cfg.train.use_target_entropy = false;
  } else if (name == "adversarial_entropy") {
    cfg.train.loss.lambda2 = 0.0;
  } else if (name == "plain_triplet") {
    cfg.train.loss.gamma = 0.0;
  } else if (name == "full") {
    // as configured
  } else {
    throw config_error("unknown compare variant: " + name);
  }
  return cfg;
}

void cmd_compare(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_dir(cfg.out_dir);
  write_text(in_dir(cfg.out_dir, "resolved.cfg"), resolved_config_text(cfg));

  SyntheticTask task = load_or_generate(cfg);
  std::string csv = "variant,n_seeds,mean_tgt_acc,sd_tgt_acc\n";
  std::cout << "variant              mean   sd     (target accuracy over "
            << cfg.compare_seeds << " seeds)\n";
  for (const std::string& name : compare_variant_names()) {
    std::vector<double> accs;
    for (int k = 0; k < cfg.compare_seeds; ++k) {
      RunConfig variant = compare_variant(cfg, name);
      variant.train.seed = cfg.train.seed + static_cast<std::uint64_t>(k);
      RunOutput out = run_training(variant, task);
      accs.push_back(out.tgt_acc);
    }
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    const double sd = accs.size() > 1 ? std::sqrt(var / static_cast<double>(accs.size() - 1)) : 0.0;
    csv += name + ',' + std::to_string(cfg.compare_seeds) + ',' + fmt_double(mean) + ',' +
           fmt_double(sd) + '\n';
    std::printf("%-20s %.4f %.4f\n", name.c_str(), mean, sd);
  }
  write_text(in_dir(cfg.out_dir, "compare.csv"), csv);
}

}  // namespace uda
