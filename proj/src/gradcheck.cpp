#include "uda/gradcheck.hpp"

#include <chrono>
#include <cmath>

#include "uda/losses.hpp"
#include "uda/kernels.hpp"
#include "uda/mining.hpp"

namespace uda {

double rel_err(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / denom;
}

std::vector<double> finite_difference(const std::function<double()>& value, Tensor& param,
                                      double h) {
  std::vector<double> grad(param.size());
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double saved = param.values[i];
    param.values[i] = saved + h;
    const double up = value();
    param.values[i] = saved - h;
    const double down = value();
    param.values[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

namespace {

struct Fixture {
  ModelParams model;
  Tensor x;
  std::vector<int> source_rows, target_rows, source_labels, domain_labels;
  std::vector<Triplet> triplets;
  LossConfig loss;
};

// Smallest |pre-activation| across the rectified layers plus the smallest
// |violation| across the triplets. Central differences are only valid
// inside one smooth piece, so the fixture must keep clear of the relu and
// hinge kinks by more than the FD stencil can move them.
double kink_margin(Fixture& f) {
  double margin = 1e300;
  auto scan_mlp = [&](Mlp& mlp, const Tensor& input) {
    Tensor h = input;
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
      const Tensor& w = mlp.layers[l].w;
      Tensor z(Shape{h.rows(), w.cols()});
      kernels::matmul(h.data(), w.data(), z.data(), h.rows(), h.cols(), w.cols());
      kernels::add_rowvec(z.data(), mlp.layers[l].b.data(), z.data(), z.rows(), z.cols());
      if (l + 1 < mlp.layers.size()) {
        for (double v : z.values) margin = std::min(margin, std::abs(v));
        kernels::vrelu(z.data(), z.data(), z.size());
      }
      h = std::move(z);
    }
    return h;
  };
  const Tensor feats = scan_mlp(f.model.feature, f.x);
  scan_mlp(f.model.discriminator, feats);
  for (const Triplet& t : f.triplets) {
    double d_ij = 0.0, d_ik = 0.0;
    for (int j = 0; j < feats.cols(); ++j) {
      const double dp = feats.at2(t.anchor, j) - feats.at2(t.positive, j);
      const double dn = feats.at2(t.anchor, j) - feats.at2(t.negative, j);
      d_ij += dp * dp;
      d_ik += dn * dn;
    }
    margin = std::min(margin, std::abs(d_ij - d_ik + f.loss.margin));
  }
  return margin;
}

Fixture make_fixture(std::uint64_t seed) {
  const int batch = 8, d_in = 4, classes = 3;
  for (std::uint64_t attempt = 0;; ++attempt) {
    Fixture f;
    f.model = init_params(MlpSpec{{d_in, 8, 6}}, MlpSpec{{6, classes}}, MlpSpec{{6, 8, 2}},
                          mix_seed(seed, attempt));
    Rng rng(mix_seed(seed, 0x67636b00ULL + attempt));
    f.x = Tensor(Shape{batch, d_in});
    for (double& v : f.x.values) v = rng.uniform(-1.0, 1.0);

    std::vector<int> labels;
    for (int i = 0; i < batch; ++i) labels.push_back(rng.index(classes));
    for (int i = 0; i < batch; ++i) {
      f.domain_labels.push_back(i < batch / 2 ? 0 : 1);
      if (i < batch / 2) {
        f.source_rows.push_back(i);
        f.source_labels.push_back(labels[static_cast<std::size_t>(i)]);
      } else {
        f.target_rows.push_back(i);
      }
    }
    // one triplet per anchor that has both partners
    for (int a = 0; a < batch; ++a) {
      int pos = -1, neg = -1;
      for (int i = 0; i < batch && (pos < 0 || neg < 0); ++i) {
        if (i == a) continue;
        if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(a)] && pos < 0)
          pos = i;
        if (labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(a)] && neg < 0)
          neg = i;
      }
      if (pos >= 0 && neg >= 0) f.triplets.push_back({a, pos, neg});
    }
    if (!f.triplets.empty() && kink_margin(f) > 5e-3) return f;
  }
}

enum class Component { Cls, Adv, Bptri, Total };

// Builds the component loss on a fresh tape. The adversarial branch goes
// straight into the discriminator (no reversal), so the scalar is an
// ordinary differentiable function of all parameters.
Tape::Id build_loss(Tape& tape, Fixture& f, Component which) {
  Tape::Id x = tape.input(f.x);
  Tape::Id features = forward_features(tape, f.model, x);
  auto cls = [&] {
    Tape::Id logp = classify_logprobs(tape, f.model, features);
    return classification_loss(tape, tape.select_rows(logp, f.source_rows), f.source_labels,
                               tape.select_rows(logp, f.target_rows), f.loss);
  };
  auto adv = [&] {
    Tape::Id logp = tape.log_softmax(mlp_forward(tape, f.model.discriminator, features));
    return adversarial_loss(tape, logp, f.domain_labels);
  };
  auto bptri = [&] { return bp_triplet_loss(tape, features, f.triplets, f.loss); };
  switch (which) {
    case Component::Cls:
      return cls();
    case Component::Adv:
      return adv();
    case Component::Bptri:
      return bptri();
    case Component::Total:
      return total_loss(tape, adv(), bptri(), cls(), f.loss);
  }
  throw config_error("unreachable");
}

GradcheckComponent check_component(Fixture& f, Component which, const char* name,
                                   double corrupt) {
  GradcheckComponent out;
  out.name = name;

  std::vector<Tensor*> params = param_tensors(f.model);
  for (Tensor* t : params) t->zero_grad();
  {
    Tape tape;
    Tape::Id loss = build_loss(tape, f, which);
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  for (Tensor* t : params) {
    t->ensure_grad();
    analytic.push_back(t->grad);
  }
  if (corrupt != 0.0 && !analytic.empty() && !analytic.front().empty())
    analytic.front().front() += corrupt;

  auto value = [&] {
    Tape tape;
    return tape.scalar_value(build_loss(tape, f, which));
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const std::vector<double> fd = finite_difference(value, *params[k], kGradcheckH);
    for (std::size_t i = 0; i < fd.size(); ++i)
      worst = std::max(worst, rel_err(analytic[k][i], fd[i]));
  }
  out.max_rel_err = worst;
  out.pass = worst < kGradcheckTol;
  return out;
}

}  // namespace

GradcheckReport gradcheck_run(std::uint64_t seed, double corrupt) {
  const auto t0 = std::chrono::steady_clock::now();
  Fixture f = make_fixture(seed);
  GradcheckReport report;
  report.components.push_back(check_component(f, Component::Cls, "cls", corrupt));
  report.components.push_back(check_component(f, Component::Adv, "adv", corrupt));
  report.components.push_back(check_component(f, Component::Bptri, "bptri", corrupt));
  report.components.push_back(check_component(f, Component::Total, "total", corrupt));
  report.pass = true;
  for (const GradcheckComponent& c : report.components) report.pass = report.pass && c.pass;
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

GradcheckReport gradcheck_run_many(int n_seeds, std::uint64_t seed0, double corrupt) {
  const auto t0 = std::chrono::steady_clock::now();
  GradcheckReport merged;
  for (int s = 0; s < n_seeds; ++s) {
    GradcheckReport r = gradcheck_run(seed0 + static_cast<std::uint64_t>(s), corrupt);
    if (merged.components.empty()) {
      merged.components = r.components;
    } else {
      for (std::size_t i = 0; i < merged.components.size(); ++i) {
        merged.components[i].max_rel_err =
            std::max(merged.components[i].max_rel_err, r.components[i].max_rel_err);
        merged.components[i].pass = merged.components[i].pass && r.components[i].pass;
      }
    }
  }
  merged.pass = true;
  for (const GradcheckComponent& c : merged.components) merged.pass = merged.pass && c.pass;
  merged.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return merged;
}

}  // namespace uda
