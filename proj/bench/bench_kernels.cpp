// Times the serial reference against the OpenMP backend on the kernel
// shapes the trainer actually hits, plus one full training step.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "uda/data.hpp"
#include "uda/kernels.hpp"
#include "uda/trainer.hpp"

namespace {

using uda::kernels::Backend;

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

struct Case {
  std::string name;
  std::function<void()> fn;
  int reps;
};

void report(const Case& c) {
  uda::kernels::set_backend(Backend::Serial);
  const double serial = time_ms(c.fn, c.reps);
  uda::kernels::set_backend(Backend::OpenMP);
  const double omp = time_ms(c.fn, c.reps);
  std::printf("%-28s serial %9.3f ms   openmp %9.3f ms   speedup %.2fx\n", c.name.c_str(),
              serial, omp, serial / omp);
}

}  // namespace

int main() {
  std::printf("threads available: %d\n", uda::kernels::max_threads());

  uda::Rng rng(42);
  const int m = 256, k = 512, n = 256;
  std::vector<double> a(static_cast<std::size_t>(m) * k), b(static_cast<std::size_t>(k) * n),
      c(static_cast<std::size_t>(m) * n);
  for (double& v : a) v = rng.uniform(-1, 1);
  for (double& v : b) v = rng.uniform(-1, 1);

  std::vector<double> big(1 << 21), out(big.size());
  for (double& v : big) v = rng.uniform(0.1, 2.0);

  std::vector<Case> cases;
  cases.push_back({"matmul 256x512x256",
                   [&] { uda::kernels::matmul(a.data(), b.data(), c.data(), m, k, n); }, 10});
  cases.push_back({"exp map 2M",
                   [&] { uda::kernels::vexp(big.data(), out.data(), big.size()); }, 10});
  cases.push_back({"sum 2M", [&] { (void)uda::kernels::sum(big.data(), big.size()); }, 10});
  for (const Case& c2 : cases) report(c2);

  // one full co-training step at the digit-scale widths
  uda::ShiftSpec spec;
  spec.categories = 10;
  spec.per_category = 64;
  spec.seed = 3;
  uda::SyntheticTask task = uda::generate_shifted_mixture(spec);
  uda::TrainConfig cfg;
  cfg.s0 = 20;
  cfg.pretrain_steps = 0;
  cfg.batch_size = 128;
  Case step{"20 train steps b=128", [&] {
              uda::ModelParams model = uda::init_params(
                  uda::MlpSpec{{2, 256, 64}}, uda::MlpSpec{{64, 10}},
                  uda::MlpSpec{{64, 32, 2}}, 1);
              (void)uda::train(model, task.source, task.target, cfg);
            },
            3};
  report(step);
  return 0;
}
