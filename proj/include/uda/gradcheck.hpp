#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uda/model.hpp"

namespace uda {

struct GradcheckComponent {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradcheckReport {
  std::vector<GradcheckComponent> components;  // cls, adv, bptri, total
  bool pass = false;
  double seconds = 0.0;
};

// Compares tape gradients against central finite differences (h = 1e-5)
// over every parameter of a small random model on a random mixed batch,
// once per loss component and once combined. The adversarial path is
// checked without gradient reversal: the reversal's backward rule is
// deliberately not the derivative of its forward and has its own exact
// sign-flip tests. Pass threshold: max relative error < 1e-4.
//
// corrupt, when nonzero, is added to one analytic gradient entry before
// comparison; the negative-control test uses it to prove the check can
// fail.
GradcheckReport gradcheck_run(std::uint64_t seed, double corrupt = 0.0);
GradcheckReport gradcheck_run_many(int n_seeds, std::uint64_t seed0, double corrupt = 0.0);

// Central-difference gradient of an arbitrary scalar function of a
// parameter vector; shared by the unit-test oracles.
std::vector<double> finite_difference(const std::function<double()>& value, Tensor& param,
                                      double h = 1e-5);
double rel_err(double a, double b);

constexpr double kGradcheckTol = 1e-4;
constexpr double kGradcheckH = 1e-5;

}  // namespace uda
