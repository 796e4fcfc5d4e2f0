#pragma once

#include <string>

#include "uda/config.hpp"
#include "uda/gradcheck.hpp"

namespace uda {

// Library entry points behind the CLI subcommands; each throws the typed
// errors that main() maps to exit codes.

// Synthetic dataset files plus a manifest under out_dir.
void cmd_generate(const RunConfig& cfg);

// Pretrain + co-train; writes resolved.cfg, metrics.csv (and
// pretrain_metrics.csv), periodic and final checkpoints, target
// predictions, and the evaluation report into out_dir.
void cmd_train(const RunConfig& cfg);

// Finite-difference verification of every loss component; prints one line
// per component. Returns the merged report (pass iff all under tolerance).
GradcheckReport cmd_gradcheck(const RunConfig& cfg, int n_seeds = 20);

// Ablation ladder (source-only, no-adversarial, plain adversarial,
// adversarial+entropy, plain-triplet, full) over compare_seeds seeds;
// writes compare.csv and prints the table.
void cmd_compare(const RunConfig& cfg);

// Variant transforms used by cmd_compare, exposed for tests.
RunConfig compare_variant(const RunConfig& base, const std::string& name);
const std::vector<std::string>& compare_variant_names();

}  // namespace uda
