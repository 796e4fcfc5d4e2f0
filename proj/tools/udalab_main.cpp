#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "uda/commands.hpp"

namespace {

// Flags mirror config keys; a flag overrides the file, the file overrides
// defaults. UDALAB_OUT_ROOT (the only environment input) re-roots a
// relative out_dir.
void add_config_options(CLI::App* cmd, std::string& config_path,
                        std::map<std::string, std::string>& overrides) {
  cmd->add_option("--config", config_path, "key=value config file");
  for (const std::string& key : uda::config_keys()) {
    auto store = [&overrides, key](const std::string& v) { overrides[key] = v; };
    cmd->add_option_function<std::string>("--" + key, store)->expected(1);
  }
}

uda::RunConfig resolve_config(const std::string& config_path,
                              const std::map<std::string, std::string>& overrides) {
  uda::RunConfig cfg;
  if (!config_path.empty()) uda::load_config_file(cfg, config_path);
  for (const auto& [key, value] : overrides) uda::apply_config_entry(cfg, key, value);
  if (const char* root = std::getenv("UDALAB_OUT_ROOT")) {
    const std::filesystem::path out(cfg.out_dir);
    if (out.is_relative()) cfg.out_dir = (std::filesystem::path(root) / out).string();
  }
  uda::validate_config(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"udalab: unsupervised domain adaptation training laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::string> overrides;
  int gradcheck_seeds = 20;

  CLI::App* generate = app.add_subcommand("generate", "write a synthetic dataset + manifest");
  CLI::App* train = app.add_subcommand("train", "pretrain + co-train, write metrics and report");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of all losses");
  CLI::App* compare = app.add_subcommand("compare", "run the ablation ladder");
  for (CLI::App* cmd : {generate, train, gradcheck, compare})
    add_config_options(cmd, config_path, overrides);
  gradcheck->add_option("--gradcheck-seeds", gradcheck_seeds, "number of random seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const uda::RunConfig cfg = resolve_config(config_path, overrides);
    if (generate->parsed()) {
      uda::cmd_generate(cfg);
    } else if (train->parsed()) {
      uda::cmd_train(cfg);
    } else if (gradcheck->parsed()) {
      if (!uda::cmd_gradcheck(cfg, gradcheck_seeds).pass) return 1;
    } else if (compare->parsed()) {
      uda::cmd_compare(cfg);
    }
  } catch (const uda::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const uda::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const uda::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
