#include "uda/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace uda {

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(static_cast<int>(parse_int(cell)));
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt_double(v[i]);
  }
  return out;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_double(cell));
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw config_error("not a boolean: '" + s + "'");
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

using FieldMap = std::vector<std::pair<std::string, Field>>;

#define UDA_FIELD_STR(key, expr)                                         \
  {key, Field{[](const RunConfig& c) { return c.expr; },                 \
              [](RunConfig& c, const std::string& v) { c.expr = v; }}}
#define UDA_FIELD_INT(key, expr)                                            \
  {key, Field{[](const RunConfig& c) { return std::to_string(c.expr); },    \
              [](RunConfig& c, const std::string& v) {                      \
                c.expr = static_cast<int>(parse_int(v));                    \
              }}}
#define UDA_FIELD_U64(key, expr)                                            \
  {key, Field{[](const RunConfig& c) { return std::to_string(c.expr); },    \
              [](RunConfig& c, const std::string& v) {                      \
                c.expr = static_cast<std::uint64_t>(parse_int(v));          \
              }}}
#define UDA_FIELD_DBL(key, expr)                                        \
  {key, Field{[](const RunConfig& c) { return fmt_double(c.expr); },    \
              [](RunConfig& c, const std::string& v) { c.expr = parse_double(v); }}}
#define UDA_FIELD_BOOL(key, expr)                                              \
  {key, Field{[](const RunConfig& c) { return c.expr ? "true" : "false"; },    \
              [](RunConfig& c, const std::string& v) { c.expr = parse_bool(v); }}}
#define UDA_FIELD_INTS(key, expr)                                          \
  {key, Field{[](const RunConfig& c) { return join_ints(c.expr); },        \
              [](RunConfig& c, const std::string& v) { c.expr = split_ints(v); }}}
#define UDA_FIELD_DBLS(key, expr)                                            \
  {key, Field{[](const RunConfig& c) { return join_doubles(c.expr); },       \
              [](RunConfig& c, const std::string& v) { c.expr = split_doubles(v); }}}

const FieldMap& fields() {
  static const FieldMap map = {
      UDA_FIELD_STR("manifest", manifest),
      UDA_FIELD_INT("categories", data.categories),
      UDA_FIELD_INT("per_category", data.per_category),
      UDA_FIELD_DBL("radius", data.radius),
      UDA_FIELD_DBL("sigma", data.sigma),
      UDA_FIELD_DBL("rotation_deg", data.rotation_deg),
      UDA_FIELD_DBLS("translation", data.translation),
      UDA_FIELD_U64("data_seed", data.seed),
      UDA_FIELD_INTS("feature_widths", feature_widths),
      UDA_FIELD_INTS("classifier_hidden", classifier_hidden),
      UDA_FIELD_INTS("discriminator_hidden", discriminator_hidden),
      UDA_FIELD_DBL("alpha", train.loss.alpha),
      UDA_FIELD_DBL("gamma", train.loss.gamma),
      UDA_FIELD_DBL("margin", train.loss.margin),
      UDA_FIELD_DBL("lambda1", train.loss.lambda1),
      UDA_FIELD_DBL("lambda2", train.loss.lambda2),
      UDA_FIELD_BOOL("normalize_cls", train.loss.normalize_by_set_size),
      UDA_FIELD_BOOL("normalize_triplet", train.loss.normalize_triplet),
      UDA_FIELD_BOOL("omega_stop_grad", train.loss.omega_stop_grad),
      UDA_FIELD_INT("n0", train.mining.n0),
      UDA_FIELD_DBL("warm_threshold", train.mining.warm_threshold),
      UDA_FIELD_INT("refresh_period", train.mining.refresh_period),
      UDA_FIELD_INT("triplets_per_anchor", train.mining.triplets_per_anchor),
      UDA_FIELD_INT("s0", train.s0),
      UDA_FIELD_INT("pretrain_steps", train.pretrain_steps),
      UDA_FIELD_INT("batch_size", train.batch_size),
      UDA_FIELD_DBL("lr0", train.lr0),
      UDA_FIELD_DBL("momentum", train.momentum),
      UDA_FIELD_DBL("lr_alpha", train.lr_alpha),
      UDA_FIELD_DBL("lr_beta", train.lr_beta),
      UDA_FIELD_DBL("grl_gamma", train.grl_gamma),
      UDA_FIELD_DBL("head_lr_multiplier", train.head_lr_multiplier),
      UDA_FIELD_DBL("pretrain_acc_floor", train.pretrain_acc_floor),
      UDA_FIELD_BOOL("target_entropy", train.use_target_entropy),
      UDA_FIELD_U64("seed", train.seed),
      UDA_FIELD_INT("probe_hidden", probe.hidden),
      UDA_FIELD_INT("probe_steps", probe.steps),
      UDA_FIELD_DBL("probe_lr", probe.lr),
      UDA_FIELD_DBL("probe_momentum", probe.momentum),
      UDA_FIELD_INT("probe_batch", probe.batch),
      UDA_FIELD_INT("compare_seeds", compare_seeds),
      UDA_FIELD_STR("out_dir", out_dir),
      UDA_FIELD_BOOL("export_features", export_feature_matrices),
  };
  return map;
}

const Field* find_field(const std::string& key) {
  for (const auto& [name, field] : fields())
    if (name == key) return &field;
  return nullptr;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [name, field] : fields()) keys.push_back(name);
  return keys;
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  const Field* field = find_field(key);
  if (!field) throw config_error("unknown config key: " + key);
  try {
    field->set(cfg, value);
  } catch (const config_error& e) {
    throw config_error(key + ": " + e.what());
  }
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    apply_config_entry(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

std::string get_config_entry(const RunConfig& cfg, const std::string& key) {
  const Field* field = find_field(key);
  if (!field) throw config_error("unknown config key: " + key);
  return field->get(cfg);
}

std::string resolved_config_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + "=" + field.get(cfg) + "\n";
  return out;
}

void validate_config(const RunConfig& cfg) {
  if (cfg.feature_widths.size() < 2)
    throw config_error("feature_widths needs at least input and output");
  for (int w : cfg.feature_widths)
    if (w <= 0) throw config_error("feature_widths must be positive");
  for (int w : cfg.classifier_hidden)
    if (w <= 0) throw config_error("classifier_hidden must be positive");
  for (int w : cfg.discriminator_hidden)
    if (w <= 0) throw config_error("discriminator_hidden must be positive");
  if (cfg.compare_seeds < 1) throw config_error("compare_seeds must be positive");
  if (cfg.probe.hidden < 1 || cfg.probe.steps < 1 || cfg.probe.batch < 1)
    throw config_error("probe settings must be positive");
  if (!(cfg.train.mining.warm_threshold > 0.0 && cfg.train.mining.warm_threshold < 1.0))
    throw config_error("warm_threshold must lie in (0,1)");
  if (cfg.train.loss.alpha <= 0.0) throw config_error("alpha must be positive");
  if (cfg.train.loss.gamma < 0.0) throw config_error("gamma must be >= 0");
  if (cfg.train.loss.margin < 0.0) throw config_error("margin must be >= 0");
  if (cfg.train.loss.lambda1 < 0.0 || cfg.train.loss.lambda2 < 0.0)
    throw config_error("lambda weights must be >= 0");
}

}  // namespace uda
