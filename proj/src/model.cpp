#include "uda/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace uda {

namespace {

void check_spec(const MlpSpec& spec, const char* name) {
  if (spec.widths.size() < 2)
    throw config_error(std::string(name) + " needs at least input and output widths");
  for (int w : spec.widths)
    if (w <= 0) throw config_error(std::string(name) + " has a non-positive width");
}

}  // namespace

Mlp init_mlp(const MlpSpec& spec, Rng& rng) {
  check_spec(spec, "mlp spec");
  Mlp mlp;
  mlp.spec = spec;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const int fan_in = spec.widths[l];
    const int fan_out = spec.widths[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    LinearLayer layer;
    layer.w = Tensor(Shape{fan_in, fan_out});
    for (double& v : layer.w.values) v = rng.uniform(-bound, bound);
    layer.b = Tensor(Shape{fan_out});
    layer.w.requires_grad = true;
    layer.b.requires_grad = true;
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

ModelParams init_params(const MlpSpec& spec_f, const MlpSpec& spec_y, const MlpSpec& spec_d,
                        std::uint64_t seed) {
  check_spec(spec_f, "feature spec");
  check_spec(spec_y, "classifier spec");
  check_spec(spec_d, "discriminator spec");
  const int feat = spec_f.widths.back();
  if (spec_y.widths.front() != feat)
    throw config_error("classifier input width " + std::to_string(spec_y.widths.front()) +
                       " does not match feature width " + std::to_string(feat));
  if (spec_d.widths.front() != feat)
    throw config_error("discriminator input width does not match feature width");
  if (spec_d.widths.back() != 2)
    throw config_error("discriminator output width must be 2");

  Rng rng(mix_seed(seed, 0x6d6f64656cULL));
  ModelParams p;
  p.feature = init_mlp(spec_f, rng);
  p.classifier = init_mlp(spec_y, rng);
  p.discriminator = init_mlp(spec_d, rng);
  return p;
}

Tape::Id mlp_forward(Tape& tape, Mlp& mlp, Tape::Id x) {
  if (tape.value(x).cols() != mlp.spec.widths.front())
    throw shape_error("input width " + std::to_string(tape.value(x).cols()) +
                      " does not match mlp input " + std::to_string(mlp.spec.widths.front()));
  Tape::Id h = x;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    Tape::Id w = tape.param(mlp.layers[l].w);
    Tape::Id b = tape.param(mlp.layers[l].b);
    h = tape.add_rowvec(tape.matmul(h, w), b);
    if (l + 1 < mlp.layers.size()) h = tape.relu(h);
  }
  return h;
}

Tape::Id forward_features(Tape& tape, ModelParams& params, Tape::Id x) {
  return mlp_forward(tape, params.feature, x);
}

Tape::Id classify_logprobs(Tape& tape, ModelParams& params, Tape::Id features) {
  return tape.log_softmax(mlp_forward(tape, params.classifier, features));
}

Tape::Id discriminate_logprobs(Tape& tape, ModelParams& params, Tape::Id features,
                               double grl_coeff) {
  Tape::Id reversed = tape.gradient_reverse(features, grl_coeff);
  return tape.log_softmax(mlp_forward(tape, params.discriminator, reversed));
}

std::vector<Tensor*> param_tensors(Mlp& mlp) {
  std::vector<Tensor*> out;
  for (LinearLayer& l : mlp.layers) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  }
  return out;
}

std::vector<Tensor*> param_tensors(ModelParams& params) {
  std::vector<Tensor*> out = param_tensors(params.feature);
  for (Tensor* t : param_tensors(params.classifier)) out.push_back(t);
  for (Tensor* t : param_tensors(params.discriminator)) out.push_back(t);
  return out;
}

void zero_grads(ModelParams& params) {
  for (Tensor* t : param_tensors(params)) t->zero_grad();
}

Tensor extract_features(ModelParams& params, const Tensor& x) {
  Tape tape;
  return tape.value(forward_features(tape, params, tape.input(x)));
}

Tensor predict_logprobs(ModelParams& params, const Tensor& x) {
  Tape tape;
  return tape.value(classify_logprobs(tape, params, forward_features(tape, params, tape.input(x))));
}

std::vector<int> predict_labels(ModelParams& params, const Tensor& x) {
  Tensor logp = predict_logprobs(params, x);
  std::vector<int> out(static_cast<std::size_t>(logp.rows()));
  for (int i = 0; i < logp.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < logp.cols(); ++j)
      if (logp.at2(i, j) > logp.at2(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'U', 'D', 'A', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw io_error("checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw io_error("checkpoint truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void put_tensor(std::ostream& os, const std::string& name, const Tensor& t) {
  put_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(os, static_cast<std::uint32_t>(t.ndim()));
  for (int i = 0; i < t.ndim(); ++i) put_u32(os, static_cast<std::uint32_t>(t.dim(i)));
  for (double v : t.values) put_f64(os, v);
}

void put_widths(std::ostream& os, const std::vector<int>& w) {
  put_u32(os, static_cast<std::uint32_t>(w.size()));
  for (int v : w) put_u32(os, static_cast<std::uint32_t>(v));
}

std::vector<int> get_widths(std::istream& is) {
  std::uint32_t n = get_u32(is);
  std::vector<int> w(n);
  for (std::uint32_t i = 0; i < n; ++i) w[i] = static_cast<int>(get_u32(is));
  return w;
}

const char* part_name(int i) { return i == 0 ? "f" : (i == 1 ? "y" : "d"); }

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw io_error("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 8);
  const Mlp* parts[3] = {&params.feature, &params.classifier, &params.discriminator};
  for (int p = 0; p < 3; ++p) put_widths(os, parts[p]->spec.widths);
  std::uint32_t count = 0;
  for (int p = 0; p < 3; ++p) count += 2 * static_cast<std::uint32_t>(parts[p]->layers.size());
  put_u32(os, count);
  for (int p = 0; p < 3; ++p) {
    for (std::size_t l = 0; l < parts[p]->layers.size(); ++l) {
      const std::string base = std::string(part_name(p)) + "." + std::to_string(l);
      put_tensor(os, base + ".w", parts[p]->layers[l].w);
      put_tensor(os, base + ".b", parts[p]->layers[l].b);
    }
  }
  if (!os) throw io_error("write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw io_error("bad checkpoint magic in " + path);

  ModelParams params;
  Mlp* parts[3] = {&params.feature, &params.classifier, &params.discriminator};
  for (int p = 0; p < 3; ++p) parts[p]->spec.widths = get_widths(is);
  const std::uint32_t count = get_u32(is);
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw io_error("checkpoint truncated");
    const std::uint32_t ndim = get_u32(is);
    Shape shape(ndim);
    for (std::uint32_t i = 0; i < ndim; ++i) shape[i] = static_cast<int>(get_u32(is));
    Tensor tensor(shape);
    for (double& v : tensor.values) v = get_f64(is);
    tensor.requires_grad = true;

    // name: "<part>.<layer>.<w|b>"
    const auto d1 = name.find('.');
    const auto d2 = name.find('.', d1 == std::string::npos ? 0 : d1 + 1);
    if (d1 == std::string::npos || d2 == std::string::npos)
      throw io_error("bad tensor name in checkpoint: " + name);
    const std::string part = name.substr(0, d1);
    const std::size_t layer = static_cast<std::size_t>(parse_int(name.substr(d1 + 1, d2 - d1 - 1)));
    const std::string kind = name.substr(d2 + 1);
    Mlp* mlp = part == "f" ? parts[0] : (part == "y" ? parts[1] : parts[2]);
    if (mlp->layers.size() <= layer) mlp->layers.resize(layer + 1);
    if (kind == "w")
      mlp->layers[layer].w = std::move(tensor);
    else if (kind == "b")
      mlp->layers[layer].b = std::move(tensor);
    else
      throw io_error("bad tensor name in checkpoint: " + name);
  }
  return params;
}

}  // namespace uda
