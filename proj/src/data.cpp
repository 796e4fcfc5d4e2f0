#include "uda/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace uda {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

void check_spec(const ShiftSpec& spec) {
  if (spec.categories < 2) throw config_error("need at least 2 categories");
  if (spec.per_category < 1) throw config_error("per_category must be positive");
  if (!(spec.sigma > 0.0)) throw config_error("sigma must be positive");
  if (!spec.means.empty()) {
    if (static_cast<int>(spec.means.size()) != spec.categories)
      throw config_error("means count must equal categories");
    for (const auto& m : spec.means)
      if (m.size() != spec.means.front().size() || m.size() < 2)
        throw config_error("means must share a dimension >= 2");
  }
  if (spec.translation.size() < 2) throw config_error("translation needs >= 2 components");
}

}  // namespace

std::vector<std::vector<double>> source_means(const ShiftSpec& spec) {
  check_spec(spec);
  if (!spec.means.empty()) return spec.means;
  std::vector<std::vector<double>> means;
  for (int c = 0; c < spec.categories; ++c) {
    const double angle = 2.0 * kPi * c / spec.categories;
    means.push_back({spec.radius * std::cos(angle), spec.radius * std::sin(angle)});
  }
  return means;
}

std::vector<std::vector<double>> target_means(const ShiftSpec& spec) {
  std::vector<std::vector<double>> means = source_means(spec);
  const double theta = spec.rotation_deg * kPi / 180.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  for (auto& m : means) {
    const double x = m[0], y = m[1];
    m[0] = ct * x - st * y;
    m[1] = st * x + ct * y;
    for (std::size_t i = 0; i < m.size() && i < spec.translation.size(); ++i)
      m[i] += spec.translation[i];
  }
  return means;
}

SyntheticTask generate_shifted_mixture(const ShiftSpec& spec) {
  const auto mu_s = source_means(spec);
  const auto mu_t = target_means(spec);
  const int d = static_cast<int>(mu_s.front().size());
  const int n = spec.categories * spec.per_category;

  Rng rng(mix_seed(spec.seed, 0x64617461ULL));
  SyntheticTask task;
  task.source.x = Tensor(Shape{n, d});
  task.source.categories = spec.categories;
  task.target.x = Tensor(Shape{n, d});

  for (int c = 0; c < spec.categories; ++c) {
    for (int k = 0; k < spec.per_category; ++k) {
      const int row = c * spec.per_category + k;
      for (int j = 0; j < d; ++j)
        task.source.x.values[static_cast<std::size_t>(row) * d + j] =
            mu_s[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] +
            spec.sigma * rng.normal();
      task.source.y.push_back(c);
    }
  }
  for (int c = 0; c < spec.categories; ++c) {
    for (int k = 0; k < spec.per_category; ++k) {
      const int row = c * spec.per_category + k;
      for (int j = 0; j < d; ++j)
        task.target.x.values[static_cast<std::size_t>(row) * d + j] =
            mu_t[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] +
            spec.sigma * rng.normal();
      task.target_truth.y.push_back(c);
    }
  }
  return task;
}

namespace {

std::uint32_t read_be32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw io_error("truncated IDX header in " + path);
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

IdxRaw load_idx_raw(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open IDX file: " + path);
  unsigned char header[4];
  is.read(reinterpret_cast<char*>(header), 4);
  if (!is) throw io_error("truncated IDX header in " + path);
  if (header[0] != 0x00 || header[1] != 0x00)
    throw io_error("bad IDX magic bytes in " + path);
  if (header[2] != 0x08)
    throw io_error("unsupported IDX element type in " + path);
  const int ndim = header[3];
  if (ndim < 1) throw io_error("IDX dimension count must be >= 1 in " + path);

  IdxRaw raw;
  std::size_t count = 1;
  for (int i = 0; i < ndim; ++i) {
    const std::uint32_t dim = read_be32(is, path);
    raw.dims.push_back(static_cast<int>(dim));
    count *= dim;
  }
  raw.bytes.resize(count);
  is.read(reinterpret_cast<char*>(raw.bytes.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(is.gcount()) != count)
    throw io_error("truncated IDX payload in " + path);
  return raw;
}

void write_idx(const std::string& path, const IdxRaw& raw) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw io_error("cannot open IDX file for writing: " + path);
  const unsigned char header[4] = {0x00, 0x00, 0x08,
                                   static_cast<unsigned char>(raw.dims.size())};
  os.write(reinterpret_cast<const char*>(header), 4);
  for (int dim : raw.dims) {
    const std::uint32_t v = static_cast<std::uint32_t>(dim);
    const unsigned char b[4] = {
        static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
  }
  os.write(reinterpret_cast<const char*>(raw.bytes.data()),
           static_cast<std::streamsize>(raw.bytes.size()));
  if (!os) throw io_error("write failed: " + path);
}

Tensor load_idx(const std::string& path) {
  const IdxRaw raw = load_idx_raw(path);
  Shape shape;
  if (raw.dims.size() == 1) {
    shape = Shape{raw.dims[0]};
  } else {
    int flat = 1;
    for (std::size_t i = 1; i < raw.dims.size(); ++i) flat *= raw.dims[i];
    shape = Shape{raw.dims[0], flat};
  }
  Tensor out(shape);
  for (std::size_t i = 0; i < raw.bytes.size(); ++i)
    out.values[i] = static_cast<double>(raw.bytes[i]) / 255.0;
  return out;
}

std::vector<int> load_idx_labels(const std::string& path) {
  const IdxRaw raw = load_idx_raw(path);
  if (raw.dims.size() != 1) throw io_error("label IDX must be 1-dimensional: " + path);
  std::vector<int> y(raw.bytes.size());
  for (std::size_t i = 0; i < raw.bytes.size(); ++i) y[i] = raw.bytes[i];
  return y;
}

Tensor resize_nearest(const Tensor& images, int h, int w, int new_h, int new_w) {
  if (images.cols() != h * w) throw shape_error("image rows do not match h*w");
  const int n = images.rows();
  Tensor out(Shape{n, new_h * new_w});
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < new_h; ++r) {
      const int sr = std::min(h - 1, r * h / new_h);
      for (int c = 0; c < new_w; ++c) {
        const int sc = std::min(w - 1, c * w / new_w);
        out.values[(static_cast<std::size_t>(i) * new_h + r) * new_w + c] =
            images.at2(i, sr * w + sc);
      }
    }
  }
  return out;
}

BatchIterator::BatchIterator(int n, int batch_size, Rng rng)
    : n_(n), batch_(batch_size), rng_(rng) {
  if (n <= 0) throw config_error("cannot iterate an empty dataset");
  if (batch_size < 1) throw config_error("batch_size must be >= 1");
}

std::vector<int> BatchIterator::next() {
  std::vector<int> idx(static_cast<std::size_t>(batch_));
  for (int i = 0; i < batch_; ++i) idx[static_cast<std::size_t>(i)] = rng_.index(n_);
  return idx;
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw io_error("cannot write manifest: " + path);
  os << "format=" << m.format << "\n";
  os << "source_images=" << m.source_images << "\n";
  os << "source_labels=" << m.source_labels << "\n";
  os << "target_images=" << m.target_images << "\n";
  os << "target_hidden_labels=" << m.target_hidden_labels << "\n";
  os << "n_source=" << m.n_source << "\n";
  os << "n_target=" << m.n_target << "\n";
  os << "feature_dim=" << m.feature_dim << "\n";
  os << "categories=" << m.categories << "\n";
  if (!os) throw io_error("write failed: " + path);
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open manifest: " + path);
  DatasetManifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw io_error("manifest line " + std::to_string(lineno) + " is not key=value");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "format")
      m.format = val;
    else if (key == "source_images")
      m.source_images = val;
    else if (key == "source_labels")
      m.source_labels = val;
    else if (key == "target_images")
      m.target_images = val;
    else if (key == "target_hidden_labels")
      m.target_hidden_labels = val;
    else if (key == "n_source")
      m.n_source = static_cast<int>(parse_int(val));
    else if (key == "n_target")
      m.n_target = static_cast<int>(parse_int(val));
    else if (key == "feature_dim")
      m.feature_dim = static_cast<int>(parse_int(val));
    else if (key == "categories")
      m.categories = static_cast<int>(parse_int(val));
    else
      throw io_error("unknown manifest key: " + key);
  }
  return m;
}

namespace {

std::string resolve(const std::string& manifest_path, const std::string& file) {
  const std::filesystem::path p(file);
  if (p.is_absolute()) return file;
  return (std::filesystem::path(manifest_path).parent_path() / p).string();
}

}  // namespace

SyntheticTask load_task(const std::string& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  SyntheticTask task;
  if (m.format == "csv") {
    task.source.x = read_matrix_csv(resolve(manifest_path, m.source_images));
    task.source.y = read_labels_csv(resolve(manifest_path, m.source_labels));
    task.target.x = read_matrix_csv(resolve(manifest_path, m.target_images));
    task.target_truth.y = read_labels_csv(resolve(manifest_path, m.target_hidden_labels));
  } else if (m.format == "idx") {
    const IdxRaw src_raw = load_idx_raw(resolve(manifest_path, m.source_images));
    const IdxRaw tgt_raw = load_idx_raw(resolve(manifest_path, m.target_images));
    task.source.x = load_idx(resolve(manifest_path, m.source_images));
    task.source.y = load_idx_labels(resolve(manifest_path, m.source_labels));
    task.target.x = load_idx(resolve(manifest_path, m.target_images));
    task.target_truth.y = load_idx_labels(resolve(manifest_path, m.target_hidden_labels));
    if (src_raw.dims.size() == 3 && tgt_raw.dims.size() == 3) {
      const int h = std::max(src_raw.dims[1], tgt_raw.dims[1]);
      const int w = std::max(src_raw.dims[2], tgt_raw.dims[2]);
      if (src_raw.dims[1] != h || src_raw.dims[2] != w)
        task.source.x = resize_nearest(task.source.x, src_raw.dims[1], src_raw.dims[2], h, w);
      if (tgt_raw.dims[1] != h || tgt_raw.dims[2] != w)
        task.target.x = resize_nearest(task.target.x, tgt_raw.dims[1], tgt_raw.dims[2], h, w);
    }
  } else {
    throw io_error("unknown manifest format: " + m.format);
  }

  task.source.categories = m.categories;
  if (task.source.categories == 0 && !task.source.y.empty())
    task.source.categories = *std::max_element(task.source.y.begin(), task.source.y.end()) + 1;
  if (task.source.x.rows() != static_cast<int>(task.source.y.size()))
    throw io_error("source images/labels row mismatch behind " + manifest_path);
  if (task.target.x.rows() != static_cast<int>(task.target_truth.y.size()))
    throw io_error("target images/labels row mismatch behind " + manifest_path);
  return task;
}

void write_matrix_csv(const Tensor& m, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw io_error("cannot write: " + path);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << fmt_double(m.at2(i, j));
    }
    os << '\n';
  }
  if (!os) throw io_error("write failed: " + path);
}

Tensor read_matrix_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open: " + path);
  std::vector<double> values;
  int cols = -1;
  int rows = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int c = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(parse_double(cell));
      ++c;
    }
    if (cols < 0)
      cols = c;
    else if (c != cols)
      throw io_error("ragged CSV row in " + path);
    ++rows;
  }
  if (rows == 0) throw io_error("empty CSV: " + path);
  return Tensor(Shape{rows, cols}, std::move(values));
}

void write_labels_csv(const std::vector<int>& y, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw io_error("cannot write: " + path);
  for (int v : y) os << v << '\n';
  if (!os) throw io_error("write failed: " + path);
}

std::vector<int> read_labels_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open: " + path);
  std::vector<int> y;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    y.push_back(static_cast<int>(parse_int(line)));
  }
  return y;
}

}  // namespace uda
