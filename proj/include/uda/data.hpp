#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uda/tensor.hpp"

namespace uda {

// Labeled features; the source view of the world.
struct LabeledSet {
  Tensor x;            // [n x d]
  std::vector<int> y;  // one label per row
  int categories = 0;
};

// Unlabeled features; the only target view the trainer ever receives.
struct UnlabeledSet {
  Tensor x;  // [n x d]
};

// Target ground truth, kept in its own type so training code cannot reach
// it; only evaluation takes one of these.
struct HiddenLabels {
  std::vector<int> y;
};

struct ShiftSpec {
  int categories = 3;
  int per_category = 200;
  // Cluster means; when empty, categories are placed evenly on a circle of
  // the given radius in 2-D.
  std::vector<std::vector<double>> means;
  double radius = 4.0;
  double sigma = 1.0;  // shared isotropic stddev
  // Target means are the source means rotated (in the first two coordinates,
  // about the origin) and then translated.
  double rotation_deg = 30.0;
  std::vector<double> translation = {1.0, 0.0};
  std::uint64_t seed = 7;
};

struct SyntheticTask {
  LabeledSet source;
  UnlabeledSet target;
  HiddenLabels target_truth;
};

std::vector<std::vector<double>> source_means(const ShiftSpec& spec);
std::vector<std::vector<double>> target_means(const ShiftSpec& spec);
SyntheticTask generate_shifted_mixture(const ShiftSpec& spec);

// IDX container. Only element type 0x08 (unsigned byte) is supported.
struct IdxRaw {
  std::vector<int> dims;
  std::vector<unsigned char> bytes;
};
IdxRaw load_idx_raw(const std::string& path);
void write_idx(const std::string& path, const IdxRaw& raw);
// Bytes scaled to [0,1] by /255; images ([n x h x w]) flatten to [n x h*w].
Tensor load_idx(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);

// Nearest-neighbor resample of [n x h*w] image rows to new_h x new_w.
Tensor resize_nearest(const Tensor& images, int h, int w, int new_h, int new_w);

// Uniform-with-replacement index batches, deterministic from the seed.
class BatchIterator {
 public:
  BatchIterator(int n, int batch_size, Rng rng);
  std::vector<int> next();

 private:
  int n_;
  int batch_;
  Rng rng_;
};

// key=value manifest naming the dataset files and their roles.
struct DatasetManifest {
  std::string format;  // "csv" or "idx"
  std::string source_images;
  std::string source_labels;
  std::string target_images;
  std::string target_hidden_labels;
  int n_source = 0;
  int n_target = 0;
  int feature_dim = 0;
  int categories = 0;
};

void write_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest read_manifest(const std::string& path);
// Loads the three dataset pieces behind a manifest; paths are resolved
// relative to the manifest's directory. IDX image sets with mismatched
// geometry are resampled to the larger common size.
SyntheticTask load_task(const std::string& manifest_path);

// Feature matrices as CSV (no header; shortest round-trip formatting).
void write_matrix_csv(const Tensor& m, const std::string& path);
Tensor read_matrix_csv(const std::string& path);
void write_labels_csv(const std::vector<int>& y, const std::string& path);
std::vector<int> read_labels_csv(const std::string& path);

}  // namespace uda
