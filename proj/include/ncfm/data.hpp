#pragma once

// Benchmark distributions, CSV/IDX ingestion and seeded per-class batch
// sampling.

#include "ncfm/common.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ncfm::data {

// n x d samples (rows) with optional class labels in 0..C-1.
struct DataMatrix {
  Matrix values;
  std::optional<IntVector> labels;

  std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(values.cols()); }
  bool labeled() const { return labels.has_value(); }
  // Number of classes (max label + 1); 0 when unlabeled.
  int num_classes() const;
  // Row indices whose label equals class_id, in ascending order.
  std::vector<std::size_t> rows_of_class(int class_id) const;
  // Sub-matrix of the given rows (labels carried along when present).
  DataMatrix select(const std::vector<std::size_t>& rows) const;
};

// Throws ArgumentError when a DataMatrix invariant is broken: empty matrix,
// non-finite entries, label vector of the wrong length, negative labels or a
// class id in 0..C-1 without any row.
void validate(const DataMatrix& data);

enum class DatasetKind { GaussianMixture, TwoMoons, Rings, CsvFile, IdxImageFile };

std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& s);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::GaussianMixture;

  // gaussian-mixture: one component per class. Each class uses either a full
  // covariance (when `covariances` is non-empty) or an isotropic standard
  // deviation `scales[c]`. A scale of exactly 0 gives a point mass.
  std::vector<std::vector<double>> means;
  std::vector<double> scales;
  std::vector<std::vector<std::vector<double>>> covariances;

  // two-moons / rings
  double noise = 0.1;
  int rings_classes = 2;
  double ring_spacing = 1.0;

  // csv-file / idx-image-file
  std::filesystem::path path;
  std::filesystem::path labels_path;  // idx only; optional
  bool csv_header = false;
  bool csv_label_column = true;

  std::uint64_t seed = 0;
};

// Throws ConfigError describing the first invalid parameter.
void validate(const DatasetSpec& spec);

// Labeled samples with exactly n_per_class rows per class, grouped by class.
// File-based kinds load the file and then take n_per_class rows per class
// under the dataset seed: a permutation prefix when the class is large enough,
// otherwise draws with replacement. Bit-identical for identical inputs.
DataMatrix generate(const DatasetSpec& spec, std::size_t n_per_class);

// CSV: comma separated numbers, one sample per line. See docs/formats.md.
struct CsvOptions {
  bool header = false;
  bool label_column = true;
};
DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
DataMatrix parse_csv(const std::string& text, const CsvOptions& options = {});

// IDX: big-endian magic 0x000008NN (unsigned byte payload, NN dimensions).
// Image files (NN >= 2) are flattened row-major and scaled to [0,1].
DataMatrix load_idx(const std::filesystem::path& images,
                    const std::optional<std::filesystem::path>& labels = std::nullopt);
DataMatrix parse_idx(const std::vector<unsigned char>& images,
                     const std::vector<unsigned char>* labels = nullptr);

enum class FileFormat { Csv, Idx };
DataMatrix load(const std::filesystem::path& path, FileFormat format);

// batch_size rows drawn uniformly with replacement among rows of class_id.
// Throws LookupError when the class has no rows.
DataMatrix sample_batch(const DataMatrix& data, int class_id, std::size_t batch_size, Rng& rng);

// Column means of the rows of class_id.
Vector class_mean(const DataMatrix& data, int class_id);

}  // namespace ncfm::data
