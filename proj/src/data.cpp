#include "ncfm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

namespace ncfm::data {

int DataMatrix::num_classes() const {
  if (!labels || labels->size() == 0) return 0;
  return labels->maxCoeff() + 1;
}

std::vector<std::size_t> DataMatrix::rows_of_class(int class_id) const {
  std::vector<std::size_t> rows;
  if (!labels) return rows;
  for (Eigen::Index i = 0; i < labels->size(); ++i) {
    if ((*labels)(i) == class_id) rows.push_back(static_cast<std::size_t>(i));
  }
  return rows;
}

DataMatrix DataMatrix::select(const std::vector<std::size_t>& rows) const {
  DataMatrix out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  if (labels) out.labels = IntVector(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(rows[r]);
    out.values.row(static_cast<Eigen::Index>(r)) = values.row(src);
    if (labels) (*out.labels)(static_cast<Eigen::Index>(r)) = (*labels)(src);
  }
  return out;
}

void validate(const DataMatrix& data) {
  if (data.values.rows() < 1 || data.values.cols() < 1) {
    throw ArgumentError("data matrix must have at least one row and one column");
  }
  if (!data.values.allFinite()) throw ArgumentError("data matrix contains non-finite entries");
  if (!data.labels) return;
  const IntVector& labels = *data.labels;
  if (labels.size() != data.values.rows()) {
    throw ArgumentError("label vector length " + std::to_string(labels.size()) +
                        " does not match row count " + std::to_string(data.values.rows()));
  }
  if (labels.minCoeff() < 0) throw ArgumentError("labels must be non-negative class ids");
  std::vector<bool> seen(static_cast<std::size_t>(labels.maxCoeff()) + 1, false);
  for (Eigen::Index i = 0; i < labels.size(); ++i) seen[static_cast<std::size_t>(labels(i))] = true;
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) throw ArgumentError("class id " + std::to_string(c) + " has no rows");
  }
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::GaussianMixture: return "gaussian-mixture";
    case DatasetKind::TwoMoons: return "two-moons";
    case DatasetKind::Rings: return "rings";
    case DatasetKind::CsvFile: return "csv-file";
    case DatasetKind::IdxImageFile: return "idx-image-file";
  }
  return "unknown";
}

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "gaussian-mixture") return DatasetKind::GaussianMixture;
  if (s == "two-moons") return DatasetKind::TwoMoons;
  if (s == "rings") return DatasetKind::Rings;
  if (s == "csv-file") return DatasetKind::CsvFile;
  if (s == "idx-image-file") return DatasetKind::IdxImageFile;
  throw ConfigError("unknown dataset kind '" + s + "'");
}

namespace {

// Symmetric square root of a PSD covariance, or a ConfigError naming the class.
Matrix covariance_root(const std::vector<std::vector<double>>& cov, std::size_t d, std::size_t c) {
  if (cov.size() != d) {
    throw ConfigError("covariance of class " + std::to_string(c) + " must be " +
                      std::to_string(d) + "x" + std::to_string(d));
  }
  Matrix sigma(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    if (cov[i].size() != d) {
      throw ConfigError("covariance of class " + std::to_string(c) + " has a ragged row");
    }
    for (std::size_t j = 0; j < d; ++j) {
      sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cov[i][j];
    }
  }
  if (!sigma.allFinite()) throw ConfigError("covariance of class " + std::to_string(c) + " is not finite");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + sigma.cwiseAbs().maxCoeff())) {
    throw ConfigError("covariance of class " + std::to_string(c) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  const Vector lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-12 * (1.0 + lambda.cwiseAbs().maxCoeff())) {
    throw ConfigError("covariance of class " + std::to_string(c) + " is not positive semi-definite");
  }
  const Vector root = lambda.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

DataMatrix labeled_block(std::size_t classes, std::size_t n_per_class, std::size_t d) {
  DataMatrix out;
  const auto rows = static_cast<Eigen::Index>(classes * n_per_class);
  out.values = Matrix::Zero(rows, static_cast<Eigen::Index>(d));
  out.labels = IntVector(rows);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      (*out.labels)(static_cast<Eigen::Index>(c * n_per_class + i)) = static_cast<int>(c);
    }
  }
  return out;
}

DataMatrix generate_gaussian_mixture(const DatasetSpec& spec, std::size_t n_per_class) {
  const std::size_t classes = spec.means.size();
  const std::size_t d = spec.means.front().size();
  DataMatrix out = labeled_block(classes, n_per_class, d);
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(static_cast<Eigen::Index>(d));
  for (std::size_t c = 0; c < classes; ++c) {
    Matrix root;
    if (!spec.covariances.empty()) {
      root = covariance_root(spec.covariances[c], d, c);
    } else {
      const double s = spec.scales.size() == 1 ? spec.scales[0] : spec.scales[c];
      root = s * Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    }
    const Eigen::Map<const Vector> mean(spec.means[c].data(), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n_per_class; ++i) {
      for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = normal(rng);
      out.values.row(static_cast<Eigen::Index>(c * n_per_class + i)) = (mean + root * z).transpose();
    }
  }
  return out;
}

DataMatrix generate_two_moons(const DatasetSpec& spec, std::size_t n_per_class) {
  DataMatrix out = labeled_block(2, n_per_class, 2);
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const double theta = angle(rng);
      double x = std::cos(theta);
      double y = std::sin(theta);
      if (c == 1) {
        x = 1.0 - x;
        y = 0.5 - y;
      }
      const auto r = static_cast<Eigen::Index>(c * n_per_class + i);
      out.values(r, 0) = x + spec.noise * noise(rng);
      out.values(r, 1) = y + spec.noise * noise(rng);
    }
  }
  return out;
}

DataMatrix generate_rings(const DatasetSpec& spec, std::size_t n_per_class) {
  const auto classes = static_cast<std::size_t>(spec.rings_classes);
  DataMatrix out = labeled_block(classes, n_per_class, 2);
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t c = 0; c < classes; ++c) {
    const double radius = static_cast<double>(c + 1) * spec.ring_spacing;
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const double theta = angle(rng);
      const auto r = static_cast<Eigen::Index>(c * n_per_class + i);
      out.values(r, 0) = radius * std::cos(theta) + spec.noise * noise(rng);
      out.values(r, 1) = radius * std::sin(theta) + spec.noise * noise(rng);
    }
  }
  return out;
}

// Per-class resampling of a loaded file onto exactly n_per_class rows: a seeded
// permutation prefix when the class is large enough, otherwise with replacement.
DataMatrix rebalance(const DataMatrix& loaded, std::size_t n_per_class, std::uint64_t seed) {
  if (!loaded.labeled()) throw ConfigError("file-based datasets must carry labels");
  validate(loaded);
  Rng rng(seed);
  std::vector<std::size_t> picked;
  const int classes = loaded.num_classes();
  for (int c = 0; c < classes; ++c) {
    std::vector<std::size_t> rows = loaded.rows_of_class(c);
    if (rows.size() >= n_per_class) {
      std::shuffle(rows.begin(), rows.end(), rng);
      picked.insert(picked.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_per_class));
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
      for (std::size_t i = 0; i < n_per_class; ++i) picked.push_back(rows[pick(rng)]);
    }
  }
  return loaded.select(picked);
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) {
    throw ParseError("idx: truncated header at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

struct IdxHeader {
  std::vector<std::uint32_t> dims;
  std::size_t payload_offset = 0;
};

IdxHeader parse_idx_header(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4) throw ParseError("idx: truncated header at byte offset " + std::to_string(bytes.size()));
  if (bytes[0] != 0 || bytes[1] != 0) throw ParseError("idx: bad magic at byte offset 0 (first two bytes must be zero)");
  if (bytes[2] != 0x08) {
    std::ostringstream msg;
    msg << "idx: unsupported element type 0x" << std::hex << int{bytes[2]}
        << " at byte offset 2 (only unsigned byte 0x08 is supported)";
    throw ParseError(msg.str());
  }
  const int ndims = bytes[3];
  if (ndims < 1) throw ParseError("idx: zero dimension count at byte offset 3");
  IdxHeader header;
  for (int k = 0; k < ndims; ++k) header.dims.push_back(read_be32(bytes, 4 + 4 * static_cast<std::size_t>(k)));
  header.payload_offset = 4 + 4 * static_cast<std::size_t>(ndims);
  std::size_t expected = 1;
  for (auto dim : header.dims) expected *= dim;
  if (bytes.size() - header.payload_offset != expected) {
    throw ParseError("idx: payload starting at byte offset " + std::to_string(header.payload_offset) +
                     " has " + std::to_string(bytes.size() - header.payload_offset) + " bytes, expected " +
                     std::to_string(expected));
  }
  return header;
}

}  // namespace

void validate(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::GaussianMixture: {
      if (spec.means.empty()) throw ConfigError("gaussian-mixture needs at least one class mean");
      const std::size_t d = spec.means.front().size();
      if (d == 0) throw ConfigError("gaussian-mixture means must have dimension >= 1");
      for (std::size_t c = 0; c < spec.means.size(); ++c) {
        if (spec.means[c].size() != d) {
          throw ConfigError("mean of class " + std::to_string(c) + " has dimension " +
                            std::to_string(spec.means[c].size()) + ", expected " + std::to_string(d));
        }
        for (double v : spec.means[c]) {
          if (!std::isfinite(v)) throw ConfigError("mean of class " + std::to_string(c) + " is not finite");
        }
      }
      if (!spec.covariances.empty()) {
        if (spec.covariances.size() != spec.means.size()) {
          throw ConfigError("gaussian-mixture needs one covariance per class");
        }
        for (std::size_t c = 0; c < spec.covariances.size(); ++c) covariance_root(spec.covariances[c], d, c);
      } else {
        if (spec.scales.size() != 1 && spec.scales.size() != spec.means.size()) {
          throw ConfigError("gaussian-mixture scales must have length 1 or one entry per class");
        }
        for (double s : spec.scales) {
          if (!std::isfinite(s) || s < 0.0) {
            throw ConfigError("gaussian-mixture scales must be finite and non-negative");
          }
        }
      }
      break;
    }
    case DatasetKind::TwoMoons:
      if (!std::isfinite(spec.noise) || spec.noise < 0.0) throw ConfigError("two-moons noise must be >= 0");
      break;
    case DatasetKind::Rings:
      if (spec.rings_classes < 1) throw ConfigError("rings needs at least one class");
      if (!(spec.ring_spacing > 0.0)) throw ConfigError("rings spacing must be > 0");
      if (!std::isfinite(spec.noise) || spec.noise < 0.0) throw ConfigError("rings noise must be >= 0");
      break;
    case DatasetKind::CsvFile:
    case DatasetKind::IdxImageFile:
      if (spec.path.empty() || !std::filesystem::exists(spec.path)) {
        throw ConfigError("dataset file '" + spec.path.string() + "' does not exist");
      }
      if (spec.kind == DatasetKind::IdxImageFile && !spec.labels_path.empty() &&
          !std::filesystem::exists(spec.labels_path)) {
        throw ConfigError("label file '" + spec.labels_path.string() + "' does not exist");
      }
      break;
  }
}

DataMatrix generate(const DatasetSpec& spec, std::size_t n_per_class) {
  if (n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
  validate(spec);
  switch (spec.kind) {
    case DatasetKind::GaussianMixture: return generate_gaussian_mixture(spec, n_per_class);
    case DatasetKind::TwoMoons: return generate_two_moons(spec, n_per_class);
    case DatasetKind::Rings: return generate_rings(spec, n_per_class);
    case DatasetKind::CsvFile:
      return rebalance(load_csv(spec.path, {spec.csv_header, spec.csv_label_column}), n_per_class, spec.seed);
    case DatasetKind::IdxImageFile: {
      std::optional<std::filesystem::path> labels;
      if (!spec.labels_path.empty()) labels = spec.labels_path;
      return rebalance(load_idx(spec.path, labels), n_per_class, spec.seed);
    }
  }
  throw ConfigError("unhandled dataset kind");
}

DataMatrix parse_csv(const std::string& text, const CsvOptions& options) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (options.header && rows.empty() && width == 0) {
      width = static_cast<std::size_t>(std::count(view.begin(), view.end(), ',')) + 1;
      continue;
    }
    std::vector<double> row;
    std::size_t column = 0;
    std::size_t start = 0;
    while (true) {
      ++column;
      const std::size_t comma = view.find(',', start);
      const std::string_view cell = trim(view.substr(start, comma == std::string_view::npos ? view.npos : comma - start));
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        throw ParseError("csv: line " + std::to_string(line_no) + ", column " + std::to_string(column) +
                         ": cannot parse '" + std::string(cell) + "' as a finite number");
      }
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw ParseError("csv: line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                       " columns, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("csv: no data rows");
  const std::size_t feature_cols = options.label_column ? width - 1 : width;
  if (feature_cols < 1) throw ParseError("csv: line 1: need at least one feature column besides the label");

  DataMatrix out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols));
  if (options.label_column) out.labels = IntVector(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < feature_cols; ++j) {
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r][j];
    }
    if (options.label_column) {
      const double label = rows[r][width - 1];
      if (label < 0.0 || label != std::floor(label) || label > 1e9) {
        throw ParseError("csv: data row " + std::to_string(r + 1) + ", column " + std::to_string(width) +
                         ": label must be a non-negative integer");
      }
      (*out.labels)(static_cast<Eigen::Index>(r)) = static_cast<int>(label);
    }
  }
  try {
    validate(out);
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("csv: ") + e.what());
  }
  return out;
}

DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), options);
}

DataMatrix parse_idx(const std::vector<unsigned char>& images, const std::vector<unsigned char>* labels) {
  const IdxHeader header = parse_idx_header(images);
  const std::size_t n = header.dims[0];
  std::size_t width = 1;
  for (std::size_t k = 1; k < header.dims.size(); ++k) width *= header.dims[k];
  if (n == 0 || width == 0) throw ParseError("idx: empty image set declared at byte offset 4");

  DataMatrix out;
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  const unsigned char* payload = images.data() + header.payload_offset;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = payload[i * width + j] / 255.0;
    }
  }
  if (labels) {
    const IdxHeader lh = parse_idx_header(*labels);
    if (lh.dims.size() != 1) throw ParseError("idx labels: expected 1 dimension at byte offset 3");
    if (lh.dims[0] != n) {
      throw ParseError("idx labels: count at byte offset 4 is " + std::to_string(lh.dims[0]) +
                       ", expected " + std::to_string(n));
    }
    out.labels = IntVector(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) (*out.labels)(static_cast<Eigen::Index>(i)) = (*labels)[lh.payload_offset + i];
    try {
      validate(out);
    } catch (const ArgumentError& e) {
      throw ParseError(std::string("idx labels: ") + e.what());
    }
  }
  return out;
}

DataMatrix load_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels) {
  const std::vector<unsigned char> image_bytes = read_bytes(images);
  if (!labels) return parse_idx(image_bytes);
  const std::vector<unsigned char> label_bytes = read_bytes(*labels);
  return parse_idx(image_bytes, &label_bytes);
}

DataMatrix load(const std::filesystem::path& path, FileFormat format) {
  if (!std::filesystem::exists(path)) throw IoError("file '" + path.string() + "' does not exist");
  return format == FileFormat::Csv ? load_csv(path) : load_idx(path);
}

DataMatrix sample_batch(const DataMatrix& data, int class_id, std::size_t batch_size, Rng& rng) {
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  const std::vector<std::size_t> rows = data.rows_of_class(class_id);
  if (rows.empty()) throw LookupError("class id " + std::to_string(class_id) + " not present in data");
  std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
  std::vector<std::size_t> chosen(batch_size);
  for (auto& r : chosen) r = rows[pick(rng)];
  return data.select(chosen);
}

Vector class_mean(const DataMatrix& data, int class_id) {
  const std::vector<std::size_t> rows = data.rows_of_class(class_id);
  if (rows.empty()) throw LookupError("class id " + std::to_string(class_id) + " not present in data");
  Vector mean = Vector::Zero(data.values.cols());
  for (auto r : rows) mean += data.values.row(static_cast<Eigen::Index>(r)).transpose();
  return mean / static_cast<double>(rows.size());
}

}  // namespace ncfm::data
