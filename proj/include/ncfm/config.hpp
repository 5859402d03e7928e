#pragma once

// JSON run configuration shared by the CLI subcommands. Every key is
// optional and falls back to the documented default (docs/formats.md);
// unknown keys are rejected with their full key path.

#include "ncfm/data.hpp"
#include "ncfm/distill.hpp"
#include "ncfm/eval.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace ncfm::config {

// Three unit-scale gaussian classes centred at (0,0), (4,0) and (0,4).
data::DatasetSpec default_dataset_spec();

struct DatasetSection {
  data::DatasetSpec spec = default_dataset_spec();
  std::size_t n_per_class = 500;
};

struct EvalSection {
  eval::ClassifierKind classifier = eval::ClassifierKind::MultinomialLogistic;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  eval::LogisticOptions logistic;
  // Held-out data: regenerated from the dataset spec with test_seed for the
  // synthetic kinds, or loaded from test_path for the file kinds.
  std::size_t test_n_per_class = 2000;
  std::uint64_t test_seed = 1000003;
  std::filesystem::path test_path;
  std::filesystem::path test_labels_path;
};

struct BenchSection {
  std::vector<std::size_t> cfd_sizes{1000, 3000, 10000, 30000, 100000};
  std::vector<std::size_t> mmd_sizes{100, 300, 1000, 3000};
  eval::BenchOptions options;
};

struct RunConfig {
  DatasetSection dataset;
  distill::DistillConfig distill;
  distill::FeatureConfig features;
  EvalSection eval;
  BenchSection bench;
  std::filesystem::path output_dir = "ncfm_out";
};

// Throws ConfigError with line/column for syntax errors and with the key path
// for unknown keys, wrong types and invalid values.
RunConfig parse_run_config(const std::string& text);

// Reads the file, throwing IoError when it cannot be read.
std::string read_text_file(const std::filesystem::path& path);

// Resolves a relative output directory against the NCFM_OUTPUT_ROOT
// environment variable when it is set and non-empty.
std::filesystem::path resolve_output_dir(const std::filesystem::path& dir);

// Real training data and held-out test data described by a configuration.
data::DataMatrix training_data(const RunConfig& config);
data::DataMatrix test_data(const RunConfig& config);

}  // namespace ncfm::config
