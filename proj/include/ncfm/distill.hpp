#pragma once

// Minmax distillation driver: per class, ascend the frequency sampler on the
// characteristic function discrepancy between real and synthetic features,
// then descend the synthetic samples on the same discrepancy.

#include "ncfm/charfn.hpp"
#include "ncfm/common.hpp"
#include "ncfm/data.hpp"
#include "ncfm/features.hpp"
#include "ncfm/freqsampler.hpp"

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace ncfm::distill {

// Per-entry Adam moments plus one step counter per class (rows of a class are
// only updated on that class's steps).
struct AdamState {
  Matrix first;
  Matrix second;
  std::vector<std::size_t> steps;
};

struct SyntheticSet {
  Matrix values;     // (C * ipc) x d, grouped by class
  IntVector labels;  // ipc rows per class
  std::size_t ipc = 0;
  AdamState optimizer;

  int num_classes() const { return static_cast<int>(labels.size() / static_cast<Eigen::Index>(ipc ? ipc : 1)); }
  // First row of class c (rows c*ipc .. c*ipc+ipc-1).
  Eigen::Index class_offset(int c) const { return static_cast<Eigen::Index>(c) * static_cast<Eigen::Index>(ipc); }
  data::DataMatrix as_data() const;
};

enum class InitStrategy { RandomReal, GaussianNoise };
std::string to_string(InitStrategy s);
InitStrategy init_strategy_from_string(const std::string& s);

struct DistillConfig {
  std::size_t iterations = 1000;
  std::size_t q_freqs = 1024;
  double alpha = 0.5;
  double epsilon_sqrt = 1e-12;
  double lr_synth = 0.01;
  double lr_sampler = 1.0;
  std::size_t max_steps_per_iter = 1;
  std::size_t min_steps_per_iter = 1;
  bool sampler_enabled = true;
  bool reblend_each_iter = true;
  std::size_t batch_real = 64;
  bool full_real_batch = false;  // use every real row of the class instead of sampling
  std::uint64_t seed = 0;

  std::size_t ipc = 10;
  InitStrategy init = InitStrategy::RandomReal;
  double init_noise_variance = 0.01;

  std::size_t sampler_components = 0;  // 0 = max(1, q / 16)
  double sampler_init_scale = 1.0;
  double log_scale_min = -std::numeric_limits<double>::infinity();
  double log_scale_max = std::numeric_limits<double>::infinity();
  bool resample_freqs_for_min = false;
  bool random_class_order = false;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.0;
  double grad_clip = 0.0;  // 0 = off; otherwise max Frobenius norm

  Execution exec;
};

// Throws ConfigError naming the first invalid field.
void validate(const DistillConfig& config);

struct FeatureConfig {
  features::FeatureKind kind = features::FeatureKind::Identity;
  std::size_t hidden_dim = 64;
  std::size_t out_dim = 16;
  std::size_t pretrain_epochs = 0;
  double pretrain_learning_rate = 0.05;
  std::size_t pretrain_batch_size = 32;
};

struct LogRecord {
  std::size_t iteration = 0;
  int class_id = 0;
  double cfd_total = 0.0;
  double amp_term = 0.0;
  double phase_term = 0.0;
  double sampler_scale_rms = 0.0;
  double sampler_scale_max = 0.0;
  double wall_seconds = 0.0;
};

using TrainLog = std::vector<LogRecord>;

SyntheticSet init_synthetic(const data::DataMatrix& real, std::size_t ipc, InitStrategy strategy, Rng& rng,
                            double noise_variance = 0.01);

struct DistillState {
  SyntheticSet synth;
  freqsampler::FreqSampler sampler;
  features::FeatureMap map;
};

// One minmax step on class_id. Throws NumericError (with iteration and class)
// on any non-finite loss, gradient or update.
LogRecord distill_step(DistillState& state, const data::DataMatrix& real, const DistillConfig& config, int class_id,
                       std::size_t iteration, Rng& rng);

struct RunResult {
  DistillState state;
  TrainLog log;
};

// Builds the feature map and sampler, initializes the synthetic set and runs
// config.iterations passes over all classes.
RunResult run(const data::DataMatrix& real, const DistillConfig& config, const FeatureConfig& features = {});

// Checkpoint container: the line "NCFM1" followed by a JSON document.
inline constexpr const char* kCheckpointMagic = "NCFM1";

struct Checkpoint {
  SyntheticSet synth;
  freqsampler::FreqSampler sampler{1, 1};
  features::FeatureMap map;
  std::uint64_t seed = 0;
  std::string config_text;
};

std::string serialize_checkpoint(const DistillState& state, std::uint64_t seed, const std::string& config_text);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const DistillState& state, std::uint64_t seed,
                     const std::string& config_text);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log);

// Mean CFD per iteration (averaged over the classes processed in it).
std::vector<double> per_iteration_cfd(const TrainLog& log);

}  // namespace ncfm::distill
