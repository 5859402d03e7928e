#pragma once

// Downstream evaluation of distilled sets, verification suites for the
// discrepancy's mathematical properties, and the time-complexity benchmark.

#include "ncfm/common.hpp"
#include "ncfm/data.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace ncfm::eval {

// ---------------------------------------------------------------------------
// Classifiers and evaluation reports

enum class ClassifierKind { MultinomialLogistic, OneNearestNeighbor };
enum class TrainSource { Distilled, RandomSubset, Full };

std::string to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(const std::string& s);
std::string to_string(TrainSource source);

// Full-batch gradient descent on mean softmax cross-entropy run close to the
// unregularized maximum-likelihood fit, weights started
// from N(0, init_scale^2) under the evaluation seed.
struct LogisticOptions {
  std::size_t iterations = 5000;
  double learning_rate = 1.0;
  double l2 = 0.0;
  double init_scale = 0.01;
};

// Accuracy of the chosen classifier trained on `train`, tested on `test`.
double train_and_score(const data::DataMatrix& train, const data::DataMatrix& test, ClassifierKind kind,
                       std::uint64_t seed, const LogisticOptions& options = {});

struct EvalReport {
  TrainSource train_source = TrainSource::Full;
  ClassifierKind classifier = ClassifierKind::MultinomialLogistic;
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracies;  // one per seed
  double mean = 0.0;
  double stddev = 0.0;  // population std across seeds
};

// Throws ArgumentError if a test class has no training rows or dimensions
// differ.
EvalReport evaluate(const data::DataMatrix& train, const data::DataMatrix& test, ClassifierKind kind,
                    const std::vector<std::uint64_t>& seeds, const LogisticOptions& options = {});

// Distilled vs equal-size random real subset (ipc rows per class, drawn per
// seed) vs the full training set.
std::vector<EvalReport> compare_sources(const data::DataMatrix& real_train, const data::DataMatrix& test,
                                        const data::DataMatrix& distilled, std::size_t ipc, ClassifierKind kind,
                                        const std::vector<std::uint64_t>& seeds, const LogisticOptions& options = {});

void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports);

// ---------------------------------------------------------------------------
// Verification suites

struct SuiteResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;  // suite-specific worst-case statistic
  std::string detail;
};

// Random dataset drawn for one trial, with d columns.
using DatasetSampler = std::function<Matrix(Rng&, Eigen::Index d)>;

struct AxiomOptions {
  std::size_t max_n = 20;
  Eigen::Index max_d = 4;
  std::size_t q = 64;
  double slack = 1e-9;
  double epsilon_sqrt = 1e-12;
};

struct AxiomReport {
  std::size_t trials = 0;
  std::size_t nonneg_violations = 0;
  std::size_t symmetry_violations = 0;
  std::size_t triangle_violations = 0;
  double min_value = 0.0;          // smallest cfd seen
  double worst_symmetry = 0.0;     // max |cfd(P,Q) - cfd(Q,P)|
  double worst_triangle = 0.0;     // max cfd(P,R) - cfd(P,Q) - cfd(Q,R)
  bool passed() const { return nonneg_violations + symmetry_violations + triangle_violations == 0; }
};

// Default sampler: n uniform in 1..max_n, entries N(mu, s^2) with per-set
// random mu and s.
DatasetSampler default_dataset_sampler(std::size_t max_n = 20);

// Non-negativity, exact symmetry and the triangle inequality of the alpha =
// 0.5 discrepancy over random triples sharing one frequency set.
AxiomReport metric_axiom_suite(const DatasetSampler& sampler, std::size_t trials, std::uint64_t seed,
                               const AxiomOptions& options = {});

// Max abs error of (|P|-|Q|)^2 + 2|P||Q|(1 - cos dphase) against |P - Q|^2
// from complex arithmetic over random CF-table instances.
SuiteResult decomposition_suite(std::size_t instances, std::uint64_t seed, double tolerance = 1e-10);

struct GradientOptions {
  std::size_t max_n = 5;
  std::size_t max_q = 8;
  std::size_t max_dim = 4;
  double step = 1e-5;
  double tolerance = 1e-5;
  double epsilon_sqrt = 1e-12;
  bool coinciding = false;  // real and synthetic inputs identical
};

// Analytic gradients (synthetic inputs through an mlp, sampler log-scales)
// against central finite differences. worst = max relative error
// |analytic - fd| / max(|analytic|, |fd|) in the Euclidean norm.
SuiteResult gradient_suite(std::size_t instances, std::uint64_t seed, const GradientOptions& options = {});

struct LevyResult {
  std::vector<std::size_t> sizes;
  std::vector<double> errors;  // mean over repeats of max_k |Phi_N(t_k) - exp(-|t_k|^2/2)|
  double slope = 0.0;
};

// Empirical CF of standard normal data in `dim` dimensions on a fixed
// 32-point grid against the closed form.
LevyResult levy_convergence(const std::vector<std::size_t>& sizes, std::size_t repeats, std::uint64_t seed,
                            Eigen::Index dim = 2);

struct CorrespondenceResult {
  std::size_t pairs = 0;
  std::size_t failures = 0;
  double worst_z = 0.0;  // max |estimate - mmd| / standard error
};

// Monte-Carlo mean of |Phi_X(t) - Phi_Y(t)|^2 with t drawn from a
// single-component sampler of scale 1/h, against gaussian-kernel mmd_squared
// with bandwidth h; pass when within `z_limit` standard errors.
CorrespondenceResult cfd_mmd_correspondence(std::size_t pairs, std::size_t q, std::uint64_t seed,
                                            std::size_t max_n = 50, double z_limit = 3.0);

// Means of consecutive non-overlapping windows of `window` values (a final
// partial window is dropped).
std::vector<double> window_means(const std::vector<double>& values, std::size_t window);

// No value non-finite and no window mean exceeding (1 + tolerance) x the
// previous window mean.
bool stable_training(const std::vector<double>& values, std::size_t window, double tolerance);

// ---------------------------------------------------------------------------
// Complexity benchmark

enum class BenchMethod { Cfd, MmdQuadratic };
std::string to_string(BenchMethod m);

struct BenchOptions {
  std::size_t q = 256;
  Eigen::Index dim = 4;
  std::size_t repeats = 3;
  double min_seconds = 5e-5;  // sizes whose median time is below this are dropped
  std::uint64_t seed = 0;
};

struct BenchReport {
  BenchMethod method = BenchMethod::Cfd;
  std::vector<std::size_t> sizes;
  std::vector<double> times;  // median wall seconds per evaluation
  double slope = 0.0;
  std::vector<std::string> warnings;
};

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Times one discrepancy evaluation between two n-row sets for each n and
// fits the log-log slope. Throws ArgumentError when sizes are not strictly
// increasing or fewer than two sizes survive the timer-resolution filter;
// a grid spanning less than 1.5 decades only produces a warning.
BenchReport complexity_bench(BenchMethod method, const std::vector<std::size_t>& sizes, const BenchOptions& options = {});

void write_bench_csv(const std::filesystem::path& path, const BenchReport& report);

}  // namespace ncfm::eval
