#include "ncfm/eval.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace ncfm;
using eval::ClassifierKind;

namespace {

data::DataMatrix labeled(const Matrix& values, std::vector<int> labels) {
  data::DataMatrix d;
  d.values = values;
  d.labels = Eigen::Map<IntVector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  return d;
}

data::DataMatrix blobs(std::size_t n, double separation, std::uint64_t seed) {
  data::DatasetSpec s;
  s.means = {{-separation / 2, 0}, {separation / 2, 0}};
  s.scales = {1.0};
  s.seed = seed;
  return data::generate(s, n);
}

}  // namespace

TEST(Evaluate, MemorizedPointsNearestNeighbor) {
  Matrix x(3, 2);
  x << 0, 0, 5, 5, -3, 2;
  const auto d = labeled(x, {0, 1, 2});
  const auto r = eval::evaluate(d, d, ClassifierKind::OneNearestNeighbor, {0});
  EXPECT_EQ(r.accuracies[0], 1.0);
  EXPECT_EQ(r.mean, 1.0);
  EXPECT_EQ(r.stddev, 0.0);
}

TEST(Evaluate, RandomTestLabelsGiveChance) {
  const int classes = 4;
  const std::size_t n = 2000;
  data::DatasetSpec s;
  s.means = {{0, 0}, {3, 0}, {0, 3}, {3, 3}};
  s.scales = {1.0};
  const data::DataMatrix train = data::generate(s, 100);
  data::DataMatrix test = data::generate(s, n / classes);
  Rng rng(3);
  std::uniform_int_distribution<int> pick(0, classes - 1);
  for (Eigen::Index i = 0; i < test.labels->size(); ++i) (*test.labels)(i) = pick(rng);
  const double sd = std::sqrt(0.25 * 0.75 / static_cast<double>(n));
  for (ClassifierKind k : {ClassifierKind::MultinomialLogistic, ClassifierKind::OneNearestNeighbor}) {
    EXPECT_NEAR(eval::train_and_score(train, test, k, 0), 0.25, 3.0 * sd) << eval::to_string(k);
  }
}

TEST(Evaluate, LogisticSeparatesLinearData) {
  const auto train = blobs(100, 8.0, 1);
  const auto test = blobs(500, 8.0, 2);
  const auto r = eval::evaluate(train, test, ClassifierKind::MultinomialLogistic, {0, 1, 2});
  EXPECT_GT(r.mean, 0.95);
  for (double a : r.accuracies) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
  EXPECT_GE(r.stddev, 0.0);
  const auto again = eval::evaluate(train, test, ClassifierKind::MultinomialLogistic, {0, 1, 2});
  EXPECT_EQ(r.accuracies, again.accuracies);
}

TEST(Evaluate, Errors) {
  Matrix x(2, 2);
  x << 0, 0, 1, 1;
  const auto train = labeled(x, {0, 0});
  const auto test = labeled(x, {0, 1});
  EXPECT_THROW(eval::evaluate(train, test, ClassifierKind::OneNearestNeighbor, {0}), ArgumentError);
  EXPECT_THROW(eval::evaluate(train, labeled(Matrix::Zero(2, 3), {0, 0}), ClassifierKind::OneNearestNeighbor, {0}),
               ArgumentError);
  EXPECT_THROW(eval::evaluate(train, train, ClassifierKind::OneNearestNeighbor, {}), ArgumentError);
  EXPECT_THROW(eval::classifier_kind_from_string("svm"), ConfigError);
}

TEST(CompareSources, ThreeReportsInOrder) {
  const auto real = blobs(50, 4.0, 1);
  const auto test = blobs(100, 4.0, 2);
  const auto reports = eval::compare_sources(real, test, real.select({0, 1, 50, 51}), 2,
                                             ClassifierKind::OneNearestNeighbor, {0, 1});
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports[0].train_source, eval::TrainSource::Distilled);
  EXPECT_EQ(reports[1].train_source, eval::TrainSource::RandomSubset);
  EXPECT_EQ(reports[2].train_source, eval::TrainSource::Full);
  EXPECT_EQ(reports[1].accuracies.size(), 2u);

  const auto path = std::filesystem::temp_directory_path() / "ncfm_test_eval.csv";
  eval::write_eval_csv(path, reports);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "train_source,classifier,seed,test_accuracy,mean,std");
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first.rfind("distilled,one-nearest-neighbor,0,", 0), 0u);
}

TEST(MetricAxioms, IdenticalTripleHoldsWithEquality) {
  const Matrix fixed = oracle::gaussian(6, 2, 1);
  const eval::DatasetSampler same = [&](Rng&, Eigen::Index d) { return Matrix(fixed.leftCols(std::min<Eigen::Index>(d, 2))); };
  eval::AxiomOptions opt;
  opt.max_d = 2;
  const auto r = eval::metric_axiom_suite(same, 10, 0, opt);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.worst_symmetry, 0.0);
}

TEST(MetricAxioms, RandomTriplesHaveNoViolations) {
  const auto r = eval::metric_axiom_suite(eval::default_dataset_sampler(20), 1000, 7);
  EXPECT_EQ(r.trials, 1000u);
  EXPECT_EQ(r.nonneg_violations, 0u);
  EXPECT_EQ(r.symmetry_violations, 0u);
  EXPECT_EQ(r.triangle_violations, 0u);
  EXPECT_GE(r.min_value, 0.0);
}

TEST(MetricAxioms, PointMassesHold) {
  const eval::DatasetSampler point = [](Rng& rng, Eigen::Index d) {
    std::normal_distribution<double> normal(0.0, 2.0);
    Matrix m(1, d);
    for (Eigen::Index j = 0; j < d; ++j) m(0, j) = normal(rng);
    return m;
  };
  EXPECT_TRUE(eval::metric_axiom_suite(point, 300, 3).passed());
  EXPECT_THROW(eval::metric_axiom_suite(point, 0, 3), ArgumentError);
}

TEST(Decomposition, IdentityHolds) {
  const auto r = eval::decomposition_suite(2000, 5);
  EXPECT_TRUE(r.passed) << r.detail;
  EXPECT_LT(r.worst, 1e-10);
}

TEST(GradientSuite, PassesWithGuard) {
  const auto r = eval::gradient_suite(30, 11);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(GradientSuite, CoincidingDataWithoutGuardFails) {
  eval::GradientOptions opt;
  opt.epsilon_sqrt = 0.0;
  opt.coinciding = true;
  const auto r = eval::gradient_suite(5, 11, opt);
  EXPECT_FALSE(r.passed) << r.detail;
}

TEST(Levy, ErrorDecaysAtRootN) {
  const auto r = eval::levy_convergence({100, 1000, 10000}, 10, 2);
  EXPECT_EQ(r.errors.size(), 3u);
  EXPECT_GT(r.errors[0], r.errors[2]);
  EXPECT_NEAR(r.slope, -0.5, 0.15);
  EXPECT_THROW(eval::levy_convergence({100}, 3, 0), ArgumentError);
}

TEST(Correspondence, CfdMatchesMmd) {
  const auto r = eval::cfd_mmd_correspondence(5, 10000, 4);
  EXPECT_EQ(r.failures, 0u) << "worst z " << r.worst_z;
}

TEST(Stability, WindowsAndThresholds) {
  EXPECT_EQ(eval::window_means({1, 3, 5, 7, 9}, 2), (std::vector<double>{2, 6}));
  EXPECT_TRUE(eval::stable_training({4, 4, 3, 3, 3.2, 3.2}, 2, 0.1));
  EXPECT_FALSE(eval::stable_training({4, 4, 3, 3, 3.5, 3.5}, 2, 0.1));
  EXPECT_FALSE(eval::stable_training({1, std::nan(""), 1, 1}, 2, 0.1));
  EXPECT_FALSE(eval::stable_training({1, 1, 1, std::numeric_limits<double>::infinity()}, 5, 0.1));
}

TEST(Bench, LogLogSlope) {
  EXPECT_NEAR(eval::loglog_slope({1, 10, 100}, {3, 300, 30000}), 2.0, 1e-12);
  EXPECT_THROW(eval::loglog_slope({1}, {1}), ArgumentError);
}

TEST(Bench, GridChecks) {
  EXPECT_THROW(eval::complexity_bench(eval::BenchMethod::Cfd, {100, 100}), ArgumentError);
  EXPECT_THROW(eval::complexity_bench(eval::BenchMethod::Cfd, {100}), ArgumentError);
  eval::BenchOptions opt;
  opt.q = 8;
  opt.min_seconds = 1e9;
  EXPECT_THROW(eval::complexity_bench(eval::BenchMethod::Cfd, {10, 1000}, opt), ArgumentError);
  opt.min_seconds = 0.0;
  const auto r = eval::complexity_bench(eval::BenchMethod::MmdQuadratic, {10, 30}, opt);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings[0].find("1.5 decades"), std::string::npos);
}

TEST(Bench, SlopesAgreeAcrossRepeatCounts) {
  eval::BenchOptions one;
  one.q = 64;
  one.repeats = 1;
  eval::BenchOptions five = one;
  five.repeats = 5;
  const std::vector<std::size_t> sizes{1000, 3000, 10000, 30000};
  const auto a = eval::complexity_bench(eval::BenchMethod::Cfd, sizes, one);
  const auto b = eval::complexity_bench(eval::BenchMethod::Cfd, sizes, five);
  EXPECT_NEAR(a.slope, b.slope, 0.1);
  for (double t : b.times) EXPECT_GT(t, 0.0);

  const auto path = std::filesystem::temp_directory_path() / "ncfm_test_bench.csv";
  eval::write_bench_csv(path, b);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "method,n,median_seconds,fitted_slope");
}
