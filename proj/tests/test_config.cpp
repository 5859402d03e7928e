#include "ncfm/config.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace ncfm;

namespace {

std::string config_error(const std::string& text) {
  try {
    config::parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(RunConfig, EmptyObjectUsesDefaults) {
  const auto c = config::parse_run_config("{}");
  EXPECT_EQ(c.distill.q_freqs, 1024u);
  EXPECT_EQ(c.distill.alpha, 0.5);
  EXPECT_EQ(c.dataset.n_per_class, 500u);
  EXPECT_EQ(c.eval.seeds.size(), 5u);
  EXPECT_EQ(c.output_dir, "ncfm_out");
  EXPECT_TRUE(std::isinf(c.distill.log_scale_max));
}

TEST(RunConfig, ReadsEverySection) {
  const auto c = config::parse_run_config(R"({
    "output_dir": "out/x",
    "dataset": {"kind": "two-moons", "n_per_class": 40, "noise": 0.2, "seed": 9},
    "distill": {"iterations": 7, "alpha": 0.25, "log_scale_max": 0.4, "log_scale_min": null,
                "init": "gaussian-noise", "strict": false, "threads": 2},
    "features": {"kind": "mlp", "hidden_dim": 8, "out_dim": 3, "pretrain_epochs": 2},
    "eval": {"classifier": "one-nearest-neighbor", "seeds": [3, 4], "logistic_iterations": 10},
    "bench": {"cfd_sizes": [10, 100], "mmd_sizes": [5, 50], "q": 16, "repeats": 2}
  })");
  EXPECT_EQ(c.output_dir, "out/x");
  EXPECT_EQ(c.dataset.spec.kind, data::DatasetKind::TwoMoons);
  EXPECT_EQ(c.dataset.n_per_class, 40u);
  EXPECT_EQ(c.dataset.spec.seed, 9u);
  EXPECT_EQ(c.distill.iterations, 7u);
  EXPECT_EQ(c.distill.log_scale_max, 0.4);
  EXPECT_EQ(c.distill.init, distill::InitStrategy::GaussianNoise);
  EXPECT_FALSE(c.distill.exec.strict);
  EXPECT_EQ(c.distill.exec.threads, 2u);
  EXPECT_EQ(c.features.kind, features::FeatureKind::Mlp);
  EXPECT_EQ(c.eval.classifier, eval::ClassifierKind::OneNearestNeighbor);
  EXPECT_EQ(c.eval.seeds, (std::vector<std::uint64_t>{3, 4}));
  EXPECT_EQ(c.eval.logistic.iterations, 10u);
  EXPECT_EQ(c.bench.options.q, 16u);
}

TEST(RunConfig, UnknownKeysNamed) {
  EXPECT_NE(config_error(R"({"distill": {"iterations": 3, "learning_rate": 0.1}})").find("distill.learning_rate"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"extra": 1})").find("'extra'"), std::string::npos);
}

TEST(RunConfig, SyntaxErrorsGiveLineAndColumn) {
  const std::string msg = config_error("{\n  \"distill\": {\n    \"alpha\": 0.5,,\n  }\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(RunConfig, TypeAndValueErrorsNameTheKey) {
  EXPECT_NE(config_error(R"({"distill": {"iterations": -3}})").find("distill.iterations"), std::string::npos);
  EXPECT_NE(config_error(R"({"distill": {"alpha": "half"}})").find("distill.alpha"), std::string::npos);
  EXPECT_NE(config_error(R"({"distill": {"alpha": 2.0}})").find("distill.alpha"), std::string::npos);
  EXPECT_NE(config_error(R"({"dataset": {"kind": "spiral"}})").find("dataset.kind"), std::string::npos);
  EXPECT_NE(config_error(R"({"eval": {"seeds": []}})").find("eval.seeds"), std::string::npos);
  EXPECT_NE(config_error(R"({"bench": {"cfd_sizes": [10, 5]}})").find("bench.cfd_sizes"), std::string::npos);
  EXPECT_NE(config_error(R"({"dataset": []})").find("dataset"), std::string::npos);
  EXPECT_FALSE(config_error(R"({"features": {"kind": "identity", "pretrain_epochs": 3}})").empty());
}

TEST(RunConfig, OutputRootOverride) {
  ::setenv("NCFM_OUTPUT_ROOT", "/tmp/root", 1);
  EXPECT_EQ(config::resolve_output_dir("run"), std::filesystem::path("/tmp/root/run"));
  EXPECT_EQ(config::resolve_output_dir("/abs/run"), std::filesystem::path("/abs/run"));
  ::unsetenv("NCFM_OUTPUT_ROOT");
  EXPECT_EQ(config::resolve_output_dir("run"), std::filesystem::path("run"));
}

TEST(RunConfig, TestDataUsesSeparateSeed) {
  const auto c = config::parse_run_config(R"({"dataset": {"n_per_class": 5},
                                             "eval": {"test_n_per_class": 7, "test_seed": 3}})");
  const auto train = config::training_data(c);
  const auto test = config::test_data(c);
  EXPECT_EQ(train.n(), 15u);
  EXPECT_EQ(test.n(), 21u);
  EXPECT_FALSE(train.values.row(0) == test.values.row(0));
  EXPECT_THROW(config::read_text_file("/nonexistent/config.json"), IoError);
}
