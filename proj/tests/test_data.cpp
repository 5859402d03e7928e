#include "ncfm/data.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace ncfm;
using data::DataMatrix;
using data::DatasetKind;
using data::DatasetSpec;

namespace {

DatasetSpec toy_mixture() {
  DatasetSpec s;
  s.kind = DatasetKind::GaussianMixture;
  s.means = {{0, 0}, {4, 0}, {0, 4}};
  s.scales = {1.0};
  s.seed = 11;
  return s;
}

std::vector<unsigned char> be32(std::uint32_t v) {
  return {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 8),
          static_cast<unsigned char>(v)};
}

std::vector<unsigned char> idx_bytes(unsigned char ndims, const std::vector<std::uint32_t>& dims,
                                     const std::vector<unsigned char>& payload) {
  std::vector<unsigned char> out{0, 0, 0x08, ndims};
  for (std::uint32_t d : dims) {
    const auto b = be32(d);
    out.insert(out.end(), b.begin(), b.end());
  }
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / ("ncfm_test_data_" + name);
  std::ofstream(path, std::ios::binary) << contents;
  return path;
}

}  // namespace

TEST(Generate, DegenerateScaleGivesExactMean) {
  DatasetSpec s;
  s.means = {{1.5, -2.0}};
  s.scales = {0.0};
  const DataMatrix d = data::generate(s, 3);
  ASSERT_EQ(d.n(), 3u);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_EQ(d.values(i, 0), 1.5);
    EXPECT_EQ(d.values(i, 1), -2.0);
  }
}

TEST(Generate, TwoMoonsDeterministic) {
  DatasetSpec s;
  s.kind = DatasetKind::TwoMoons;
  s.seed = 7;
  const DataMatrix a = data::generate(s, 100);
  const DataMatrix b = data::generate(s, 100);
  EXPECT_EQ(a.n(), 200u);
  EXPECT_TRUE(a.values == b.values);
  EXPECT_TRUE(*a.labels == *b.labels);
}

TEST(Generate, ExactlyNPerClassForEveryKind) {
  DatasetSpec rings;
  rings.kind = DatasetKind::Rings;
  rings.rings_classes = 3;
  for (const DatasetSpec& s : {toy_mixture(), rings}) {
    const DataMatrix d = data::generate(s, 17);
    for (int c = 0; c < d.num_classes(); ++c) EXPECT_EQ(d.rows_of_class(c).size(), 17u);
  }
}

TEST(Generate, MixtureClassMeansConverge) {
  const DataMatrix d = data::generate(toy_mixture(), 1000);
  const std::vector<std::vector<double>> truth{{0, 0}, {4, 0}, {0, 4}};
  for (int c = 0; c < 3; ++c) {
    const Vector m = data::class_mean(d, c);
    EXPECT_NEAR(m(0), truth[c][0], 0.1);
    EXPECT_NEAR(m(1), truth[c][1], 0.1);
  }
}

TEST(Generate, FullCovarianceConverges) {
  DatasetSpec s;
  s.means = {{1.0, -1.0}};
  s.covariances = {{{2.0, 0.6}, {0.6, 0.5}}};
  s.seed = 3;
  const DataMatrix d = data::generate(s, 10000);
  const Matrix centered = d.values.rowwise() - d.values.colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(d.n() - 1);
  Matrix truth(2, 2);
  truth << 2.0, 0.6, 0.6, 0.5;
  EXPECT_LT((cov - truth).norm() / truth.norm(), 0.1);
}

TEST(Generate, InvalidSpecsAreConfigErrors) {
  DatasetSpec s = toy_mixture();
  s.scales = {-1.0};
  EXPECT_THROW(data::generate(s, 5), ConfigError);
  s = toy_mixture();
  s.means.clear();
  EXPECT_THROW(data::validate(s), ConfigError);
  s = toy_mixture();
  s.covariances = {{{1, 2}, {2, 1}}, {{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}};
  EXPECT_THROW(data::validate(s), ConfigError);
  s = toy_mixture();
  EXPECT_THROW(data::generate(s, 0), ConfigError);
  s.kind = DatasetKind::CsvFile;
  s.path = "/nonexistent/ncfm.csv";
  EXPECT_THROW(data::validate(s), ConfigError);
  EXPECT_THROW(data::dataset_kind_from_string("spiral"), ConfigError);
}

TEST(Generate, CsvKindIsRebalanced) {
  std::string text;
  for (int i = 0; i < 7; ++i) text += std::to_string(i) + ",0.5,0\n";
  for (int i = 0; i < 2; ++i) text += std::to_string(i) + ",1.5,1\n";
  DatasetSpec s;
  s.kind = DatasetKind::CsvFile;
  s.path = temp_file("rebalance.csv", text);
  const DataMatrix d = data::generate(s, 4);
  EXPECT_EQ(d.rows_of_class(0).size(), 4u);
  EXPECT_EQ(d.rows_of_class(1).size(), 4u);
}

TEST(Csv, LabelColumnLast) {
  const DataMatrix d = data::parse_csv("1,2,0\n3,4,1");
  ASSERT_EQ(d.n(), 2u);
  ASSERT_EQ(d.d(), 2u);
  EXPECT_EQ(d.values(0, 0), 1.0);
  EXPECT_EQ(d.values(1, 1), 4.0);
  EXPECT_EQ((*d.labels)(0), 0);
  EXPECT_EQ((*d.labels)(1), 1);
}

TEST(Csv, HeaderAndNoLabels) {
  const DataMatrix d = data::parse_csv("a,b\n1,2\n3,4\n", {true, false});
  EXPECT_EQ(d.n(), 2u);
  EXPECT_FALSE(d.labeled());
}

TEST(Csv, NonNumericCellNamesLineAndColumn) {
  try {
    data::parse_csv("1,2,0\n3,x,1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  }
}

TEST(Csv, RaggedRowsRejected) {
  EXPECT_THROW(data::parse_csv("1,2,0\n3,1\n"), ParseError);
  EXPECT_THROW(data::parse_csv(""), ParseError);
}

TEST(Csv, MissingFileIsIoError) { EXPECT_THROW(data::load_csv("/nonexistent/file.csv"), IoError); }

TEST(Idx, ThreeDimensionalImagesFlatten) {
  const auto bytes = idx_bytes(3, {2, 2, 2}, {0, 255, 51, 102, 1, 2, 3, 4});
  const DataMatrix d = data::parse_idx(bytes);
  ASSERT_EQ(d.n(), 2u);
  ASSERT_EQ(d.d(), 4u);
  EXPECT_EQ(d.values(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(d.values(0, 2), 0.2);
  EXPECT_DOUBLE_EQ(d.values(1, 3), 4.0 / 255.0);
  EXPECT_FALSE(d.labeled());
}

TEST(Idx, LabelsFile) {
  const auto images = idx_bytes(3, {2, 1, 1}, {0, 10});
  const auto labels = idx_bytes(1, {2}, {1, 0});
  const DataMatrix d = data::parse_idx(images, &labels);
  EXPECT_EQ((*d.labels)(0), 1);
  EXPECT_EQ((*d.labels)(1), 0);
  const auto wrong = idx_bytes(1, {3}, {1, 0, 1});
  EXPECT_THROW(data::parse_idx(images, &wrong), ParseError);
}

TEST(Idx, MalformedHeaderNamesByteOffset) {
  try {
    data::parse_idx({0, 1, 8, 3});
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos);
  }
  EXPECT_THROW(data::parse_idx(idx_bytes(3, {2, 2, 2}, {1, 2, 3})), ParseError);
  EXPECT_THROW(data::parse_idx({0, 0, 8}), ParseError);
}

TEST(Idx, FileRoundTrip) {
  const auto bytes = idx_bytes(2, {3, 2}, {0, 255, 255, 0, 0, 0});
  const auto path = std::filesystem::temp_directory_path() / "ncfm_test_data_images.idx";
  std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                              static_cast<std::streamsize>(bytes.size()));
  const DataMatrix d = data::load(path, data::FileFormat::Idx);
  EXPECT_EQ(d.n(), 3u);
  EXPECT_EQ(d.values(1, 0), 1.0);
}

TEST(SampleBatch, SingleRowClassRepeats) {
  DataMatrix d;
  d.values = Matrix(2, 2);
  d.values << 1, 2, 3, 4;
  d.labels = IntVector(2);
  *d.labels << 0, 1;
  Rng rng(1);
  const DataMatrix b = data::sample_batch(d, 1, 5, rng);
  ASSERT_EQ(b.n(), 5u);
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_EQ(b.values(i, 0), 3.0);
    EXPECT_EQ((*b.labels)(i), 1);
  }
}

TEST(SampleBatch, DeterministicUnderSeed) {
  const DataMatrix d = data::generate(toy_mixture(), 50);
  Rng a(9), b(9);
  EXPECT_TRUE(data::sample_batch(d, 2, 50, a).values == data::sample_batch(d, 2, 50, b).values);
}

TEST(SampleBatch, MeanMatchesClassMean) {
  const DataMatrix d = data::generate(toy_mixture(), 200);
  Rng rng(5);
  const DataMatrix b = data::sample_batch(d, 1, 10000, rng);
  const Vector truth = data::class_mean(d, 1);
  const Eigen::RowVectorXd m = b.values.colwise().mean();
  EXPECT_LT(std::abs(m(0) - truth(0)) / std::abs(truth(0)), 0.05);
}

TEST(SampleBatch, UnknownClassIsLookupError) {
  const DataMatrix d = data::generate(toy_mixture(), 5);
  Rng rng(0);
  EXPECT_THROW(data::sample_batch(d, 3, 2, rng), LookupError);
  EXPECT_THROW(data::sample_batch(d, -1, 2, rng), LookupError);
}

TEST(Validate, DataMatrixInvariants) {
  DataMatrix d;
  d.values = Matrix::Ones(2, 2);
  d.labels = IntVector(2);
  *d.labels << 0, 2;
  EXPECT_THROW(data::validate(d), ArgumentError);
  *d.labels << 0, 1;
  EXPECT_NO_THROW(data::validate(d));
  d.values(0, 0) = std::nan("");
  EXPECT_THROW(data::validate(d), ArgumentError);
  d.values = Matrix(0, 2);
  d.labels.reset();
  EXPECT_THROW(data::validate(d), ArgumentError);
}
