#include "ncfm/charfn.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace ncfm;
using charfn::CFTable;
using charfn::DiscrepancyConfig;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) m(0, j++) = x;
  return m;
}

}  // namespace

TEST(EmpiricalCf, ZeroSampleIsOne) {
  const CFTable t = charfn::empirical_cf(Matrix::Zero(1, 3), oracle::gaussian(5, 3, 1));
  for (Eigen::Index k = 0; k < 5; ++k) {
    EXPECT_EQ(t.re(k), 1.0);
    EXPECT_EQ(t.im(k), 0.0);
    EXPECT_EQ(t.amplitude(k), 1.0);
    EXPECT_EQ(t.phase(k), 0.0);
  }
}

TEST(EmpiricalCf, QuarterTurn) {
  const CFTable t = charfn::empirical_cf(row({1, 0}), row({std::numbers::pi / 2, 0}));
  EXPECT_NEAR(t.re(0), 0.0, 1e-15);
  EXPECT_NEAR(t.im(0), 1.0, 1e-15);
  EXPECT_NEAR(t.amplitude(0), 1.0, 1e-15);
  EXPECT_NEAR(t.phase(0), std::numbers::pi / 2, 1e-15);
}

TEST(EmpiricalCf, SymmetricPairIsReal) {
  Matrix z(2, 1);
  z << 0.7, -0.7;
  const CFTable t = charfn::empirical_cf(z, row({1.3}));
  EXPECT_NEAR(t.re(0), std::cos(1.3 * 0.7), 1e-15);
  EXPECT_NEAR(t.im(0), 0.0, 1e-15);
}

TEST(EmpiricalCf, MatchesComplexOracleAndInvariants) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix z = oracle::gaussian(7, 3, seed, 0.5, 2.0);
    const Matrix f = oracle::gaussian(11, 3, seed + 100);
    const CFTable t = charfn::empirical_cf(z, f);
    const auto ref = oracle::empirical_cf(z, f);
    for (Eigen::Index k = 0; k < 11; ++k) {
      EXPECT_NEAR(t.re(k), ref[k].real(), 1e-13);
      EXPECT_NEAR(t.im(k), ref[k].imag(), 1e-13);
      EXPECT_NEAR(t.amplitude(k), std::hypot(t.re(k), t.im(k)), 1e-12);
      EXPECT_LE(t.amplitude(k), 1.0 + 1e-12);
      EXPECT_EQ(t.phase(k), std::atan2(t.im(k), t.re(k)));
    }
  }
}

TEST(EmpiricalCf, ShapeErrors) {
  EXPECT_THROW(charfn::empirical_cf(Matrix::Zero(3, 2), Matrix::Zero(4, 3)), ShapeError);
  EXPECT_THROW(charfn::empirical_cf(Matrix::Zero(0, 2), Matrix::Zero(4, 2)), ShapeError);
  EXPECT_THROW(charfn::empirical_cf(Matrix::Zero(3, 2), Matrix::Zero(0, 2)), ShapeError);
}

TEST(EmpiricalCf, ParallelAgreesWithStrict) {
  const Matrix z = oracle::gaussian(300, 4, 1);
  const Matrix f = oracle::gaussian(512, 4, 2);
  const CFTable strict = charfn::empirical_cf(z, f);
  const CFTable par = charfn::empirical_cf(z, f, Execution{false, 4});
  EXPECT_LT((strict.re - par.re).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((strict.im - par.im).cwiseAbs().maxCoeff(), 1e-13);
  const CFTable again = charfn::empirical_cf(z, f);
  EXPECT_TRUE(strict.re == again.re && strict.im == again.im);
}

TEST(ChfBlended, IdenticalTablesGiveZero) {
  const CFTable t = charfn::empirical_cf(oracle::gaussian(5, 2, 3), oracle::gaussian(8, 2, 4));
  for (double a : {0.0, 0.3, 1.0}) EXPECT_EQ(charfn::chf_blended(t, t, {a, 1e-12}).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ChfBlended, OppositePointMassesAtPhaseOnly) {
  const Matrix f = row({std::numbers::pi, 0});
  const CFTable p = charfn::empirical_cf(Matrix::Zero(1, 2), f);
  const CFTable q = charfn::empirical_cf(row({1, 0}), f);
  EXPECT_NEAR(charfn::chf_blended(p, q, {0.0, 0.0})(0), 4.0, 1e-12);
  EXPECT_NEAR(charfn::cfd(p, q, {0.0, 0.0}).total, 2.0, 1e-12);
  EXPECT_NEAR(charfn::cfd(p, q, {0.0, 1e-12}).total, 2.0, 1e-9);
}

TEST(ChfBlended, HalfAlphaIsHalfComplexGap) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix f = oracle::gaussian(16, 2, seed + 50);
    const Matrix x = oracle::gaussian(6, 2, seed);
    const Matrix y = oracle::gaussian(4, 2, seed + 9, 1.0, 0.5);
    const Vector v = charfn::chf_blended(charfn::empirical_cf(x, f), charfn::empirical_cf(y, f), {0.5, 1e-12});
    const auto p = oracle::empirical_cf(x, f);
    const auto q = oracle::empirical_cf(y, f);
    for (Eigen::Index k = 0; k < 16; ++k) EXPECT_NEAR(v(k), 0.5 * std::norm(p[k] - q[k]), 1e-12);
  }
}

TEST(ChfBlended, GeneralAlphaMatchesOracle) {
  const Matrix f = oracle::gaussian(10, 3, 7);
  const Matrix x = oracle::gaussian(5, 3, 8);
  const Matrix y = oracle::gaussian(9, 3, 9, 0.3, 1.4);
  const auto p = oracle::empirical_cf(x, f);
  const auto q = oracle::empirical_cf(y, f);
  for (double a : {0.0, 0.001, 0.25, 0.999, 1.0}) {
    const Vector v = charfn::chf_blended(charfn::empirical_cf(x, f), charfn::empirical_cf(y, f), {a, 0.0});
    for (Eigen::Index k = 0; k < 10; ++k) EXPECT_NEAR(v(k), oracle::chf(p[k], q[k], a), 1e-12);
  }
}

TEST(ChfBlended, MismatchedFrequenciesRejected) {
  const Matrix z = oracle::gaussian(3, 2, 1);
  const CFTable a = charfn::empirical_cf(z, oracle::gaussian(4, 2, 2));
  const CFTable b = charfn::empirical_cf(z, oracle::gaussian(4, 2, 3));
  EXPECT_THROW(charfn::chf_blended(a, b, {}), StateError);
  EXPECT_THROW(charfn::cfd(a, b, {}), StateError);
}

TEST(DiscrepancyConfig, Validation) {
  EXPECT_THROW(charfn::validate(DiscrepancyConfig{1.5, 1e-12}), ArgumentError);
  EXPECT_THROW(charfn::validate(DiscrepancyConfig{-0.1, 1e-12}), ArgumentError);
  EXPECT_THROW(charfn::validate(DiscrepancyConfig{0.5, -1.0}), ArgumentError);
  EXPECT_NO_THROW(charfn::validate(DiscrepancyConfig{0.5, 0.0}));
}

TEST(Cfd, IdenticalBatchesGiveGuard) {
  const Matrix z = oracle::gaussian(6, 2, 4);
  const double eps = 1e-8;
  EXPECT_NEAR(charfn::cfd(z, z, oracle::gaussian(32, 2, 5), {0.5, eps}).total, std::sqrt(eps), 1e-15);
}

TEST(Cfd, BreakdownInvariantsAndOracle) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Matrix f = oracle::gaussian(24, 2, seed + 1000, 0.0, 3.0);
    const Matrix x = oracle::gaussian(8, 2, seed);
    const Matrix y = oracle::gaussian(5, 2, seed + 500, 2.0, 0.3);
    const double alpha = static_cast<double>(seed % 5) / 4.0;
    const double eps = 1e-12;
    const charfn::LossBreakdown l = charfn::cfd(x, y, f, {alpha, eps});
    EXPECT_NEAR(l.total, (l.per_freq_chf.array() + eps).sqrt().mean(), 1e-15);
    EXPECT_NEAR(l.total, oracle::cfd(x, y, f, alpha, eps), 1e-12);
    EXPECT_GE(l.per_freq_chf.minCoeff(), -1e-12);
    EXPECT_LE(l.per_freq_chf.maxCoeff(), 4.0 + 1e-9);
    EXPECT_LE(l.total, 2.0 + std::sqrt(eps));
    EXPECT_NEAR(l.amp_term + l.phase_term, l.per_freq_chf.mean(), 1e-14);
    EXPECT_GE(l.amp_term, 0.0);
  }
}

TEST(Cfd, MonteCarloErrorShrinksWithQ) {
  const Matrix x = oracle::gaussian(20, 2, 1);
  const Matrix y = oracle::gaussian(20, 2, 2, 0.7, 1.2);
  auto spread = [&](Eigen::Index q, std::uint64_t base) {
    std::vector<double> totals;
    for (std::uint64_t r = 0; r < 100; ++r) {
      totals.push_back(charfn::cfd(x, y, oracle::gaussian(q, 2, base + r), {}).total);
    }
    double mean = 0.0, var = 0.0;
    for (double t : totals) mean += t / 100.0;
    for (double t : totals) var += (t - mean) * (t - mean) / 99.0;
    return std::sqrt(var);
  };
  const double ratio = spread(128, 10000) / spread(64, 20000);
  EXPECT_NEAR(ratio, 1.0 / std::sqrt(2.0), 0.25 / std::sqrt(2.0));
}

TEST(CfdBackward, IdenticalBatchesHaveZeroGradient) {
  const Matrix z = oracle::gaussian(4, 3, 6);
  const auto g = charfn::cfd_backward(z, z, oracle::gaussian(16, 3, 7), {});
  EXPECT_LT(g.grad_synth.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CfdBackward, ZeroFrequenciesHaveZeroGradient) {
  const auto g = charfn::cfd_backward(oracle::gaussian(4, 2, 1), oracle::gaussian(3, 2, 2), Matrix::Zero(5, 2), {});
  EXPECT_EQ(g.grad_synth.cwiseAbs().maxCoeff(), 0.0);
}

TEST(CfdBackward, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix real = oracle::gaussian(3, 2, seed);
    const Matrix synth = oracle::gaussian(3, 2, seed + 40, 0.5, 0.8);
    const Matrix freqs = oracle::gaussian(4, 2, seed + 80);
    for (double alpha : {0.0, 0.5, 0.9}) {
      const DiscrepancyConfig cfg{alpha, 1e-12};
      const auto g = charfn::cfd_backward(real, synth, freqs, cfg);
      const Matrix fd_synth = oracle::central_difference(
          [&](const Matrix& s) { return oracle::cfd(real, s, freqs, alpha, 1e-12); }, synth);
      const Matrix fd_freqs = oracle::central_difference(
          [&](const Matrix& f) { return oracle::cfd(real, synth, f, alpha, 1e-12); }, freqs);
      EXPECT_LT(oracle::relative_error(g.grad_synth, fd_synth), 1e-5) << "seed " << seed << " alpha " << alpha;
      EXPECT_LT(oracle::relative_error(g.grad_freqs, fd_freqs), 1e-5) << "seed " << seed << " alpha " << alpha;
      EXPECT_NEAR(g.loss.total, charfn::cfd(real, synth, freqs, cfg).total, 1e-15);
    }
  }
}

TEST(CfdBackward, FreqGradientOptional) {
  const auto g = charfn::cfd_backward(oracle::gaussian(3, 2, 1), oracle::gaussian(3, 2, 2), oracle::gaussian(4, 2, 3),
                                      {}, false);
  EXPECT_EQ(g.grad_freqs.size(), 0);
  EXPECT_EQ(g.grad_synth.rows(), 3);
}

TEST(CfdBackward, ParallelAgreesWithStrict) {
  const Matrix real = oracle::gaussian(64, 3, 1);
  const Matrix synth = oracle::gaussian(10, 3, 2);
  const Matrix freqs = oracle::gaussian(1024, 3, 3);
  const auto a = charfn::cfd_backward(real, synth, freqs, {});
  const auto b = charfn::cfd_backward(real, synth, freqs, {}, true, Execution{false, 3});
  EXPECT_LT((a.grad_synth - b.grad_synth).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((a.grad_freqs - b.grad_freqs).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(a.loss.total, b.loss.total, 1e-13);
}

TEST(CfdBackward, ShapeErrors) {
  EXPECT_THROW(charfn::cfd_backward(Matrix::Zero(3, 2), Matrix::Zero(3, 3), Matrix::Zero(4, 2), {}), ShapeError);
  EXPECT_THROW(charfn::cfd_backward(Matrix::Zero(3, 2), Matrix::Zero(3, 2), Matrix::Zero(4, 3), {}), ShapeError);
}
