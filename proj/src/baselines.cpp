#include "ncfm/baselines.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ncfm::baselines {

namespace {

void check_cols(const Matrix& x, const Matrix& y, const char* what) {
  if (x.rows() < 1 || y.rows() < 1) throw ShapeError(std::string(what) + ": empty sample set");
  if (x.cols() != y.cols()) {
    throw ShapeError(std::string(what) + ": feature dimensions differ (" + std::to_string(x.cols()) + " vs " +
                     std::to_string(y.cols()) + ")");
  }
}

// Sum of k(a_i, b_j) over all pairs; rows of `a` are split across blocks.
double kernel_sum(const Matrix& a, const Matrix& b, double inv_two_h2, const Execution& exec) {
  const std::size_t blocks = detail::block_count(a.rows(), exec);
  std::vector<double> partial(blocks, 0.0);
  const Eigen::Index m = a.cols();
  detail::for_blocks(a.rows(), exec, [&](Eigen::Index begin, Eigen::Index end, std::size_t blk) {
    double acc = 0.0;
    for (Eigen::Index i = begin; i < end; ++i) {
      const double* ai = a.row(i).data();
      for (Eigen::Index j = 0; j < b.rows(); ++j) {
        const double* bj = b.row(j).data();
        double d2 = 0.0;
        for (Eigen::Index c = 0; c < m; ++c) {
          const double diff = ai[c] - bj[c];
          d2 += diff * diff;
        }
        acc += std::exp(-d2 * inv_two_h2);
      }
    }
    partial[blk] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

// Canonical argument order for the cross term: fewer rows first, ties broken
// lexicographically on the raw data.
bool canonical_first(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) return x.rows() < y.rows();
  return !std::lexicographical_compare(y.data(), y.data() + y.size(), x.data(), x.data() + x.size());
}

}  // namespace

double gaussian_kernel(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b,
                       const KernelSpec& kernel) {
  return std::exp(-(a - b).squaredNorm() / (2.0 * kernel.bandwidth * kernel.bandwidth));
}

double mmd_squared(const Matrix& x, const Matrix& y, const KernelSpec& kernel, const Execution& exec) {
  check_cols(x, y, "mmd_squared");
  if (!(kernel.bandwidth > 0.0) || !std::isfinite(kernel.bandwidth)) {
    throw ArgumentError("kernel bandwidth must be finite and > 0");
  }
  const double inv = 1.0 / (2.0 * kernel.bandwidth * kernel.bandwidth);
  const double nx = static_cast<double>(x.rows());
  const double ny = static_cast<double>(y.rows());
  const double kxx = kernel_sum(x, x, inv, exec) / (nx * nx);
  const double kyy = kernel_sum(y, y, inv, exec) / (ny * ny);
  // k is symmetric, so sum k(X, Y) = sum k(Y, X); fixing the argument order
  // makes mmd_squared(x, y) and mmd_squared(y, x) bitwise equal.
  const double kxy = (canonical_first(x, y) ? kernel_sum(x, y, inv, exec) : kernel_sum(y, x, inv, exec)) / (nx * ny);
  return kxx + kyy - 2.0 * kxy;
}

double mean_feature_mmd(const Matrix& x_feat, const Matrix& y_feat) {
  check_cols(x_feat, y_feat, "mean_feature_mmd");
  return (x_feat.colwise().mean() - y_feat.colwise().mean()).squaredNorm();
}

double mse_pointwise(const Matrix& x_feat, const Matrix& y_feat) {
  check_cols(x_feat, y_feat, "mse_pointwise");
  if (x_feat.rows() != y_feat.rows()) {
    throw ShapeError("mse_pointwise: paired batches need equal row counts (" + std::to_string(x_feat.rows()) +
                     " vs " + std::to_string(y_feat.rows()) + ")");
  }
  return (x_feat - y_feat).rowwise().squaredNorm().mean();
}

}  // namespace ncfm::baselines
