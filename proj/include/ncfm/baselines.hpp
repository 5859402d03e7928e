#pragma once

// Reference discrepancies: gaussian-kernel MMD (biased V-statistic),
// mean-feature MMD and paired point-wise MSE.

#include "ncfm/common.hpp"

namespace ncfm::baselines {

struct KernelSpec {
  double bandwidth = 1.0;  // h in k(a, b) = exp(-|a - b|^2 / (2 h^2))
};

double gaussian_kernel(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                       const Eigen::Ref<const Eigen::RowVectorXd>& b, const KernelSpec& kernel);

// mean k(X, X) + mean k(Y, Y) - 2 mean k(X, Y), diagonal terms included.
double mmd_squared(const Matrix& x, const Matrix& y, const KernelSpec& kernel, const Execution& exec = {});

// |mean(X) - mean(Y)|^2.
double mean_feature_mmd(const Matrix& x_feat, const Matrix& y_feat);

// mean_i |x_i - y_i|^2 over paired rows.
double mse_pointwise(const Matrix& x_feat, const Matrix& y_feat);

}  // namespace ncfm::baselines
