#pragma once

// Feature extractors mapping inputs to the space where characteristic
// functions are compared, with forward evaluation, vector-Jacobian products
// and the beta-blend of an initial and a trained parameter checkpoint.
//
// Flat parameter layouts (all row-major):
//   identity                 : empty
//   random-relu-projection   : W (in x out), b (out);              f(x) = relu(x W + b)
//   mlp                      : W1 (in x hidden), b1 (hidden),
//                              W2 (hidden x out), b2 (out);        f(x) = relu(x W1 + b1) W2 + b2

#include "ncfm/common.hpp"
#include "ncfm/data.hpp"

#include <cstddef>
#include <string>

namespace ncfm::features {

enum class FeatureKind { Identity, RandomReluProjection, Mlp };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& s);

struct FeatureMap {
  FeatureKind kind = FeatureKind::Identity;
  std::size_t in_dim = 0;
  std::size_t hidden_dim = 0;  // mlp only
  std::size_t out_dim = 0;
  Vector params;
  Vector init_checkpoint;
  Vector final_checkpoint;
  double beta = 1.0;

  std::size_t param_count() const;
};

// Expected flat parameter length for a kind and its dimensions.
std::size_t param_count(FeatureKind kind, std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim);

FeatureMap make_identity(std::size_t dim);

// Weights ~ N(0, 2 / fan_in), biases 0. Both checkpoints start equal to the
// drawn parameters.
FeatureMap make_random_relu_projection(std::size_t in_dim, std::size_t out_dim, Rng& rng);
FeatureMap make_mlp(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim, Rng& rng);

// Throws StateError when a FeatureMap invariant is broken.
void validate(const FeatureMap& map);

Matrix forward(const FeatureMap& map, const Matrix& inputs);

// cotangent^T J_f(inputs), one row per input row. The relu derivative at 0 is 0.
Matrix vjp(const FeatureMap& map, const Matrix& inputs, const Matrix& cotangent);

// Sets beta and params = (1 - beta) init + beta final.
FeatureMap blend(const FeatureMap& map, double beta);

// blend() with beta ~ U(0, 1).
FeatureMap reblend(const FeatureMap& map, Rng& rng);

struct PretrainOptions {
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
};

struct PretrainResult {
  FeatureMap map;
  double train_accuracy = 0.0;  // accuracy of body + head on the training data
};

// Trains the mlp body with a temporary linear softmax head on labeled data by
// mini-batch SGD on cross-entropy. The trained body becomes final_checkpoint;
// init_checkpoint keeps the pre-training parameters and params is set to the
// final checkpoint (beta = 1).
PretrainResult pretrain_final_checkpoint(const FeatureMap& map, const data::DataMatrix& data,
                                         std::size_t epochs, Rng& rng, const PretrainOptions& options = {});

}  // namespace ncfm::features
