#pragma once

// Learnable frequency distribution: a zero-mean scale mixture of normals with
// diagonal per-component covariances. Draws are reparameterized as
//   t_k = exp(log_scales[c_k]) * eps_k,  c_k ~ Categorical(softmax(logits)),
//   eps_k ~ N(0, I),
// so with (c, eps) frozen the frequencies are a smooth function of the
// log-scales and d t_kj / d log_scales[c_k, j] = t_kj.

#include "ncfm/common.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace ncfm::freqsampler {

// The frozen randomness of one draw.
struct Draw {
  std::vector<int> components;  // length q
  Matrix noise;                 // q x m standard normal
};

class FreqSampler {
 public:
  // Uniform mixture of `components` normals in dimension `dim`, every scale
  // equal to `init_scale`.
  FreqSampler(std::size_t components, std::size_t dim, double init_scale = 1.0);
  FreqSampler(Matrix log_scales, Vector mixture_logits);

  // K = max(1, q / 16).
  static std::size_t default_components(std::size_t q);

  std::size_t n_components() const { return static_cast<std::size_t>(log_scales_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(log_scales_.cols()); }
  const Matrix& log_scales() const { return log_scales_; }
  const Vector& mixture_logits() const { return logits_; }
  Vector mixture_weights() const;  // softmax(logits)
  Matrix scales() const { return log_scales_.array().exp().matrix(); }
  // Root-mean-square of exp(log_scales); logged during training.
  double scale_rms() const;

  // Projection box applied after every ascent step. Defaults are unbounded.
  void set_log_scale_bounds(double lower, double upper);
  double log_scale_lower() const { return lower_; }
  double log_scale_upper() const { return upper_; }

  const std::optional<Draw>& last_draw() const { return last_draw_; }
  void clear_last_draw() { last_draw_.reset(); }

  // Draws q frequencies and records the draw. Throws ArgumentError if q < 1.
  Matrix sample_freqs(std::size_t q, Rng& rng);

  // Frequencies for a previously recorded draw under the current scales; the
  // draw becomes `last_draw` again.
  Matrix apply(const Draw& draw);

  // Frequencies of a draw without touching sampler state.
  Matrix frequencies(const Draw& draw) const;

 private:
  void check_invariants() const;

  Matrix log_scales_;  // K x m
  Vector logits_;      // K
  double lower_ = -std::numeric_limits<double>::infinity();
  double upper_ = std::numeric_limits<double>::infinity();
  std::optional<Draw> last_draw_;
};

// Pathwise gradient of a scalar objective w.r.t. log_scales, given the
// objective's gradient w.r.t. the drawn frequencies:
//   G[c, j] = sum_{k : c_k = c} grad_freqs[k, j] * t_kj.
Matrix log_scale_gradient(const FreqSampler& sampler, const Draw& draw, const Matrix& grad_freqs);

// One gradient-ascent step on the log-scales using last_draw. Mixture logits
// stay fixed. The result has last_draw cleared. Throws StateError without a
// recorded draw, ShapeError on mismatched gradients, NumericError when the
// updated scales are not finite.
FreqSampler max_step(const FreqSampler& sampler, const Matrix& grad_freqs, double learning_rate);

}  // namespace ncfm::freqsampler
