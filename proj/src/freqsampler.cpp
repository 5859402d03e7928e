#include "ncfm/freqsampler.hpp"

#include <cmath>
#include <string>

namespace ncfm::freqsampler {

FreqSampler::FreqSampler(std::size_t components, std::size_t dim, double init_scale) {
  if (components < 1 || dim < 1) throw ArgumentError("sampler needs at least one component and one dimension");
  if (!(init_scale > 0.0) || !std::isfinite(init_scale)) throw ArgumentError("sampler init_scale must be > 0");
  log_scales_ = Matrix::Constant(static_cast<Eigen::Index>(components), static_cast<Eigen::Index>(dim),
                                 std::log(init_scale));
  logits_ = Vector::Zero(static_cast<Eigen::Index>(components));
  check_invariants();
}

FreqSampler::FreqSampler(Matrix log_scales, Vector mixture_logits)
    : log_scales_(std::move(log_scales)), logits_(std::move(mixture_logits)) {
  if (log_scales_.rows() < 1 || log_scales_.cols() < 1) throw ArgumentError("sampler log_scales must be non-empty");
  if (logits_.size() != log_scales_.rows()) {
    throw ShapeError("sampler has " + std::to_string(log_scales_.rows()) + " components but " +
                     std::to_string(logits_.size()) + " mixture logits");
  }
  check_invariants();
}

std::size_t FreqSampler::default_components(std::size_t q) { return q / 16 > 1 ? q / 16 : 1; }

Vector FreqSampler::mixture_weights() const {
  const double top = logits_.maxCoeff();
  Vector w = (logits_.array() - top).exp().matrix();
  return w / w.sum();
}

double FreqSampler::scale_rms() const {
  return std::sqrt(log_scales_.array().exp().square().mean());
}

void FreqSampler::set_log_scale_bounds(double lower, double upper) {
  if (!(lower < upper)) throw ArgumentError("sampler log-scale bounds must satisfy lower < upper");
  lower_ = lower;
  upper_ = upper;
  log_scales_ = log_scales_.cwiseMax(lower_).cwiseMin(upper_);
}

void FreqSampler::check_invariants() const {
  if (!log_scales_.allFinite() || !log_scales_.array().exp().allFinite() ||
      (log_scales_.array().exp() <= 0.0).any()) {
    throw NumericError("sampler scales must be finite and strictly positive");
  }
  if (!logits_.allFinite()) throw NumericError("sampler mixture logits must be finite");
}

Matrix FreqSampler::frequencies(const Draw& draw) const {
  const auto q = static_cast<Eigen::Index>(draw.components.size());
  if (draw.noise.rows() != q || draw.noise.cols() != log_scales_.cols()) {
    throw ShapeError("draw noise shape does not match sampler dimension");
  }
  Matrix t(q, log_scales_.cols());
  for (Eigen::Index k = 0; k < q; ++k) {
    const int c = draw.components[static_cast<std::size_t>(k)];
    if (c < 0 || c >= log_scales_.rows()) throw ShapeError("draw references component " + std::to_string(c));
    t.row(k) = log_scales_.row(c).array().exp() * draw.noise.row(k).array();
  }
  return t;
}

Matrix FreqSampler::sample_freqs(std::size_t q, Rng& rng) {
  if (q < 1) throw ArgumentError("sample_freqs needs q >= 1");
  const Vector w = mixture_weights();
  std::discrete_distribution<int> pick(w.data(), w.data() + w.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  Draw draw;
  draw.components.resize(q);
  draw.noise.resize(static_cast<Eigen::Index>(q), log_scales_.cols());
  for (std::size_t k = 0; k < q; ++k) {
    draw.components[k] = pick(rng);
    for (Eigen::Index j = 0; j < log_scales_.cols(); ++j) draw.noise(static_cast<Eigen::Index>(k), j) = normal(rng);
  }
  return apply(draw);
}

Matrix FreqSampler::apply(const Draw& draw) {
  Matrix t = frequencies(draw);
  last_draw_ = draw;
  return t;
}

Matrix log_scale_gradient(const FreqSampler& sampler, const Draw& draw, const Matrix& grad_freqs) {
  const Matrix t = sampler.frequencies(draw);
  if (grad_freqs.rows() != t.rows() || grad_freqs.cols() != t.cols()) {
    throw ShapeError("grad_freqs is " + std::to_string(grad_freqs.rows()) + "x" + std::to_string(grad_freqs.cols()) +
                     " but the draw has " + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) +
                     " frequencies");
  }
  Matrix g = Matrix::Zero(sampler.log_scales().rows(), sampler.log_scales().cols());
  for (Eigen::Index k = 0; k < t.rows(); ++k) {
    g.row(draw.components[static_cast<std::size_t>(k)]) += grad_freqs.row(k).cwiseProduct(t.row(k));
  }
  return g;
}

FreqSampler max_step(const FreqSampler& sampler, const Matrix& grad_freqs, double learning_rate) {
  if (!sampler.last_draw()) throw StateError("max_step needs a recorded draw; call sample_freqs first");
  if (!std::isfinite(learning_rate)) throw ArgumentError("sampler learning rate must be finite");
  if (!grad_freqs.allFinite()) throw NumericError("frequency gradient contains non-finite entries");
  const Matrix g = log_scale_gradient(sampler, *sampler.last_draw(), grad_freqs);
  Matrix next = (sampler.log_scales() + learning_rate * g).cwiseMax(sampler.log_scale_lower())
                    .cwiseMin(sampler.log_scale_upper());
  if (!next.allFinite() || !next.array().exp().allFinite()) {
    throw NumericError("sampler ascent produced non-finite scales");
  }
  FreqSampler out(std::move(next), sampler.mixture_logits());
  out.set_log_scale_bounds(sampler.log_scale_lower(), sampler.log_scale_upper());
  return out;
}

}  // namespace ncfm::freqsampler
