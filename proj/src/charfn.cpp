#include "ncfm/charfn.hpp"

#include "parallel.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace ncfm::charfn {

namespace {

void check_inner_dims(const Matrix& features, const Matrix& freqs, const char* what) {
  if (features.rows() < 1) throw ShapeError(std::string(what) + ": feature batch is empty");
  if (freqs.rows() < 1) throw ShapeError(std::string(what) + ": need at least one frequency");
  if (features.cols() != freqs.cols()) {
    throw ShapeError(std::string(what) + ": features have " + std::to_string(features.cols()) +
                     " columns but frequencies have " + std::to_string(freqs.cols()));
  }
}

// Accumulates mean cos/sin for frequencies [begin, end). When `cos_out` is
// non-null the per-sample values are stored for the reverse pass (q x n).
void accumulate_cf(const Matrix& z, const Matrix& freqs, Eigen::Index begin, Eigen::Index end,
                   Vector& re, Vector& im, Matrix* cos_out, Matrix* sin_out) {
  const Eigen::Index n = z.rows();
  const Eigen::Index m = z.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index k = begin; k < end; ++k) {
    const double* t = freqs.row(k).data();
    double sum_c = 0.0;
    double sum_s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double* zi = z.row(i).data();
      double theta = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) theta += t[j] * zi[j];
      const double c = std::cos(theta);
      const double s = std::sin(theta);
      sum_c += c;
      sum_s += s;
      if (cos_out) {
        (*cos_out)(k, i) = c;
        (*sin_out)(k, i) = s;
      }
    }
    re(k) = sum_c * inv_n;
    im(k) = sum_s * inv_n;
  }
}

void finish_table(CFTable& table) {
  const Eigen::Index q = table.re.size();
  table.amplitude.resize(q);
  table.phase.resize(q);
  for (Eigen::Index k = 0; k < q; ++k) {
    table.amplitude(k) = std::hypot(table.re(k), table.im(k));
    table.phase(k) = std::atan2(table.im(k), table.re(k));
  }
}

CFTable build_table(const Matrix& z, const Matrix& freqs, const Execution& exec, Matrix* cos_out,
                    Matrix* sin_out) {
  CFTable table;
  table.freqs = freqs;
  table.re.resize(freqs.rows());
  table.im.resize(freqs.rows());
  detail::for_blocks(freqs.rows(), exec, [&](Eigen::Index begin, Eigen::Index end, std::size_t) {
    accumulate_cf(z, freqs, begin, end, table.re, table.im, cos_out, sin_out);
  });
  finish_table(table);
  return table;
}

}  // namespace

void validate(const DiscrepancyConfig& config) {
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) {
    throw ArgumentError("alpha must lie in [0, 1], got " + std::to_string(config.alpha));
  }
  if (!(config.epsilon_sqrt >= 0.0) || !std::isfinite(config.epsilon_sqrt)) {
    throw ArgumentError("epsilon_sqrt must be finite and >= 0");
  }
}

CFTable empirical_cf(const Matrix& features, const Matrix& freqs, const Execution& exec) {
  check_inner_dims(features, freqs, "empirical_cf");
  return build_table(features, freqs, exec, nullptr, nullptr);
}

void check_compatible(const CFTable& p, const CFTable& q) {
  if (p.freqs.rows() != q.freqs.rows() || p.freqs.cols() != q.freqs.cols() || p.freqs != q.freqs) {
    throw StateError("CF tables were built from different frequency sets");
  }
}

Vector chf_blended(const CFTable& p, const CFTable& q, const DiscrepancyConfig& config) {
  validate(config);
  check_compatible(p, q);
  const double a = config.alpha;
  Vector out(p.q());
  for (Eigen::Index k = 0; k < p.q(); ++k) {
    const double dA = p.amplitude(k) - q.amplitude(k);
    // |dphase| keeps the value bitwise symmetric in (p, q).
    const double dphase = std::abs(p.phase(k) - q.phase(k));
    out(k) = a * dA * dA + (1.0 - a) * 2.0 * p.amplitude(k) * q.amplitude(k) * (1.0 - std::cos(dphase));
  }
  return out;
}

LossBreakdown cfd(const CFTable& p, const CFTable& q, const DiscrepancyConfig& config) {
  LossBreakdown loss;
  loss.per_freq_chf = chf_blended(p, q, config);
  const double a = config.alpha;
  const Eigen::Index nq = p.q();
  double total = 0.0;
  double amp = 0.0;
  double phase = 0.0;
  for (Eigen::Index k = 0; k < nq; ++k) {
    total += std::sqrt(loss.per_freq_chf(k) + config.epsilon_sqrt);
    const double dA = p.amplitude(k) - q.amplitude(k);
    amp += a * dA * dA;
    phase += loss.per_freq_chf(k) - a * dA * dA;
  }
  const double inv_q = 1.0 / static_cast<double>(nq);
  loss.total = total * inv_q;
  loss.amp_term = amp * inv_q;
  loss.phase_term = phase * inv_q;
  return loss;
}

LossBreakdown cfd(const Matrix& p_features, const Matrix& q_features, const Matrix& freqs,
                  const DiscrepancyConfig& config, const Execution& exec) {
  return cfd(empirical_cf(p_features, freqs, exec), empirical_cf(q_features, freqs, exec), config);
}

CfdGradients cfd_backward(const Matrix& real_features, const Matrix& synth_features, const Matrix& freqs,
                          const DiscrepancyConfig& config, bool with_freq_grad, const Execution& exec) {
  check_inner_dims(real_features, freqs, "cfd_backward (real)");
  check_inner_dims(synth_features, freqs, "cfd_backward (synth)");
  validate(config);

  const Eigen::Index q = freqs.rows();
  const Eigen::Index m = freqs.cols();
  const Eigen::Index n_real = real_features.rows();
  const Eigen::Index n_synth = synth_features.rows();

  Matrix cos_s(q, n_synth), sin_s(q, n_synth);
  Matrix cos_r, sin_r;
  if (with_freq_grad) {
    cos_r.resize(q, n_real);
    sin_r.resize(q, n_real);
  }
  const CFTable p = build_table(real_features, freqs, exec, with_freq_grad ? &cos_r : nullptr,
                                with_freq_grad ? &sin_r : nullptr);
  const CFTable s = build_table(synth_features, freqs, exec, &cos_s, &sin_s);

  CfdGradients out;
  out.loss = cfd(p, s, config);

  // d total / d (re, im) for both tables. The phase term is differentiated
  // through |P||Q| cos(dphase) = re_P re_Q + im_P im_Q.
  const double a = config.alpha;
  const double b = 1.0 - a;
  Vector d_re_s(q), d_im_s(q), d_re_p(q), d_im_p(q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const double g = 0.5 / (static_cast<double>(q) * std::sqrt(out.loss.per_freq_chf(k) + config.epsilon_sqrt));
    const double Ap = p.amplitude(k);
    const double As = s.amplitude(k);
    // Amplitude ratios cancel exactly when the amplitudes coincide.
    const double inv_As = As > 0.0 ? 1.0 / As : 0.0;
    const double inv_Ap = Ap > 0.0 ? 1.0 / Ap : 0.0;
    const double ratio_s = As > 0.0 ? Ap / As : 0.0;
    const double ratio_p = Ap > 0.0 ? As / Ap : 0.0;
    const double amp_s = -2.0 * a * (Ap - As) * inv_As;
    const double amp_p = 2.0 * a * (Ap - As) * inv_Ap;
    d_re_s(k) = g * (amp_s * s.re(k) + 2.0 * b * (ratio_s * s.re(k) - p.re(k)));
    d_im_s(k) = g * (amp_s * s.im(k) + 2.0 * b * (ratio_s * s.im(k) - p.im(k)));
    d_re_p(k) = g * (amp_p * p.re(k) + 2.0 * b * (ratio_p * p.re(k) - s.re(k)));
    d_im_p(k) = g * (amp_p * p.im(k) + 2.0 * b * (ratio_p * p.im(k) - s.im(k)));
  }

  // Per (sample, frequency) weight w_ik = d total / d theta_ik, where
  // theta_ik = <t_k, z_i>: d cos = -sin, d sin = cos, each scaled by 1/n.
  const double inv_ns = 1.0 / static_cast<double>(n_synth);
  const double inv_nr = 1.0 / static_cast<double>(n_real);

  const std::size_t blocks = detail::block_count(q, exec);
  std::vector<Matrix> partial(blocks, Matrix::Zero(n_synth, m));
  if (with_freq_grad) out.grad_freqs = Matrix::Zero(q, m);

  detail::for_blocks(q, exec, [&](Eigen::Index begin, Eigen::Index end, std::size_t block) {
    Matrix& gs = partial[block];
    for (Eigen::Index k = begin; k < end; ++k) {
      const auto t = freqs.row(k);
      for (Eigen::Index i = 0; i < n_synth; ++i) {
        const double w = (-sin_s(k, i) * d_re_s(k) + cos_s(k, i) * d_im_s(k)) * inv_ns;
        gs.row(i) += w * t;
        if (with_freq_grad) out.grad_freqs.row(k) += w * synth_features.row(i);
      }
      if (with_freq_grad) {
        for (Eigen::Index i = 0; i < n_real; ++i) {
          const double w = (-sin_r(k, i) * d_re_p(k) + cos_r(k, i) * d_im_p(k)) * inv_nr;
          out.grad_freqs.row(k) += w * real_features.row(i);
        }
      }
    }
  });

  out.grad_synth = std::move(partial[0]);
  for (std::size_t blk = 1; blk < blocks; ++blk) out.grad_synth += partial[blk];
  return out;
}

}  // namespace ncfm::charfn
