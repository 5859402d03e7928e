#pragma once

// Empirical characteristic functions and the characteristic function
// discrepancy (CFD) between two feature batches, with analytic gradients.
//
// For features z_1..z_n and a frequency t, the empirical CF is
//   Phi(t) = (1/n) sum_i exp(j <t, z_i>) = re + j im.
// The blended per-frequency integrand between P and Q is
//   Chf_a(t) = a (|Phi_P| - |Phi_Q|)^2 + (1 - a) 2 |Phi_P| |Phi_Q| (1 - cos(arg Phi_P - arg Phi_Q))
// and the discrepancy is the Monte-Carlo mean over the sampled frequencies of
// sqrt(Chf_a(t_k) + epsilon_sqrt). At a = 0.5, Chf_a = |Phi_P - Phi_Q|^2 / 2.

#include "ncfm/common.hpp"

namespace ncfm::charfn {

// Per-frequency CF statistics of one batch. Rows of `freqs` are frequencies.
struct CFTable {
  Matrix freqs;      // q x m
  Vector re;         // mean cos <t_k, z_i>
  Vector im;         // mean sin <t_k, z_i>
  Vector amplitude;  // sqrt(re^2 + im^2)
  Vector phase;      // atan2(im, re), in (-pi, pi]

  Eigen::Index q() const { return freqs.rows(); }
};

struct DiscrepancyConfig {
  double alpha = 0.5;
  double epsilon_sqrt = 1e-12;
};

// Throws ArgumentError unless 0 <= alpha <= 1 and epsilon_sqrt >= 0.
// epsilon_sqrt = 0 is accepted so the square-root singularity can be studied.
void validate(const DiscrepancyConfig& config);

struct LossBreakdown {
  double total = 0.0;   // mean_k sqrt(per_freq_chf[k] + epsilon_sqrt)
  Vector per_freq_chf;  // Chf_alpha(t_k)
  double amp_term = 0.0;    // mean_k alpha (|Phi_P| - |Phi_Q|)^2
  double phase_term = 0.0;  // mean_k (1 - alpha) 2 |Phi_P||Phi_Q| (1 - cos dphase)
};

CFTable empirical_cf(const Matrix& features, const Matrix& freqs, const Execution& exec = {});

// Checks that the two tables were built from identical frequency matrices;
// throws StateError otherwise.
void check_compatible(const CFTable& p, const CFTable& q);

Vector chf_blended(const CFTable& p, const CFTable& q, const DiscrepancyConfig& config);

LossBreakdown cfd(const CFTable& p, const CFTable& q, const DiscrepancyConfig& config);

// Convenience: tables for both batches, then cfd.
LossBreakdown cfd(const Matrix& p_features, const Matrix& q_features, const Matrix& freqs,
                  const DiscrepancyConfig& config, const Execution& exec = {});

struct CfdGradients {
  LossBreakdown loss;
  Matrix grad_synth;  // d total / d synth_features (n_synth x m)
  Matrix grad_freqs;  // d total / d freqs (q x m); empty when not requested
};

// Analytic reverse pass of cfd(real, synth, freqs). Real features are
// constants. grad_freqs is only computed when `with_freq_grad` is true.
CfdGradients cfd_backward(const Matrix& real_features, const Matrix& synth_features,
                          const Matrix& freqs, const DiscrepancyConfig& config,
                          bool with_freq_grad = true, const Execution& exec = {});

}  // namespace ncfm::charfn
