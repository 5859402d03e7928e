#include "ncfm/eval.hpp"

#include "ncfm/baselines.hpp"
#include "ncfm/charfn.hpp"
#include "ncfm/features.hpp"
#include "ncfm/freqsampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace ncfm::eval {

std::string to_string(ClassifierKind kind) {
  return kind == ClassifierKind::MultinomialLogistic ? "multinomial-logistic" : "one-nearest-neighbor";
}

ClassifierKind classifier_kind_from_string(const std::string& s) {
  if (s == "multinomial-logistic") return ClassifierKind::MultinomialLogistic;
  if (s == "one-nearest-neighbor") return ClassifierKind::OneNearestNeighbor;
  throw ConfigError("unknown classifier '" + s + "'");
}

std::string to_string(TrainSource source) {
  switch (source) {
    case TrainSource::Distilled: return "distilled";
    case TrainSource::RandomSubset: return "random-subset";
    case TrainSource::Full: return "full";
  }
  return "unknown";
}

std::string to_string(BenchMethod m) { return m == BenchMethod::Cfd ? "cfd" : "mmd-quadratic"; }

namespace {

void check_eval_inputs(const data::DataMatrix& train, const data::DataMatrix& test) {
  if (!train.labeled() || !test.labeled()) throw ArgumentError("evaluation needs labeled train and test data");
  if (train.d() != test.d()) {
    throw ArgumentError("train has " + std::to_string(train.d()) + " columns, test has " + std::to_string(test.d()));
  }
  data::validate(train);
  const int train_classes = train.num_classes();
  for (Eigen::Index i = 0; i < test.labels->size(); ++i) {
    const int c = (*test.labels)(i);
    if (c >= train_classes) throw ArgumentError("test class " + std::to_string(c) + " is absent from train");
  }
}

double logistic_score(const data::DataMatrix& train, const data::DataMatrix& test, std::uint64_t seed,
                      const LogisticOptions& opt) {
  const Eigen::Index d = train.values.cols();
  const Eigen::Index classes = train.num_classes();
  const Eigen::Index n = train.values.rows();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, opt.init_scale);
  Matrix w(d, classes);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = normal(rng);
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(classes);
  Matrix onehot = Matrix::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, (*train.labels)(i)) = 1.0;

  for (std::size_t it = 0; it < opt.iterations; ++it) {
    Matrix z = train.values * w;
    z.rowwise() += b;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double top = z.row(i).maxCoeff();
      z.row(i) = (z.row(i).array() - top).exp().matrix();
      z.row(i) /= z.row(i).sum();
    }
    const Matrix g = (z - onehot) / static_cast<double>(n);
    w -= opt.learning_rate * (train.values.transpose() * g + opt.l2 * w);
    b -= opt.learning_rate * g.colwise().sum();
  }
  Matrix scores = test.values * w;
  scores.rowwise() += b;
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index arg = 0;
    scores.row(i).maxCoeff(&arg);
    if (arg == (*test.labels)(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

double nearest_neighbor_score(const data::DataMatrix& train, const data::DataMatrix& test) {
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < test.values.rows(); ++i) {
    Eigen::Index best = 0;
    (train.values.rowwise() - test.values.row(i)).rowwise().squaredNorm().minCoeff(&best);
    if ((*train.labels)(best) == (*test.labels)(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.values.rows());
}

void summarize(EvalReport& r) {
  const double n = static_cast<double>(r.accuracies.size());
  r.mean = std::accumulate(r.accuracies.begin(), r.accuracies.end(), 0.0) / n;
  double var = 0.0;
  for (double a : r.accuracies) var += (a - r.mean) * (a - r.mean);
  r.stddev = std::sqrt(var / n);
}

data::DataMatrix random_subset(const data::DataMatrix& real, std::size_t ipc, std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> picked;
  for (int c = 0; c < real.num_classes(); ++c) {
    std::vector<std::size_t> rows = real.rows_of_class(c);
    if (rows.size() >= ipc) {
      std::shuffle(rows.begin(), rows.end(), rng);
      picked.insert(picked.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(ipc));
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
      for (std::size_t i = 0; i < ipc; ++i) picked.push_back(rows[pick(rng)]);
    }
  }
  return real.select(picked);
}

}  // namespace

double train_and_score(const data::DataMatrix& train, const data::DataMatrix& test, ClassifierKind kind,
                       std::uint64_t seed, const LogisticOptions& options) {
  check_eval_inputs(train, test);
  return kind == ClassifierKind::MultinomialLogistic ? logistic_score(train, test, seed, options)
                                                     : nearest_neighbor_score(train, test);
}

EvalReport evaluate(const data::DataMatrix& train, const data::DataMatrix& test, ClassifierKind kind,
                    const std::vector<std::uint64_t>& seeds, const LogisticOptions& options) {
  if (seeds.empty()) throw ArgumentError("evaluate needs at least one seed");
  check_eval_inputs(train, test);
  EvalReport r;
  r.classifier = kind;
  r.seeds = seeds;
  for (std::uint64_t s : seeds) r.accuracies.push_back(train_and_score(train, test, kind, s, options));
  summarize(r);
  return r;
}

std::vector<EvalReport> compare_sources(const data::DataMatrix& real_train, const data::DataMatrix& test,
                                        const data::DataMatrix& distilled, std::size_t ipc, ClassifierKind kind,
                                        const std::vector<std::uint64_t>& seeds, const LogisticOptions& options) {
  EvalReport distilled_report = evaluate(distilled, test, kind, seeds, options);
  distilled_report.train_source = TrainSource::Distilled;

  EvalReport subset_report;
  subset_report.train_source = TrainSource::RandomSubset;
  subset_report.classifier = kind;
  subset_report.seeds = seeds;
  for (std::uint64_t s : seeds) {
    subset_report.accuracies.push_back(train_and_score(random_subset(real_train, ipc, s), test, kind, s, options));
  }
  summarize(subset_report);

  EvalReport full_report = evaluate(real_train, test, kind, seeds, options);
  full_report.train_source = TrainSource::Full;
  return {distilled_report, subset_report, full_report};
}

void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "train_source,classifier,seed,test_accuracy,mean,std\n";
  out.precision(10);
  for (const EvalReport& r : reports) {
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
      out << to_string(r.train_source) << ',' << to_string(r.classifier) << ',' << r.seeds[i] << ','
          << r.accuracies[i] << ',' << r.mean << ',' << r.stddev << '\n';
    }
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------

DatasetSampler default_dataset_sampler(std::size_t max_n) {
  return [max_n](Rng& rng, Eigen::Index d) {
    std::uniform_int_distribution<std::size_t> count(1, max_n);
    std::uniform_real_distribution<double> shift(-1.0, 1.0);
    std::uniform_real_distribution<double> spread(0.1, 2.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(count(rng));
    const double mu = shift(rng);
    const double s = spread(rng);
    Matrix x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = mu + s * normal(rng);
    return x;
  };
}

AxiomReport metric_axiom_suite(const DatasetSampler& sampler, std::size_t trials, std::uint64_t seed,
                               const AxiomOptions& options) {
  if (trials < 1) throw ArgumentError("metric_axiom_suite needs trials >= 1");
  Rng rng(seed);
  std::uniform_int_distribution<Eigen::Index> dims(1, options.max_d);
  std::uniform_real_distribution<double> log_scale(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const charfn::DiscrepancyConfig disc{0.5, options.epsilon_sqrt};

  AxiomReport r;
  r.trials = trials;
  r.min_value = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    const Eigen::Index d = dims(rng);
    const Matrix p = sampler(rng, d);
    const Matrix q = sampler(rng, d);
    const Matrix s = sampler(rng, d);
    const double scale = std::exp(log_scale(rng));
    Matrix freqs(static_cast<Eigen::Index>(options.q), d);
    for (Eigen::Index i = 0; i < freqs.size(); ++i) freqs.data()[i] = scale * normal(rng);

    const charfn::CFTable cp = charfn::empirical_cf(p, freqs);
    const charfn::CFTable cq = charfn::empirical_cf(q, freqs);
    const charfn::CFTable cs = charfn::empirical_cf(s, freqs);
    const double pq = charfn::cfd(cp, cq, disc).total;
    const double qp = charfn::cfd(cq, cp, disc).total;
    const double pr = charfn::cfd(cp, cs, disc).total;
    const double rp = charfn::cfd(cs, cp, disc).total;
    const double qr = charfn::cfd(cq, cs, disc).total;
    const double rq = charfn::cfd(cs, cq, disc).total;

    for (double v : {pq, qp, pr, rp, qr, rq}) {
      r.min_value = std::min(r.min_value, v);
      if (!(v >= 0.0)) ++r.nonneg_violations;
    }
    for (double gap : {std::abs(pq - qp), std::abs(pr - rp), std::abs(qr - rq)}) {
      r.worst_symmetry = std::max(r.worst_symmetry, gap);
      if (gap != 0.0) ++r.symmetry_violations;
    }
    for (double excess : {pr - pq - qr, pq - pr - rq, qr - qp - pr}) {
      r.worst_triangle = std::max(r.worst_triangle, excess);
      if (excess > options.slack) ++r.triangle_violations;
    }
  }
  if (r.worst_triangle == 0.0) r.worst_triangle = -0.0;
  return r;
}

SuiteResult decomposition_suite(std::size_t instances, std::uint64_t seed, double tolerance) {
  Rng rng(seed);
  std::uniform_int_distribution<Eigen::Index> count(1, 10);
  std::uniform_int_distribution<Eigen::Index> dims(1, 3);
  std::uniform_real_distribution<double> scale(0.1, 3.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr Eigen::Index kFreqsPerInstance = 4;

  double worst = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    const Eigen::Index d = dims(rng);
    Matrix x(count(rng), d), y(count(rng), d), freqs(kFreqsPerInstance, d);
    const double sx = scale(rng), sy = scale(rng), sf = scale(rng);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = sx * normal(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = sy * normal(rng) + 0.5;
    for (Eigen::Index i = 0; i < freqs.size(); ++i) freqs.data()[i] = sf * normal(rng);
    const charfn::CFTable p = charfn::empirical_cf(x, freqs);
    const charfn::CFTable q = charfn::empirical_cf(y, freqs);
    // alpha = 1 isolates the amplitude term, alpha = 0 the phase term.
    const Vector amp = charfn::chf_blended(p, q, {1.0, 0.0});
    const Vector phase = charfn::chf_blended(p, q, {0.0, 0.0});
    for (Eigen::Index k = 0; k < kFreqsPerInstance; ++k) {
      const std::complex<double> diff = std::complex<double>(p.re(k), p.im(k)) - std::complex<double>(q.re(k), q.im(k));
      worst = std::max(worst, std::abs(amp(k) + phase(k) - std::norm(diff)));
    }
  }
  SuiteResult r;
  r.name = "decomposition";
  r.worst = worst;
  r.passed = worst <= tolerance;
  r.detail = std::to_string(instances) + " instances x " + std::to_string(kFreqsPerInstance) + " frequencies";
  return r;
}

namespace {

double relative_error(const Matrix& analytic, const Matrix& fd) {
  const double denom = std::max(analytic.norm(), fd.norm());
  if (!std::isfinite(denom) || !analytic.allFinite()) return std::numeric_limits<double>::quiet_NaN();
  if (denom == 0.0) return 0.0;
  return (analytic - fd).norm() / denom;
}

double min_abs_preactivation(const features::FeatureMap& map, const Matrix& x) {
  const auto in = static_cast<Eigen::Index>(map.in_dim);
  const auto hid = static_cast<Eigen::Index>(map.hidden_dim);
  const Eigen::Map<const Matrix> w1(map.params.data(), in, hid);
  const Eigen::Map<const Vector> b1(map.params.data() + in * hid, hid);
  Matrix pre = x * w1;
  pre.rowwise() += b1.transpose();
  return pre.cwiseAbs().minCoeff();
}

}  // namespace

SuiteResult gradient_suite(std::size_t instances, std::uint64_t seed, const GradientOptions& opt) {
  Rng rng(seed);
  std::uniform_int_distribution<Eigen::Index> count(2, static_cast<Eigen::Index>(opt.max_n));
  std::uniform_int_distribution<std::size_t> freq_count(1, opt.max_q);
  std::uniform_int_distribution<std::size_t> dims(1, opt.max_dim);
  std::uniform_int_distribution<std::size_t> comps(1, 2);
  std::uniform_real_distribution<double> log_scale(-0.5, 0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  const charfn::DiscrepancyConfig disc{0.5, opt.epsilon_sqrt};
  const double h = opt.step;

  double worst_synth = 0.0;
  double worst_scale = 0.0;
  std::size_t failures = 0;
  for (std::size_t t = 0; t < instances; ++t) {
    features::FeatureMap map;
    Matrix xr, xs;
    // Redraw until no hidden pre-activation of the synthetic inputs sits
    // within 1e-3 of a relu kink.
    for (int attempt = 0;; ++attempt) {
      const std::size_t in = dims(rng), hid = dims(rng), out = dims(rng);
      map = features::make_mlp(in, hid, out, rng);
      const std::size_t b1 = in * hid;
      for (std::size_t j = 0; j < hid; ++j) map.params(static_cast<Eigen::Index>(b1 + j)) = 0.3 * normal(rng);
      map.init_checkpoint = map.params;
      map.final_checkpoint = map.params;
      xr.resize(count(rng), static_cast<Eigen::Index>(in));
      for (Eigen::Index i = 0; i < xr.size(); ++i) xr.data()[i] = normal(rng);
      if (opt.coinciding) {
        xs = xr;
      } else {
        xs.resize(count(rng), static_cast<Eigen::Index>(in));
        for (Eigen::Index i = 0; i < xs.size(); ++i) xs.data()[i] = 0.7 * normal(rng) + 0.3;
      }
      if (min_abs_preactivation(map, xs) > 1e-3 || attempt > 100) break;
    }
    const std::size_t q = freq_count(rng);
    const std::size_t k = comps(rng);
    Matrix ls(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(map.out_dim));
    for (Eigen::Index i = 0; i < ls.size(); ++i) ls.data()[i] = log_scale(rng);
    freqsampler::FreqSampler sampler(ls, Vector::Zero(static_cast<Eigen::Index>(k)));
    const Matrix freqs = sampler.sample_freqs(q, rng);
    const freqsampler::Draw draw = *sampler.last_draw();

    const Matrix zr = features::forward(map, xr);
    const charfn::CfdGradients g = charfn::cfd_backward(zr, features::forward(map, xs), freqs, disc, true);
    const Matrix grad_x = features::vjp(map, xs, g.grad_synth);
    const Matrix grad_ls = freqsampler::log_scale_gradient(sampler, draw, g.grad_freqs);

    auto total_at_inputs = [&](const Matrix& x) { return charfn::cfd(zr, features::forward(map, x), freqs, disc).total; };
    Matrix fd_x(xs.rows(), xs.cols());
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
      Matrix plus = xs, minus = xs;
      plus.data()[i] += h;
      minus.data()[i] -= h;
      fd_x.data()[i] = (total_at_inputs(plus) - total_at_inputs(minus)) / (2.0 * h);
    }
    const Matrix zs = features::forward(map, xs);
    auto total_at_scales = [&](const Matrix& l) {
      const freqsampler::FreqSampler probe(l, sampler.mixture_logits());
      return charfn::cfd(zr, zs, probe.frequencies(draw), disc).total;
    };
    Matrix fd_ls(ls.rows(), ls.cols());
    for (Eigen::Index i = 0; i < ls.size(); ++i) {
      Matrix plus = ls, minus = ls;
      plus.data()[i] += h;
      minus.data()[i] -= h;
      fd_ls.data()[i] = (total_at_scales(plus) - total_at_scales(minus)) / (2.0 * h);
    }
    const double e_x = relative_error(grad_x, fd_x);
    const double e_ls = relative_error(grad_ls, fd_ls);
    if (!(e_x < opt.tolerance) || !(e_ls < opt.tolerance)) ++failures;
    worst_synth = std::isnan(e_x) ? e_x : std::max(worst_synth, e_x);
    worst_scale = std::isnan(e_ls) ? e_ls : std::max(worst_scale, e_ls);
    if (std::isnan(worst_synth) || std::isnan(worst_scale)) {
      // non-finite gradients: no point continuing
      failures += instances - t - 1;
      break;
    }
  }
  SuiteResult r;
  r.name = "gradients";
  r.worst = std::max(worst_synth, worst_scale);
  if (std::isnan(worst_synth) || std::isnan(worst_scale)) r.worst = std::numeric_limits<double>::quiet_NaN();
  r.passed = failures == 0;
  std::ostringstream detail;
  detail << "synthetic-input rel err " << worst_synth << ", log-scale rel err " << worst_scale << ", failures "
         << failures << "/" << instances;
  r.detail = detail.str();
  return r;
}

LevyResult levy_convergence(const std::vector<std::size_t>& sizes, std::size_t repeats, std::uint64_t seed,
                            Eigen::Index dim) {
  if (sizes.size() < 2 || repeats < 1) throw ArgumentError("levy_convergence needs >= 2 sizes and >= 1 repeat");
  // Fixed grid: radii evenly spaced in [0.1, 2], directions from a fixed stream.
  constexpr Eigen::Index kGrid = 32;
  Matrix grid(kGrid, dim);
  Rng grid_rng(20240531);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index k = 0; k < kGrid; ++k) {
    Eigen::RowVectorXd dir(dim);
    for (Eigen::Index j = 0; j < dim; ++j) dir(j) = normal(grid_rng);
    const double radius = 0.1 + 1.9 * static_cast<double>(k) / static_cast<double>(kGrid - 1);
    grid.row(k) = radius * dir / dir.norm();
  }
  Vector closed(kGrid);
  for (Eigen::Index k = 0; k < kGrid; ++k) closed(k) = std::exp(-0.5 * grid.row(k).squaredNorm());

  LevyResult r;
  r.sizes = sizes;
  Rng rng(seed);
  for (std::size_t n : sizes) {
    double acc = 0.0;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      Matrix x(static_cast<Eigen::Index>(n), dim);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
      const charfn::CFTable cf = charfn::empirical_cf(x, grid);
      double worst = 0.0;
      for (Eigen::Index k = 0; k < kGrid; ++k) {
        worst = std::max(worst, std::abs(std::complex<double>(cf.re(k) - closed(k), cf.im(k))));
      }
      acc += worst;
    }
    r.errors.push_back(acc / static_cast<double>(repeats));
  }
  std::vector<double> xs(sizes.begin(), sizes.end());
  r.slope = loglog_slope(xs, r.errors);
  return r;
}

CorrespondenceResult cfd_mmd_correspondence(std::size_t pairs, std::size_t q, std::uint64_t seed, std::size_t max_n,
                                            double z_limit) {
  Rng rng(seed);
  std::uniform_int_distribution<Eigen::Index> count(5, static_cast<Eigen::Index>(max_n));
  std::uniform_int_distribution<Eigen::Index> dims(1, 4);
  std::uniform_real_distribution<double> bandwidth(0.5, 2.0);
  std::uniform_real_distribution<double> shift(-1.0, 1.0);
  std::uniform_real_distribution<double> spread(0.5, 1.5);
  std::normal_distribution<double> normal(0.0, 1.0);

  CorrespondenceResult r;
  r.pairs = pairs;
  for (std::size_t p = 0; p < pairs; ++p) {
    const Eigen::Index d = dims(rng);
    const double h = bandwidth(rng);
    Matrix x(count(rng), d), y(count(rng), d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    const double s = spread(rng);
    Eigen::RowVectorXd mu(d);
    for (Eigen::Index j = 0; j < d; ++j) mu(j) = shift(rng);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index j = 0; j < d; ++j) y(i, j) = mu(j) + s * normal(rng);
    }
    freqsampler::FreqSampler sampler(1, static_cast<std::size_t>(d), 1.0 / h);
    const Matrix freqs = sampler.sample_freqs(q, rng);
    const charfn::CFTable cx = charfn::empirical_cf(x, freqs);
    const charfn::CFTable cy = charfn::empirical_cf(y, freqs);
    // Chf at alpha = 0.5 is |Phi_X - Phi_Y|^2 / 2.
    const Vector values = 2.0 * charfn::chf_blended(cx, cy, {0.5, 0.0});
    const double mean = values.mean();
    const double sd = std::sqrt((values.array() - mean).square().sum() / static_cast<double>(values.size() - 1));
    const double se = sd / std::sqrt(static_cast<double>(values.size()));
    const double mmd = baselines::mmd_squared(x, y, {h});
    const double z = std::abs(mean - mmd) / se;
    r.worst_z = std::max(r.worst_z, z);
    if (!(z < z_limit)) ++r.failures;
  }
  return r;
}

std::vector<double> window_means(const std::vector<double>& values, std::size_t window) {
  std::vector<double> out;
  if (window == 0) return out;
  for (std::size_t start = 0; start + window <= values.size(); start += window) {
    out.push_back(std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(start),
                                  values.begin() + static_cast<std::ptrdiff_t>(start + window), 0.0) /
                  static_cast<double>(window));
  }
  return out;
}

bool stable_training(const std::vector<double>& values, std::size_t window, double tolerance) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  const std::vector<double> w = window_means(values, window);
  for (std::size_t i = 1; i < w.size(); ++i) {
    if (w[i] > (1.0 + tolerance) * w[i - 1]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("loglog_slope needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

BenchReport complexity_bench(BenchMethod method, const std::vector<std::size_t>& sizes, const BenchOptions& opt) {
  if (sizes.size() < 2) throw ArgumentError("complexity_bench needs at least two sizes");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw ArgumentError("complexity_bench sizes must be strictly increasing");
  }
  if (sizes.front() < 1 || opt.repeats < 1) throw ArgumentError("complexity_bench needs sizes >= 1 and repeats >= 1");

  BenchReport r;
  r.method = method;
  if (std::log10(static_cast<double>(sizes.back()) / static_cast<double>(sizes.front())) < 1.5) {
    r.warnings.push_back("size grid spans less than 1.5 decades");
  }
  Rng rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix freqs(static_cast<Eigen::Index>(opt.q), opt.dim);
  for (Eigen::Index i = 0; i < freqs.size(); ++i) freqs.data()[i] = normal(rng);
  const charfn::DiscrepancyConfig disc{0.5, 1e-12};
  const Execution strict{};

  volatile double sink = 0.0;
  for (std::size_t n : sizes) {
    Matrix x(static_cast<Eigen::Index>(n), opt.dim), y(static_cast<Eigen::Index>(n), opt.dim);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = normal(rng) + 0.5;
    std::vector<double> times;
    for (std::size_t rep = 0; rep < opt.repeats; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      if (method == BenchMethod::Cfd) {
        sink = sink + charfn::cfd(x, y, freqs, disc, strict).total;
      } else {
        sink = sink + baselines::mmd_squared(x, y, {1.0}, strict);
      }
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
    const double median = times[times.size() / 2];
    if (median < opt.min_seconds) {
      r.warnings.push_back("n=" + std::to_string(n) + " dropped: median time " + std::to_string(median) +
                           " s is below timer resolution threshold");
      continue;
    }
    r.sizes.push_back(n);
    r.times.push_back(median);
  }
  if (r.sizes.size() < 2) throw ArgumentError("complexity_bench: fewer than two sizes remain after filtering");
  std::vector<double> xs(r.sizes.begin(), r.sizes.end());
  r.slope = loglog_slope(xs, r.times);
  return r;
}

void write_bench_csv(const std::filesystem::path& path, const BenchReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "method,n,median_seconds,fitted_slope\n";
  out.precision(10);
  for (std::size_t i = 0; i < report.sizes.size(); ++i) {
    out << to_string(report.method) << ',' << report.sizes[i] << ',' << report.times[i] << ',' << report.slope << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace ncfm::eval
