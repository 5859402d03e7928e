#include "ncfm/distill.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ncfm::distill {

using nlohmann::json;

data::DataMatrix SyntheticSet::as_data() const {
  data::DataMatrix out;
  out.values = values;
  out.labels = labels;
  return out;
}

std::string to_string(InitStrategy s) { return s == InitStrategy::RandomReal ? "random-real" : "gaussian-noise"; }

InitStrategy init_strategy_from_string(const std::string& s) {
  if (s == "random-real") return InitStrategy::RandomReal;
  if (s == "gaussian-noise") return InitStrategy::GaussianNoise;
  throw ConfigError("unknown synthetic init strategy '" + s + "'");
}

void validate(const DistillConfig& c) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(c.iterations >= 1, "distill.iterations must be >= 1");
  require(c.q_freqs >= 1, "distill.q_freqs must be >= 1");
  require(c.alpha >= 0.0 && c.alpha <= 1.0, "distill.alpha must lie in [0, 1]");
  require(c.epsilon_sqrt >= 0.0 && std::isfinite(c.epsilon_sqrt), "distill.epsilon_sqrt must be finite and >= 0");
  require(c.lr_synth > 0.0 && std::isfinite(c.lr_synth), "distill.lr_synth must be > 0");
  require(c.lr_sampler > 0.0 && std::isfinite(c.lr_sampler), "distill.lr_sampler must be > 0");
  require(c.min_steps_per_iter >= 1, "distill.min_steps_per_iter must be >= 1");
  require(c.batch_real >= 1, "distill.batch_real must be >= 1");
  require(c.ipc >= 1, "distill.ipc must be >= 1");
  require(c.init_noise_variance >= 0.0, "distill.init_noise_variance must be >= 0");
  require(c.sampler_init_scale > 0.0 && std::isfinite(c.sampler_init_scale), "distill.sampler_init_scale must be > 0");
  require(c.log_scale_min < c.log_scale_max, "distill.log_scale_min must be < distill.log_scale_max");
  require(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0, "distill.adam_beta1 must lie in [0, 1)");
  require(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0, "distill.adam_beta2 must lie in [0, 1)");
  require(c.adam_epsilon > 0.0, "distill.adam_epsilon must be > 0");
  require(c.weight_decay >= 0.0, "distill.weight_decay must be >= 0");
  require(c.grad_clip >= 0.0, "distill.grad_clip must be >= 0");
}

SyntheticSet init_synthetic(const data::DataMatrix& real, std::size_t ipc, InitStrategy strategy, Rng& rng,
                            double noise_variance) {
  if (!real.labeled()) throw ArgumentError("init_synthetic needs labeled real data");
  if (ipc < 1) throw ArgumentError("ipc must be >= 1");
  const int classes = real.num_classes();
  SyntheticSet s;
  s.ipc = ipc;
  const auto rows = static_cast<Eigen::Index>(static_cast<std::size_t>(classes) * ipc);
  s.values.resize(rows, real.values.cols());
  s.labels.resize(rows);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(noise_variance);
  for (int c = 0; c < classes; ++c) {
    std::vector<std::size_t> members = real.rows_of_class(c);
    if (members.empty()) throw ArgumentError("class " + std::to_string(c) + " has no real samples");
    const Eigen::Index off = s.class_offset(c);
    if (strategy == InitStrategy::RandomReal) {
      if (members.size() >= ipc) {
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t i = 0; i < ipc; ++i) {
          s.values.row(off + static_cast<Eigen::Index>(i)) = real.values.row(static_cast<Eigen::Index>(members[i]));
        }
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
        for (std::size_t i = 0; i < ipc; ++i) {
          s.values.row(off + static_cast<Eigen::Index>(i)) =
              real.values.row(static_cast<Eigen::Index>(members[pick(rng)]));
        }
      }
    } else {
      const Vector mean = data::class_mean(real, c);
      for (std::size_t i = 0; i < ipc; ++i) {
        for (Eigen::Index j = 0; j < s.values.cols(); ++j) {
          s.values(off + static_cast<Eigen::Index>(i), j) = mean(j) + sd * normal(rng);
        }
      }
    }
    s.labels.segment(off, static_cast<Eigen::Index>(ipc)).setConstant(c);
  }
  s.optimizer.first = Matrix::Zero(rows, real.values.cols());
  s.optimizer.second = Matrix::Zero(rows, real.values.cols());
  s.optimizer.steps.assign(static_cast<std::size_t>(classes), 0);
  return s;
}

namespace {

[[noreturn]] void numeric_failure(const std::string& what, std::size_t iteration, int class_id) {
  throw NumericError(what + " at iteration " + std::to_string(iteration) + ", class " + std::to_string(class_id));
}

// AdamW update of one class block. Returns the new rows.
Matrix adam_update(SyntheticSet& s, int class_id, const Matrix& rows, const Matrix& grad, const DistillConfig& c) {
  const Eigen::Index off = s.class_offset(class_id);
  const auto n = static_cast<Eigen::Index>(s.ipc);
  auto m = s.optimizer.first.middleRows(off, n);
  auto v = s.optimizer.second.middleRows(off, n);
  const std::size_t step = ++s.optimizer.steps[static_cast<std::size_t>(class_id)];
  m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * grad;
  v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(c.adam_beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(c.adam_beta2, static_cast<double>(step));
  const Matrix m_hat = m / bc1;
  const Matrix v_hat = v / bc2;
  Matrix update = (m_hat.array() / (v_hat.array().sqrt() + c.adam_epsilon)).matrix();
  if (c.weight_decay > 0.0) update += c.weight_decay * rows;
  return rows - c.lr_synth * update;
}

}  // namespace

LogRecord distill_step(DistillState& state, const data::DataMatrix& real, const DistillConfig& config, int class_id,
                       std::size_t iteration, Rng& rng) {
  SyntheticSet& synth = state.synth;
  if (class_id < 0 || class_id >= synth.num_classes()) {
    throw LookupError("class id " + std::to_string(class_id) + " not present in the synthetic set");
  }
  const data::DataMatrix batch = config.full_real_batch ? real.select(real.rows_of_class(class_id))
                                                        : data::sample_batch(real, class_id, config.batch_real, rng);
  if (batch.n() == 0) throw LookupError("class id " + std::to_string(class_id) + " not present in the real data");

  if (config.reblend_each_iter && state.map.init_checkpoint.size() != 0) {
    state.map = features::reblend(state.map, rng);
  }

  const Matrix real_features = features::forward(state.map, batch.values);
  const Eigen::Index off = synth.class_offset(class_id);
  const auto ipc = static_cast<Eigen::Index>(synth.ipc);
  Matrix rows = synth.values.middleRows(off, ipc);

  const charfn::DiscrepancyConfig disc{config.alpha, config.epsilon_sqrt};
  Matrix freqs = state.sampler.sample_freqs(config.q_freqs, rng);
  const freqsampler::Draw draw = *state.sampler.last_draw();

  if (config.sampler_enabled) {
    const Matrix synth_features = features::forward(state.map, rows);
    for (std::size_t s = 0; s < config.max_steps_per_iter; ++s) {
      const charfn::CfdGradients g =
          charfn::cfd_backward(real_features, synth_features, freqs, disc, true, config.exec);
      if (!std::isfinite(g.loss.total)) numeric_failure("non-finite CFD in max phase", iteration, class_id);
      if (!g.grad_freqs.allFinite()) numeric_failure("non-finite frequency gradient", iteration, class_id);
      try {
        state.sampler = freqsampler::max_step(state.sampler, g.grad_freqs, config.lr_sampler);
      } catch (const NumericError& e) {
        numeric_failure(e.what(), iteration, class_id);
      }
      freqs = state.sampler.apply(draw);
    }
  }
  if (config.resample_freqs_for_min) freqs = state.sampler.sample_freqs(config.q_freqs, rng);

  LogRecord record;
  record.iteration = iteration;
  record.class_id = class_id;
  for (std::size_t s = 0; s < config.min_steps_per_iter; ++s) {
    const Matrix synth_features = features::forward(state.map, rows);
    const charfn::CfdGradients g =
        charfn::cfd_backward(real_features, synth_features, freqs, disc, false, config.exec);
    if (!std::isfinite(g.loss.total)) numeric_failure("non-finite CFD in min phase", iteration, class_id);
    if (s == 0) {
      record.cfd_total = g.loss.total;
      record.amp_term = g.loss.amp_term;
      record.phase_term = g.loss.phase_term;
    }
    Matrix grad = features::vjp(state.map, rows, g.grad_synth);
    if (!grad.allFinite()) numeric_failure("non-finite synthetic gradient", iteration, class_id);
    if (config.grad_clip > 0.0) {
      const double norm = grad.norm();
      if (norm > config.grad_clip) grad *= config.grad_clip / norm;
    }
    Matrix next = adam_update(synth, class_id, rows, grad, config);
    if (!next.allFinite()) numeric_failure("synthetic update produced non-finite values (rejected)", iteration, class_id);
    rows = std::move(next);
  }
  synth.values.middleRows(off, ipc) = rows;

  record.sampler_scale_rms = state.sampler.scale_rms();
  record.sampler_scale_max = state.sampler.scales().maxCoeff();
  return record;
}

RunResult run(const data::DataMatrix& real, const DistillConfig& config, const FeatureConfig& fc) {
  validate(config);
  if (!real.labeled()) throw ArgumentError("distillation needs labeled real data");
  data::validate(real);

  Rng rng(config.seed);
  features::FeatureMap map;
  switch (fc.kind) {
    case features::FeatureKind::Identity: map = features::make_identity(real.d()); break;
    case features::FeatureKind::RandomReluProjection:
      map = features::make_random_relu_projection(real.d(), fc.out_dim, rng);
      break;
    case features::FeatureKind::Mlp:
      map = features::make_mlp(real.d(), fc.hidden_dim, fc.out_dim, rng);
      if (fc.pretrain_epochs > 0) {
        features::PretrainOptions opt{fc.pretrain_batch_size, fc.pretrain_learning_rate};
        map = features::pretrain_final_checkpoint(map, real, fc.pretrain_epochs, rng, opt).map;
      }
      break;
  }

  const std::size_t components =
      config.sampler_components ? config.sampler_components : freqsampler::FreqSampler::default_components(config.q_freqs);
  freqsampler::FreqSampler sampler(components, map.out_dim, config.sampler_init_scale);
  sampler.set_log_scale_bounds(config.log_scale_min, config.log_scale_max);

  RunResult result{DistillState{init_synthetic(real, config.ipc, config.init, rng, config.init_noise_variance),
                                std::move(sampler), std::move(map)},
                   {}};
  const int classes = result.state.synth.num_classes();
  std::vector<int> order(static_cast<std::size_t>(classes));
  std::iota(order.begin(), order.end(), 0);
  result.log.reserve(config.iterations * order.size());

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t it = 0; it < config.iterations; ++it) {
    if (config.random_class_order) std::shuffle(order.begin(), order.end(), rng);
    for (int c : order) {
      LogRecord rec = distill_step(result.state, real, config, c, it, rng);
      rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      result.log.push_back(rec);
    }
  }
  return result;
}

namespace {

json bound_to_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double bound_from_json(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto vals = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()},
              {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto vals = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(vals.size()) != rows * cols) {
    throw ParseError("checkpoint: matrix data has " + std::to_string(vals.size()) + " entries, expected " +
                     std::to_string(rows * cols));
  }
  return Eigen::Map<const Matrix>(vals.data(), rows, cols);
}

}  // namespace

std::string serialize_checkpoint(const DistillState& state, std::uint64_t seed, const std::string& config_text) {
  const SyntheticSet& s = state.synth;
  const features::FeatureMap& f = state.map;
  json doc;
  doc["format"] = kCheckpointMagic;
  doc["version"] = kVersion;
  doc["seed"] = seed;
  doc["config"] = config_text;
  doc["synthetic"] = {{"ipc", s.ipc},
                      {"values", matrix_to_json(s.values)},
                      {"labels", std::vector<int>(s.labels.data(), s.labels.data() + s.labels.size())}};
  doc["sampler"] = {{"log_scales", matrix_to_json(state.sampler.log_scales())},
                    {"mixture_logits", vector_to_json(state.sampler.mixture_logits())},
                    {"log_scale_lower", bound_to_json(state.sampler.log_scale_lower())},
                    {"log_scale_upper", bound_to_json(state.sampler.log_scale_upper())}};
  doc["feature_map"] = {{"kind", features::to_string(f.kind)},
                        {"in_dim", f.in_dim},
                        {"hidden_dim", f.hidden_dim},
                        {"out_dim", f.out_dim},
                        {"beta", f.beta},
                        {"params", vector_to_json(f.params)},
                        {"init_checkpoint", vector_to_json(f.init_checkpoint)},
                        {"final_checkpoint", vector_to_json(f.final_checkpoint)}};
  return std::string(kCheckpointMagic) + "\n" + doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  const std::size_t eol = text.find('\n');
  const std::string magic = text.substr(0, eol);
  if (magic != kCheckpointMagic) {
    throw ParseError(std::string("checkpoint version mismatch: expected '") + kCheckpointMagic + "', found '" +
                     magic.substr(0, 16) + "'");
  }
  json doc;
  try {
    doc = json::parse(text.substr(eol == std::string::npos ? text.size() : eol + 1));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  try {
    Checkpoint cp;
    cp.seed = doc.at("seed").get<std::uint64_t>();
    cp.config_text = doc.at("config").get<std::string>();

    const json& js = doc.at("synthetic");
    cp.synth.ipc = js.at("ipc").get<std::size_t>();
    cp.synth.values = matrix_from_json(js.at("values"));
    const auto labels = js.at("labels").get<std::vector<int>>();
    cp.synth.labels = Eigen::Map<const IntVector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
    if (cp.synth.labels.size() != cp.synth.values.rows() || cp.synth.ipc == 0 ||
        cp.synth.values.rows() % static_cast<Eigen::Index>(cp.synth.ipc) != 0) {
      throw ParseError("checkpoint: synthetic labels/rows/ipc are inconsistent");
    }
    cp.synth.optimizer.first = Matrix::Zero(cp.synth.values.rows(), cp.synth.values.cols());
    cp.synth.optimizer.second = Matrix::Zero(cp.synth.values.rows(), cp.synth.values.cols());
    cp.synth.optimizer.steps.assign(static_cast<std::size_t>(cp.synth.num_classes()), 0);

    const json& jp = doc.at("sampler");
    cp.sampler = freqsampler::FreqSampler(matrix_from_json(jp.at("log_scales")), vector_from_json(jp.at("mixture_logits")));
    cp.sampler.set_log_scale_bounds(bound_from_json(jp.at("log_scale_lower"), -std::numeric_limits<double>::infinity()),
                                    bound_from_json(jp.at("log_scale_upper"), std::numeric_limits<double>::infinity()));

    const json& jf = doc.at("feature_map");
    cp.map.kind = features::feature_kind_from_string(jf.at("kind").get<std::string>());
    cp.map.in_dim = jf.at("in_dim").get<std::size_t>();
    cp.map.hidden_dim = jf.at("hidden_dim").get<std::size_t>();
    cp.map.out_dim = jf.at("out_dim").get<std::size_t>();
    cp.map.beta = jf.at("beta").get<double>();
    cp.map.params = vector_from_json(jf.at("params"));
    cp.map.init_checkpoint = vector_from_json(jf.at("init_checkpoint"));
    cp.map.final_checkpoint = vector_from_json(jf.at("final_checkpoint"));
    features::validate(cp.map);
    return cp;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  } catch (const Error& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const DistillState& state, std::uint64_t seed,
                     const std::string& config_text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out << serialize_checkpoint(state, seed, config_text);
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write train log '" + path.string() + "'");
  out << "iteration,class_id,cfd_total,amp_term,phase_term,sampler_scale_rms,sampler_scale_max,wall_seconds\n";
  out.precision(17);
  for (const LogRecord& r : log) {
    out << r.iteration << ',' << r.class_id << ',' << r.cfd_total << ',' << r.amp_term << ',' << r.phase_term << ','
        << r.sampler_scale_rms << ',' << r.sampler_scale_max << ',' << r.wall_seconds << '\n';
  }
  if (!out) throw IoError("failed writing train log '" + path.string() + "'");
}

std::vector<double> per_iteration_cfd(const TrainLog& log) {
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  for (const LogRecord& r : log) {
    if (r.iteration >= sums.size()) {
      sums.resize(r.iteration + 1, 0.0);
      counts.resize(r.iteration + 1, 0);
    }
    sums[r.iteration] += r.cfd_total;
    ++counts[r.iteration];
  }
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (counts[i]) sums[i] /= static_cast<double>(counts[i]);
  }
  return sums;
}

}  // namespace ncfm::distill
