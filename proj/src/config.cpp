#include "ncfm/config.hpp"

#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace ncfm::config {

using nlohmann::json;

namespace {

// Reads typed keys from one JSON object and rejects keys never asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& sub(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    const std::string where = key_path(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(where + ": expected a number");
      out = v.get<double>();
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw ConfigError(where + ": expected a non-negative integer");
      out = v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string> || std::is_same_v<T, std::filesystem::path>) {
      if (!v.is_string()) throw ConfigError(where + ": expected a string");
      out = v.get<std::string>();
    } else {
      try {
        out = v.get<T>();
      } catch (const json::exception&) {
        throw ConfigError(where + ": wrong value type");
      }
    }
  }

  // A number, or null for an unbounded value.
  void read_bound(const std::string& key, double& out, double unbounded) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (v.is_null()) {
      out = unbounded;
    } else if (v.is_number()) {
      out = v.get<double>();
    } else {
      throw ConfigError(key_path(key) + ": expected a number or null");
    }
  }

  template <typename Enum, typename Parse>
  void read_enum(const std::string& key, Enum& out, Parse parse) {
    std::string name;
    read(key, name);
    if (!j_.contains(key)) return;
    try {
      out = parse(name);
    } catch (const ConfigError& e) {
      throw ConfigError(key_path(key) + ": " + e.what());
    }
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown key '" + key_path(item.key()) + "'");
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_dataset(Section s, DatasetSection& out) {
  data::DatasetSpec& spec = out.spec;
  s.read_enum("kind", spec.kind, data::dataset_kind_from_string);
  s.read("n_per_class", out.n_per_class);
  s.read("means", spec.means);
  s.read("scales", spec.scales);
  s.read("covariances", spec.covariances);
  s.read("noise", spec.noise);
  s.read("rings_classes", spec.rings_classes);
  s.read("ring_spacing", spec.ring_spacing);
  s.read("path", spec.path);
  s.read("labels_path", spec.labels_path);
  s.read("csv_header", spec.csv_header);
  s.read("csv_label_column", spec.csv_label_column);
  s.read("seed", spec.seed);
  s.finish();
  if (out.n_per_class < 1) throw ConfigError("dataset.n_per_class must be >= 1");
  data::validate(spec);
}

void read_distill(Section s, distill::DistillConfig& c) {
  s.read("iterations", c.iterations);
  s.read("q_freqs", c.q_freqs);
  s.read("alpha", c.alpha);
  s.read("epsilon_sqrt", c.epsilon_sqrt);
  s.read("lr_synth", c.lr_synth);
  s.read("lr_sampler", c.lr_sampler);
  s.read("max_steps_per_iter", c.max_steps_per_iter);
  s.read("min_steps_per_iter", c.min_steps_per_iter);
  s.read("sampler_enabled", c.sampler_enabled);
  s.read("reblend_each_iter", c.reblend_each_iter);
  s.read("batch_real", c.batch_real);
  s.read("full_real_batch", c.full_real_batch);
  s.read("seed", c.seed);
  s.read("ipc", c.ipc);
  s.read_enum("init", c.init, distill::init_strategy_from_string);
  s.read("init_noise_variance", c.init_noise_variance);
  s.read("sampler_components", c.sampler_components);
  s.read("sampler_init_scale", c.sampler_init_scale);
  s.read_bound("log_scale_min", c.log_scale_min, -std::numeric_limits<double>::infinity());
  s.read_bound("log_scale_max", c.log_scale_max, std::numeric_limits<double>::infinity());
  s.read("resample_freqs_for_min", c.resample_freqs_for_min);
  s.read("random_class_order", c.random_class_order);
  s.read("adam_beta1", c.adam_beta1);
  s.read("adam_beta2", c.adam_beta2);
  s.read("adam_epsilon", c.adam_epsilon);
  s.read("weight_decay", c.weight_decay);
  s.read("grad_clip", c.grad_clip);
  s.read("strict", c.exec.strict);
  s.read("threads", c.exec.threads);
  s.finish();
  distill::validate(c);
}

void read_features(Section s, distill::FeatureConfig& f) {
  s.read_enum("kind", f.kind, features::feature_kind_from_string);
  s.read("hidden_dim", f.hidden_dim);
  s.read("out_dim", f.out_dim);
  s.read("pretrain_epochs", f.pretrain_epochs);
  s.read("pretrain_learning_rate", f.pretrain_learning_rate);
  s.read("pretrain_batch_size", f.pretrain_batch_size);
  s.finish();
  if (f.kind != features::FeatureKind::Identity && f.out_dim < 1) throw ConfigError("features.out_dim must be >= 1");
  if (f.kind == features::FeatureKind::Mlp && f.hidden_dim < 1) throw ConfigError("features.hidden_dim must be >= 1");
  if (f.pretrain_epochs > 0 && f.kind != features::FeatureKind::Mlp) {
    throw ConfigError("features.pretrain_epochs requires kind 'mlp'");
  }
  if (!(f.pretrain_learning_rate > 0.0)) throw ConfigError("features.pretrain_learning_rate must be > 0");
  if (f.pretrain_batch_size < 1) throw ConfigError("features.pretrain_batch_size must be >= 1");
}

void read_eval(Section s, EvalSection& e) {
  s.read_enum("classifier", e.classifier, eval::classifier_kind_from_string);
  s.read("seeds", e.seeds);
  s.read("logistic_iterations", e.logistic.iterations);
  s.read("logistic_learning_rate", e.logistic.learning_rate);
  s.read("logistic_l2", e.logistic.l2);
  s.read("logistic_init_scale", e.logistic.init_scale);
  s.read("test_n_per_class", e.test_n_per_class);
  s.read("test_seed", e.test_seed);
  s.read("test_path", e.test_path);
  s.read("test_labels_path", e.test_labels_path);
  s.finish();
  if (e.seeds.empty()) throw ConfigError("eval.seeds must not be empty");
  if (e.test_n_per_class < 1) throw ConfigError("eval.test_n_per_class must be >= 1");
  if (!(e.logistic.learning_rate > 0.0)) throw ConfigError("eval.logistic_learning_rate must be > 0");
  if (!(e.logistic.l2 >= 0.0)) throw ConfigError("eval.logistic_l2 must be >= 0");
  if (!(e.logistic.init_scale >= 0.0)) throw ConfigError("eval.logistic_init_scale must be >= 0");
}

void check_sizes(const std::vector<std::size_t>& sizes, const char* key) {
  if (sizes.size() < 2) throw ConfigError(std::string(key) + " needs at least two sizes");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1 || (i > 0 && sizes[i] <= sizes[i - 1])) {
      throw ConfigError(std::string(key) + " must be positive and strictly increasing");
    }
  }
}

void read_bench(Section s, BenchSection& b) {
  s.read("cfd_sizes", b.cfd_sizes);
  s.read("mmd_sizes", b.mmd_sizes);
  s.read("q", b.options.q);
  s.read("dim", b.options.dim);
  s.read("repeats", b.options.repeats);
  s.read("min_seconds", b.options.min_seconds);
  s.read("seed", b.options.seed);
  s.finish();
  check_sizes(b.cfd_sizes, "bench.cfd_sizes");
  check_sizes(b.mmd_sizes, "bench.mmd_sizes");
  if (b.options.q < 1 || b.options.dim < 1 || b.options.repeats < 1) {
    throw ConfigError("bench.q, bench.dim and bench.repeats must be >= 1");
  }
  if (!(b.options.min_seconds >= 0.0)) throw ConfigError("bench.min_seconds must be >= 0");
}

std::string position(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

}  // namespace

data::DatasetSpec default_dataset_spec() {
  data::DatasetSpec spec;
  spec.means = {{0.0, 0.0}, {4.0, 0.0}, {0.0, 4.0}};
  spec.scales = {1.0};
  return spec;
}

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string what = e.what();
    const auto colon = what.rfind(": ");
    throw ConfigError("config syntax error at " + position(text, e.byte) + ": " +
                      (colon == std::string::npos ? what : what.substr(colon + 2)));
  }
  RunConfig config;
  Section root(doc, "");
  root.read("output_dir", config.output_dir);
  if (root.has("dataset")) read_dataset(Section(root.sub("dataset"), "dataset"), config.dataset);
  else data::validate(config.dataset.spec);
  if (root.has("distill")) read_distill(Section(root.sub("distill"), "distill"), config.distill);
  if (root.has("features")) read_features(Section(root.sub("features"), "features"), config.features);
  if (root.has("eval")) read_eval(Section(root.sub("eval"), "eval"), config.eval);
  if (root.has("bench")) read_bench(Section(root.sub("bench"), "bench"), config.bench);
  root.finish();
  if (config.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  return config;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path resolve_output_dir(const std::filesystem::path& dir) {
  const char* root = std::getenv("NCFM_OUTPUT_ROOT");
  if (root == nullptr || *root == '\0' || dir.is_absolute()) return dir;
  return std::filesystem::path(root) / dir;
}

data::DataMatrix training_data(const RunConfig& config) {
  return data::generate(config.dataset.spec, config.dataset.n_per_class);
}

data::DataMatrix test_data(const RunConfig& config) {
  const data::DatasetSpec& spec = config.dataset.spec;
  const EvalSection& e = config.eval;
  switch (spec.kind) {
    case data::DatasetKind::CsvFile:
      if (e.test_path.empty()) throw ConfigError("eval.test_path is required for file datasets");
      return data::load_csv(e.test_path, {spec.csv_header, spec.csv_label_column});
    case data::DatasetKind::IdxImageFile:
      if (e.test_path.empty()) throw ConfigError("eval.test_path is required for file datasets");
      return data::load_idx(e.test_path, e.test_labels_path.empty()
                                             ? std::nullopt
                                             : std::optional<std::filesystem::path>(e.test_labels_path));
    default: {
      data::DatasetSpec test_spec = spec;
      test_spec.seed = e.test_seed;
      return data::generate(test_spec, e.test_n_per_class);
    }
  }
}

}  // namespace ncfm::config
