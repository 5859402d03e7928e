#include "ncfm/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace ncfm::features {

namespace {

using ConstMatrixMap = Eigen::Map<const Matrix>;
using ConstVectorMap = Eigen::Map<const Vector>;
using MatrixMap = Eigen::Map<Matrix>;
using VectorMap = Eigen::Map<Vector>;

struct MlpView {
  ConstMatrixMap w1, w2;
  ConstVectorMap b1, b2;
};

MlpView mlp_view(const FeatureMap& map, const Vector& p) {
  const auto in = static_cast<Eigen::Index>(map.in_dim);
  const auto hid = static_cast<Eigen::Index>(map.hidden_dim);
  const auto out = static_cast<Eigen::Index>(map.out_dim);
  const double* base = p.data();
  return {ConstMatrixMap(base, in, hid), ConstMatrixMap(base + in * hid + hid, hid, out),
          ConstVectorMap(base + in * hid, hid), ConstVectorMap(base + in * hid + hid + hid * out, out)};
}

void check_inputs(const FeatureMap& map, const Matrix& inputs, const char* what) {
  if (static_cast<std::size_t>(inputs.cols()) != map.in_dim) {
    throw ShapeError(std::string(what) + ": inputs have " + std::to_string(inputs.cols()) +
                     " columns, feature map expects " + std::to_string(map.in_dim));
  }
}

Matrix affine(const Matrix& x, const ConstMatrixMap& w, const ConstVectorMap& b) {
  Matrix y = x * w;
  y.rowwise() += b.transpose();
  return y;
}

void fill_normal(double* out, std::size_t count, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (std::size_t i = 0; i < count; ++i) out[i] = normal(rng);
}

void set_checkpoints(FeatureMap& map) {
  map.init_checkpoint = map.params;
  map.final_checkpoint = map.params;
  map.beta = 1.0;
}

}  // namespace

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Identity: return "identity";
    case FeatureKind::RandomReluProjection: return "random-relu-projection";
    case FeatureKind::Mlp: return "mlp";
  }
  return "unknown";
}

FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "identity") return FeatureKind::Identity;
  if (s == "random-relu-projection") return FeatureKind::RandomReluProjection;
  if (s == "mlp") return FeatureKind::Mlp;
  throw ConfigError("unknown feature map kind '" + s + "'");
}

std::size_t param_count(FeatureKind kind, std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim) {
  switch (kind) {
    case FeatureKind::Identity: return 0;
    case FeatureKind::RandomReluProjection: return in_dim * out_dim + out_dim;
    case FeatureKind::Mlp: return in_dim * hidden_dim + hidden_dim + hidden_dim * out_dim + out_dim;
  }
  return 0;
}

std::size_t FeatureMap::param_count() const { return features::param_count(kind, in_dim, hidden_dim, out_dim); }

FeatureMap make_identity(std::size_t dim) {
  if (dim < 1) throw ArgumentError("identity map needs dim >= 1");
  FeatureMap map;
  map.kind = FeatureKind::Identity;
  map.in_dim = dim;
  map.out_dim = dim;
  return map;
}

FeatureMap make_random_relu_projection(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  if (in_dim < 1 || out_dim < 1) throw ArgumentError("projection dims must be >= 1");
  FeatureMap map;
  map.kind = FeatureKind::RandomReluProjection;
  map.in_dim = in_dim;
  map.out_dim = out_dim;
  map.params = Vector::Zero(static_cast<Eigen::Index>(map.param_count()));
  fill_normal(map.params.data(), in_dim * out_dim, std::sqrt(2.0 / static_cast<double>(in_dim)), rng);
  set_checkpoints(map);
  return map;
}

FeatureMap make_mlp(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim, Rng& rng) {
  if (in_dim < 1 || hidden_dim < 1 || out_dim < 1) throw ArgumentError("mlp dims must be >= 1");
  FeatureMap map;
  map.kind = FeatureKind::Mlp;
  map.in_dim = in_dim;
  map.hidden_dim = hidden_dim;
  map.out_dim = out_dim;
  map.params = Vector::Zero(static_cast<Eigen::Index>(map.param_count()));
  double* p = map.params.data();
  fill_normal(p, in_dim * hidden_dim, std::sqrt(2.0 / static_cast<double>(in_dim)), rng);
  fill_normal(p + in_dim * hidden_dim + hidden_dim, hidden_dim * out_dim,
              std::sqrt(2.0 / static_cast<double>(hidden_dim)), rng);
  set_checkpoints(map);
  return map;
}

void validate(const FeatureMap& map) {
  if (map.in_dim < 1 || map.out_dim < 1) throw StateError("feature map dims must be >= 1");
  const auto expected = static_cast<Eigen::Index>(map.param_count());
  if (map.kind == FeatureKind::Identity) {
    if (map.in_dim != map.out_dim) throw StateError("identity map requires out_dim == in_dim");
    if (map.params.size() != 0) throw StateError("identity map must have no parameters");
  }
  if (map.params.size() != expected) {
    throw StateError("feature map has " + std::to_string(map.params.size()) + " parameters, layout needs " +
                     std::to_string(expected));
  }
  if (map.init_checkpoint.size() != map.final_checkpoint.size()) {
    throw StateError("feature map checkpoints differ in length");
  }
  if (map.init_checkpoint.size() != 0 && map.init_checkpoint.size() != expected) {
    throw StateError("feature map checkpoints do not match the parameter layout");
  }
  if (!map.params.allFinite() || !map.init_checkpoint.allFinite() || !map.final_checkpoint.allFinite()) {
    throw StateError("feature map parameters must be finite");
  }
}

Matrix forward(const FeatureMap& map, const Matrix& inputs) {
  check_inputs(map, inputs, "forward");
  switch (map.kind) {
    case FeatureKind::Identity: return inputs;
    case FeatureKind::RandomReluProjection: {
      const auto in = static_cast<Eigen::Index>(map.in_dim);
      const auto out = static_cast<Eigen::Index>(map.out_dim);
      const ConstMatrixMap w(map.params.data(), in, out);
      const ConstVectorMap b(map.params.data() + in * out, out);
      return affine(inputs, w, b).cwiseMax(0.0);
    }
    case FeatureKind::Mlp: {
      const MlpView v = mlp_view(map, map.params);
      const Matrix hidden = affine(inputs, v.w1, v.b1).cwiseMax(0.0);
      return affine(hidden, v.w2, v.b2);
    }
  }
  throw StateError("unhandled feature kind");
}

Matrix vjp(const FeatureMap& map, const Matrix& inputs, const Matrix& cotangent) {
  check_inputs(map, inputs, "vjp");
  if (cotangent.rows() != inputs.rows() || static_cast<std::size_t>(cotangent.cols()) != map.out_dim) {
    throw ShapeError("vjp: cotangent is " + std::to_string(cotangent.rows()) + "x" +
                     std::to_string(cotangent.cols()) + ", forward output is " + std::to_string(inputs.rows()) +
                     "x" + std::to_string(map.out_dim));
  }
  switch (map.kind) {
    case FeatureKind::Identity: return cotangent;
    case FeatureKind::RandomReluProjection: {
      const auto in = static_cast<Eigen::Index>(map.in_dim);
      const auto out = static_cast<Eigen::Index>(map.out_dim);
      const ConstMatrixMap w(map.params.data(), in, out);
      const ConstVectorMap b(map.params.data() + in * out, out);
      const Matrix pre = affine(inputs, w, b);
      const Matrix masked = (pre.array() > 0.0).select(cotangent, 0.0);
      return masked * w.transpose();
    }
    case FeatureKind::Mlp: {
      const MlpView v = mlp_view(map, map.params);
      const Matrix pre = affine(inputs, v.w1, v.b1);
      const Matrix d_hidden = cotangent * v.w2.transpose();
      const Matrix d_pre = (pre.array() > 0.0).select(d_hidden, 0.0);
      return d_pre * v.w1.transpose();
    }
  }
  throw StateError("unhandled feature kind");
}

FeatureMap blend(const FeatureMap& map, double beta) {
  if (map.init_checkpoint.size() != map.final_checkpoint.size()) {
    throw StateError("cannot blend checkpoints of different lengths (" + std::to_string(map.init_checkpoint.size()) +
                     " vs " + std::to_string(map.final_checkpoint.size()) + ")");
  }
  FeatureMap out = map;
  out.beta = beta;
  out.params = (1.0 - beta) * map.init_checkpoint + beta * map.final_checkpoint;
  return out;
}

FeatureMap reblend(const FeatureMap& map, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return blend(map, unit(rng));
}

PretrainResult pretrain_final_checkpoint(const FeatureMap& map, const data::DataMatrix& data, std::size_t epochs,
                                         Rng& rng, const PretrainOptions& options) {
  if (map.kind != FeatureKind::Mlp) throw ArgumentError("pretraining requires an mlp feature map");
  if (!data.labeled()) throw ArgumentError("pretraining requires labeled data");
  validate(map);
  check_inputs(map, data.values, "pretrain");
  if (options.batch_size < 1) throw ArgumentError("pretrain batch_size must be >= 1");

  const auto in = static_cast<Eigen::Index>(map.in_dim);
  const auto hid = static_cast<Eigen::Index>(map.hidden_dim);
  const auto out = static_cast<Eigen::Index>(map.out_dim);
  const Eigen::Index classes = data.num_classes();

  Vector body = map.init_checkpoint.size() ? map.init_checkpoint : map.params;
  Matrix head_w(out, classes);
  fill_normal(head_w.data(), static_cast<std::size_t>(head_w.size()), std::sqrt(1.0 / static_cast<double>(out)), rng);
  Vector head_b = Vector::Zero(classes);

  const IntVector& labels = *data.labels;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.values.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  FeatureMap work = map;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      const auto bs = static_cast<Eigen::Index>(stop - start);
      Matrix x(bs, in);
      for (Eigen::Index r = 0; r < bs; ++r) x.row(r) = data.values.row(order[start + static_cast<std::size_t>(r)]);

      const MlpView v = mlp_view(work, body);
      const Matrix pre = affine(x, v.w1, v.b1);
      const Matrix hidden = pre.cwiseMax(0.0);
      const Matrix feat = affine(hidden, v.w2, v.b2);
      Matrix logits = feat * head_w;
      logits.rowwise() += head_b.transpose();

      // softmax cross-entropy gradient, averaged over the batch
      Matrix d_logits(bs, classes);
      for (Eigen::Index r = 0; r < bs; ++r) {
        const double top = logits.row(r).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(r).array() - top).exp().matrix();
        e /= e.sum();
        e(labels(order[start + static_cast<std::size_t>(r)])) -= 1.0;
        d_logits.row(r) = e / static_cast<double>(bs);
      }
      const Matrix d_feat = d_logits * head_w.transpose();
      const Matrix g_head_w = feat.transpose() * d_logits;
      const Vector g_head_b = d_logits.colwise().sum().transpose();
      const Matrix g_w2 = hidden.transpose() * d_feat;
      const Vector g_b2 = d_feat.colwise().sum().transpose();
      const Matrix d_pre = (pre.array() > 0.0).select(d_feat * v.w2.transpose(), 0.0);
      const Matrix g_w1 = x.transpose() * d_pre;
      const Vector g_b1 = d_pre.colwise().sum().transpose();

      const double lr = options.learning_rate;
      double* p = body.data();
      MatrixMap(p, in, hid) -= lr * g_w1;
      VectorMap(p + in * hid, hid) -= lr * g_b1;
      MatrixMap(p + in * hid + hid, hid, out) -= lr * g_w2;
      VectorMap(p + in * hid + hid + hid * out, out) -= lr * g_b2;
      head_w -= lr * g_head_w;
      head_b -= lr * g_head_b;
    }
    if (!body.allFinite() || !head_w.allFinite()) throw NumericError("pretraining diverged at epoch " + std::to_string(epoch));
  }

  PretrainResult result;
  result.map = map;
  result.map.init_checkpoint = map.init_checkpoint.size() ? map.init_checkpoint : map.params;
  result.map.final_checkpoint = body;
  result.map.params = body;
  result.map.beta = 1.0;

  const Matrix feat = forward(result.map, data.values);
  Matrix logits = feat * head_w;
  logits.rowwise() += head_b.transpose();
  Eigen::Index correct = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index arg = 0;
    logits.row(r).maxCoeff(&arg);
    if (arg == labels(r)) ++correct;
  }
  result.train_accuracy = static_cast<double>(correct) / static_cast<double>(logits.rows());
  return result;
}

}  // namespace ncfm::features
