#include "poincare/pullnet.hpp"

#include "poincare/io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace poincare {

using nlohmann::json;

namespace {

template <typename Dense>
void activate(Dense& z, Activation act) {
  if (act == Activation::tanh) {
    z = z.array().tanh().matrix();
  } else if (act == Activation::softplus) {
    // log(1 + e^z) without overflow.
    z = (z.array().max(0.0) + (-z.array().abs()).exp().log1p()).matrix();
  }
}

}  // namespace

std::string activation_name(Activation act) {
  switch (act) {
    case Activation::tanh: return "tanh";
    case Activation::softplus: return "softplus";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "softplus") return Activation::softplus;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + name + "'");
}

Mlp::Mlp(std::vector<int> widths, std::vector<Activation> activations,
         std::uint64_t seed)
    : widths_(std::move(widths)), activations_(std::move(activations)) {
  if (widths_.size() < 2) throw ConfigError("Mlp: need at least two widths");
  if (activations_.size() != widths_.size() - 1) {
    throw ConfigError("Mlp: one activation per layer required");
  }
  for (int w : widths_) {
    if (w < 1) throw ConfigError("Mlp: widths must be positive");
  }
  Rng rng(seed);
  for (std::size_t k = 0; k + 1 < widths_.size(); ++k) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[k]));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    Matrix w(widths_[k + 1], widths_[k]);
    for (long j = 0; j < w.cols(); ++j) {
      for (long i = 0; i < w.rows(); ++i) w(i, j) = uniform(rng);
    }
    weights_.push_back(std::move(w));
    biases_.push_back(Vector::Zero(widths_[k + 1]));
  }
}

Matrix Mlp::forward(const Matrix& batch) const {
  if (batch.rows() != input_dim()) {
    throw DimensionError("Mlp::forward: expected input dimension " +
                         std::to_string(input_dim()) + ", got " +
                         std::to_string(batch.rows()));
  }
  Matrix a = batch;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    Matrix z = weights_[k] * a;
    z.colwise() += biases_[k];
    activate(z, activations_[k]);
    a = std::move(z);
  }
  return a;
}

Vector Mlp::forward(const Vector& x) const {
  if (x.size() != input_dim()) {
    throw DimensionError("Mlp::forward: expected input dimension " +
                         std::to_string(input_dim()) + ", got " +
                         std::to_string(x.size()));
  }
  Vector a = x;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    Vector z = weights_[k] * a + biases_[k];
    activate(z, activations_[k]);
    a = std::move(z);
  }
  return a;
}

double Mlp::loss(const Matrix& input, const Matrix& target,
                 Vector* grad) const {
  if (input.rows() != input_dim() || target.rows() != output_dim() ||
      input.cols() != target.cols()) {
    throw DimensionError("Mlp::loss: batch shape mismatch");
  }
  const std::size_t layers = weights_.size();
  std::vector<Matrix> acts;  // acts[k] is the input of layer k
  acts.reserve(layers + 1);
  acts.push_back(input);
  for (std::size_t k = 0; k < layers; ++k) {
    Matrix z = weights_[k] * acts.back();
    z.colwise() += biases_[k];
    activate(z, activations_[k]);
    acts.push_back(std::move(z));
  }
  const Matrix diff = acts.back() - target;
  const double scale = 1.0 / static_cast<double>(diff.size());
  const double value = diff.squaredNorm() * scale;
  if (!grad) return value;

  grad->resize(static_cast<long>(parameter_count()));
  // Offsets of each layer's block in the flat layout.
  std::vector<long> offsets(layers);
  long offset = 0;
  for (std::size_t k = 0; k < layers; ++k) {
    offsets[k] = offset;
    offset += weights_[k].size() + biases_[k].size();
  }

  Matrix delta = (2.0 * scale) * diff;  // dLoss / d(layer output)
  for (std::size_t k = layers; k-- > 0;) {
    if (activations_[k] == Activation::tanh) {
      delta.array() *= 1.0 - acts[k + 1].array().square();
    } else if (activations_[k] == Activation::softplus) {
      // sigmoid(z) = 1 - exp(-softplus(z))
      delta.array() *= 1.0 - (-acts[k + 1].array()).exp();
    }
    const long w_size = weights_[k].size();
    Eigen::Map<Matrix> gw(grad->data() + offsets[k], weights_[k].rows(),
                          weights_[k].cols());
    gw.noalias() = delta * acts[k].transpose();
    grad->segment(offsets[k] + w_size, biases_[k].size()) =
        delta.rowwise().sum();
    if (k > 0) delta = weights_[k].transpose() * delta;
  }
  return value;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    n += static_cast<std::size_t>(weights_[k].size() + biases_[k].size());
  }
  return n;
}

Vector Mlp::parameters() const {
  Vector flat(static_cast<long>(parameter_count()));
  long offset = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    flat.segment(offset, weights_[k].size()) =
        Eigen::Map<const Vector>(weights_[k].data(), weights_[k].size());
    offset += weights_[k].size();
    flat.segment(offset, biases_[k].size()) = biases_[k];
    offset += biases_[k].size();
  }
  return flat;
}

void Mlp::set_parameters(const Vector& flat) {
  if (flat.size() != static_cast<long>(parameter_count())) {
    throw DimensionError("Mlp::set_parameters: size mismatch");
  }
  long offset = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    Eigen::Map<Vector>(weights_[k].data(), weights_[k].size()) =
        flat.segment(offset, weights_[k].size());
    offset += weights_[k].size();
    biases_[k] = flat.segment(offset, biases_[k].size());
    offset += biases_[k].size();
  }
}

json Mlp::to_json() const {
  json j;
  j["widths"] = widths_;
  json acts = json::array();
  for (auto a : activations_) acts.push_back(activation_name(a));
  j["activations"] = acts;
  json layers = json::array();
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    layers.push_back({{"weight", to_json_matrix(weights_[k])},
                      {"bias", to_json_vector(biases_[k])}});
  }
  j["layers"] = layers;
  return j;
}

Mlp Mlp::from_json(const json& j) {
  Mlp net;
  net.widths_ = j.at("widths").get<std::vector<int>>();
  for (const auto& a : j.at("activations")) {
    net.activations_.push_back(activation_from_name(a.get<std::string>()));
  }
  const auto& layers = j.at("layers");
  if (layers.size() + 1 != net.widths_.size() ||
      net.activations_.size() != layers.size()) {
    throw Error("network checkpoint: inconsistent layer count");
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Matrix w = from_json_matrix(layers[k].at("weight"));
    Vector b = from_json_vector(layers[k].at("bias"));
    if (w.rows() != net.widths_[k + 1] || w.cols() != net.widths_[k] ||
        b.size() != net.widths_[k + 1]) {
      throw Error("network checkpoint: layer " + std::to_string(k) +
                  " has the wrong shape");
    }
    net.weights_.push_back(std::move(w));
    net.biases_.push_back(std::move(b));
  }
  return net;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      m_(Vector::Zero(static_cast<long>(n))),
      v_(Vector::Zero(static_cast<long>(n))) {}

void Adam::step(Vector& params, const Vector& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) /
                    ((v_.array() / c2).sqrt() + eps_);
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train: lr must be > 0");
  if (!(small_L_ref >= 0.0)) throw ConfigError("train: small_L_ref must be >= 0");
  if (small_L_max_steps < 1) throw ConfigError("train: small_L_max_steps must be >= 1");
  if (steps < 1) throw ConfigError("train: steps must be >= 1");
  if (batch < 1) throw ConfigError("train: batch must be >= 1");
  if (!(L >= 0.0)) throw ConfigError("train: L must be >= 0");
  if (eval_points < 1) throw ConfigError("train: eval_points must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("train: hidden widths must be positive");
  }
}

int TrainConfig::steps_for_L() const {
  if (!(small_L_ref > 0.0) || L >= small_L_ref) return steps;
  if (L <= 0.0) return std::max(steps, small_L_max_steps);
  const double scaled = static_cast<double>(steps) * small_L_ref / L;
  return std::max(steps, static_cast<int>(std::min<double>(scaled, small_L_max_steps)));
}

void split_odd_even(const PointCloud& points, PointCloud& odd,
                    PointCloud& even) {
  const long n = points.rows();
  odd.resize(n / 2, points.cols());
  even.resize((n + 1) / 2, points.cols());
  for (long i = 0; i < n; ++i) {
    if (i % 2) {
      odd.row(i / 2) = points.row(i);
    } else {
      even.row(i / 2) = points.row(i);
    }
  }
}

double evaluate_denoiser(const Mlp& net, const PointCloud& points, double L,
                         int max_points, Rng& rng) {
  const long n = points.rows();
  const long m = std::min<long>(n, max_points);
  // Evenly strided subset keeps the estimate deterministic and spread out.
  Matrix clean(points.cols(), m);
  for (long k = 0; k < m; ++k) {
    clean.col(k) = points.row(k * n / m).transpose();
  }
  Matrix noisy = clean;
  if (L > 0.0) {
    std::normal_distribution<double> normal(0.0, L);
    for (long k = 0; k < noisy.size(); ++k) noisy.data()[k] += normal(rng);
  }
  // Chunk to bound memory on large sets.
  constexpr long kChunk = 4096;
  double total = 0.0;
  for (long start = 0; start < m; start += kChunk) {
    const long len = std::min(kChunk, m - start);
    total += net.loss(noisy.middleCols(start, len),
                      clean.middleCols(start, len)) *
             static_cast<double>(len);
  }
  return total / static_cast<double>(m);
}

TrainLosses train_denoiser(Mlp& net, const PointCloud& train,
                           const PointCloud& test, const TrainConfig& cfg) {
  cfg.validate();
  if (train.rows() < 1 || test.rows() < 1) {
    throw InsufficientDataError("train: empty train or test split");
  }
  const long dim = train.cols();
  if (dim != net.input_dim() || net.output_dim() != dim) {
    throw DimensionError("train: network does not match data dimension");
  }
  Rng rng(derive_seed(cfg.seed, 1));
  std::uniform_int_distribution<long> pick(0, train.rows() - 1);
  std::normal_distribution<double> normal(0.0, cfg.L > 0.0 ? cfg.L : 1.0);

  const long batch = std::min<long>(cfg.batch, train.rows());
  Matrix clean(dim, batch), noisy(dim, batch);
  Vector params = net.parameters();
  Vector grad;
  Adam adam(net.parameter_count(), cfg.lr);

  const int steps = cfg.steps_for_L();
  for (int step = 0; step < steps; ++step) {
    for (long b = 0; b < batch; ++b) clean.col(b) = train.row(pick(rng));
    noisy = clean;
    if (cfg.L > 0.0) {
      for (long k = 0; k < noisy.size(); ++k) noisy.data()[k] += normal(rng);
    }
    const double value = net.loss(noisy, clean, &grad);
    if (!std::isfinite(value) || !grad.allFinite()) {
      throw DivergenceError(
          "training diverged at step " + std::to_string(step), step);
    }
    adam.step(params, grad);
    net.set_parameters(params);
  }

  Rng eval_rng(derive_seed(cfg.seed, 2));
  TrainLosses losses;
  losses.train =
      evaluate_denoiser(net, train, cfg.L, cfg.eval_points, eval_rng);
  losses.test =
      evaluate_denoiser(net, test, cfg.L, cfg.eval_points, eval_rng);
  if (!std::isfinite(losses.train) || !std::isfinite(losses.test)) {
    throw DivergenceError("final loss is not finite", steps);
  }
  return losses;
}

PullNetwork train_pull(const PointCloud& points, const TrainConfig& cfg) {
  if (points.rows() < 2) {
    throw InsufficientDataError("train_pull: need at least 2 points");
  }
  cfg.validate();
  PointCloud odd, even;
  split_odd_even(points, odd, even);

  const int dim = static_cast<int>(points.cols());
  std::vector<int> widths{dim};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(dim);
  std::vector<Activation> acts(widths.size() - 1, cfg.activation);
  acts.back() = Activation::identity;

  PullNetwork net;
  net.mlp = Mlp(widths, acts, derive_seed(cfg.seed, 0));
  net.L = cfg.L;
  net.seed = cfg.seed;
  net.losses = train_denoiser(net.mlp, odd, even, cfg);
  return net;
}

Vector pull(const PullNetwork& net, const Vector& y) {
  return net.mlp.forward(y);
}

Matrix pull(const PullNetwork& net, const Matrix& batch) {
  return net.mlp.forward(batch);
}

json PullNetwork::to_json() const {
  json j;
  j["mlp"] = mlp.to_json();
  j["L"] = L;
  j["seed"] = seed;
  j["train_loss"] = losses.train;
  j["test_loss"] = losses.test;
  return j;
}

PullNetwork PullNetwork::from_json(const json& j) {
  PullNetwork net;
  net.mlp = Mlp::from_json(j.at("mlp"));
  net.L = j.at("L").get<double>();
  net.seed = j.at("seed").get<std::uint64_t>();
  net.losses.train = j.at("train_loss").get<double>();
  net.losses.test = j.at("test_loss").get<double>();
  return net;
}

void save_network(const PullNetwork& net, const std::string& path) {
  write_json_file(net.to_json(), path);
}

PullNetwork load_network(const std::string& path) {
  return PullNetwork::from_json(read_json_file(path));
}

}  // namespace poincare
