#pragma once

#include "poincare/common.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace poincare {

enum class Activation { tanh, softplus, identity };

std::string activation_name(Activation act);
Activation activation_from_name(const std::string& name);

/// Fully connected feed-forward network. Hidden layers use their own
/// activation; batches are passed column-wise (dim x batch).
class Mlp {
 public:
  Mlp() = default;
  /// `activations[k]` is applied after layer k (widths.size() - 1 layers).
  /// Weights are drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
  Mlp(std::vector<int> widths, std::vector<Activation> activations,
      std::uint64_t seed);

  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  const std::vector<int>& widths() const { return widths_; }
  const std::vector<Activation>& activations() const { return activations_; }
  std::size_t layer_count() const { return weights_.size(); }

  Matrix forward(const Matrix& batch) const;
  Vector forward(const Vector& x) const;

  /// Mean squared error over batch columns and output components, with
  /// optional gradient accumulation into `grad` (same layout as
  /// parameters()).
  double loss(const Matrix& input, const Matrix& target,
              Vector* grad = nullptr) const;

  std::size_t parameter_count() const;
  Vector parameters() const;
  void set_parameters(const Vector& flat);

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

  // Direct layer access, mainly for tests.
  Matrix& weight(std::size_t k) { return weights_[k]; }
  Vector& bias(std::size_t k) { return biases_[k]; }

 private:
  std::vector<int> widths_;
  std::vector<Activation> activations_;
  std::vector<Matrix> weights_;  // widths[k+1] x widths[k]
  std::vector<Vector> biases_;
};

/// Adam over a flat parameter vector.
class Adam {
 public:
  explicit Adam(std::size_t n, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step(Vector& params, const Vector& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  Vector m_, v_;
  long t_ = 0;
};

struct TrainConfig {
  double lr = 1e-3;
  int steps = 5000;
  int batch = 1024;
  double L = 0.1;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {256, 256};
  Activation activation = Activation::tanh;  // hidden layers; output is identity
  // Final losses are estimated on at most this many points per split.
  int eval_points = 16384;
  // When positive, networks for L below small_L_ref train for
  // steps * small_L_ref / L steps, capped at small_L_max_steps. The signal
  // separating the projection from the identity is O(L), so small scales
  // need a longer budget to resolve it.
  double small_L_ref = 0.0;
  int small_L_max_steps = 50000;

  /// Step budget after the small-L rule.
  int steps_for_L() const;

  void validate() const;
};

struct TrainLosses {
  double train = 0.0;
  double test = 0.0;
};

/// Denoising regression: each step draws a minibatch of training points x,
/// forms y = x + N(0, L^2 I), and takes one Adam step on |net(y) - x|^2.
/// With L = 0 this is plain reconstruction (autoencoder training).
/// Throws DivergenceError if the loss becomes non-finite.
TrainLosses train_denoiser(Mlp& net, const PointCloud& train,
                           const PointCloud& test, const TrainConfig& cfg);

/// Mean loss on a point set with fresh noise of scale L.
double evaluate_denoiser(const Mlp& net, const PointCloud& points, double L,
                         int max_points, Rng& rng);

/// Pull map P: R^N -> R^N trained at a single noise scale.
struct PullNetwork {
  Mlp mlp;
  double L = 0.0;
  std::uint64_t seed = 0;
  TrainLosses losses;

  int dimension() const { return mlp.input_dim(); }

  nlohmann::json to_json() const;
  static PullNetwork from_json(const nlohmann::json& j);
};

/// Trains on odd-indexed points, reports losses on odd (train) and even
/// (test) points.
PullNetwork train_pull(const PointCloud& points, const TrainConfig& cfg);

Vector pull(const PullNetwork& net, const Vector& y);
Matrix pull(const PullNetwork& net, const Matrix& batch);

/// Odd/even split used for training and testing.
void split_odd_even(const PointCloud& points, PointCloud& odd,
                    PointCloud& even);

void save_network(const PullNetwork& net, const std::string& path);
PullNetwork load_network(const std::string& path);

}  // namespace poincare
