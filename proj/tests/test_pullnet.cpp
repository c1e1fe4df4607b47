#include "poincare/pullnet.hpp"
#include "poincare/sampler.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace poincare;

namespace {

double central_difference(const Mlp& base, const Matrix& in, const Matrix& target,
                          std::size_t k, double h) {
  Mlp net = base;
  Vector p = base.parameters();
  const double orig = p(k);
  p(k) = orig + h;
  net.set_parameters(p);
  const double up = net.loss(in, target);
  p(k) = orig - h;
  net.set_parameters(p);
  const double down = net.loss(in, target);
  return (up - down) / (2.0 * h);
}

double max_gradient_error(Activation act, std::uint64_t seed) {
  Mlp net({3, 8, 8, 3}, {act, act, Activation::identity}, seed);
  Rng rng(seed + 1);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix in(3, 5), target(3, 5);
  for (long i = 0; i < in.size(); ++i) {
    in(i) = g(rng);
    target(i) = g(rng);
  }
  // Nonzero biases so every gradient component is exercised.
  for (std::size_t k = 0; k < net.layer_count(); ++k)
    for (long i = 0; i < net.bias(k).size(); ++i) net.bias(k)(i) = 0.3 * g(rng);
  Vector grad = Vector::Zero(static_cast<long>(net.parameter_count()));
  net.loss(in, target, &grad);
  double worst = 0.0;
  for (std::size_t k = 0; k < net.parameter_count(); ++k) {
    const double fd = central_difference(net, in, target, k, 1e-5);
    const double rel = std::abs(fd - grad(static_cast<long>(k))) /
                       std::max(1e-6, std::abs(fd) + std::abs(grad(static_cast<long>(k))));
    worst = std::max(worst, rel);
  }
  return worst;
}

PointCloud circle_points(long n) {
  PointCloud p(n, 2);
  for (long i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * double(i) / double(n);
    p(i, 0) = std::cos(a);
    p(i, 1) = std::sin(a);
  }
  return p;
}

TrainConfig small_config(double L, int steps) {
  TrainConfig cfg;
  cfg.L = L;
  cfg.steps = steps;
  cfg.batch = 128;
  cfg.hidden = {32, 32};
  cfg.seed = 17;
  cfg.eval_points = 2000;
  return cfg;
}

double mean_radius_error(const Mlp& net, double L, std::uint64_t seed) {
  Rng rng(seed);
  const PointCloud c = circle_points(400);
  double total = 0.0;
  for (long i = 0; i < c.rows(); ++i) {
    const Vector y = walk(c.row(i).transpose(), L, rng);
    total += std::abs(net.forward(y).norm() - 1.0);
  }
  return total / double(c.rows());
}

}  // namespace

TEST_CASE("backpropagation matches central finite differences") {
  CHECK(max_gradient_error(Activation::tanh, 1) < 1e-4);
  CHECK(max_gradient_error(Activation::softplus, 2) < 1e-4);
}

TEST_CASE("activation names round trip") {
  for (Activation a : {Activation::tanh, Activation::softplus, Activation::identity})
    CHECK(activation_from_name(activation_name(a)) == a);
  CHECK_THROWS_AS(activation_from_name("relu6"), ConfigError);
}

TEST_CASE("zero weights give the bias as constant output") {
  Mlp net({2, 4, 2}, {Activation::tanh, Activation::identity}, 3);
  for (std::size_t k = 0; k < net.layer_count(); ++k) net.weight(k).setZero();
  net.bias(1) << 0.25, -0.5;
  Vector a(2), b(2);
  a << 1.0, 2.0;
  b << -3.0, 0.1;
  CHECK((net.forward(a) - net.bias(1)).norm() == 0.0);
  CHECK((net.forward(b) - net.bias(1)).norm() == 0.0);
}

TEST_CASE("parameters round trip through the flat vector and JSON") {
  Mlp net({3, 5, 3}, {Activation::softplus, Activation::identity}, 9);
  Vector p = net.parameters();
  Mlp other({3, 5, 3}, {Activation::softplus, Activation::identity}, 10);
  other.set_parameters(p);
  CHECK((other.parameters() - p).norm() == 0.0);
  const Mlp r = Mlp::from_json(net.to_json());
  CHECK((r.parameters() - p).norm() == 0.0);
  CHECK(r.activations() == net.activations());
}

TEST_CASE("walk at L = 0 is the identity") {
  Rng rng(1);
  Vector x(3);
  x << 1.0, -2.0, 0.5;
  CHECK((walk(x, 0.0, rng) - x).norm() == 0.0);
}

TEST_CASE("walk displacement follows the chi-square moments") {
  const int N = 4;
  const int draws = 10000;
  const double L = 0.1;
  Rng rng(7);
  const Vector x = Vector::Zero(N);
  double mean = 0.0;
  for (int i = 0; i < draws; ++i) mean += (walk(x, L, rng) - x).squaredNorm() / N;
  mean /= draws;
  CHECK(std::abs(mean - L * L) < 3.0 * L * L * std::sqrt(2.0 / (double(draws) * N)));
}

TEST_CASE("walk is reproducible for a fixed seed") {
  Rng a(5), b(5);
  const Vector x = Vector::Ones(6);
  CHECK((walk(x, 0.3, a) - walk(x, 0.3, b)).norm() == 0.0);
}

TEST_CASE("training is bitwise reproducible") {
  const PointCloud c = circle_points(500);
  const TrainConfig cfg = small_config(0.1, 200);
  const PullNetwork a = train_pull(c, cfg);
  const PullNetwork b = train_pull(c, cfg);
  CHECK((a.mlp.parameters() - b.mlp.parameters()).norm() == 0.0);
  CHECK(a.losses.train == b.losses.train);
  CHECK(a.losses.test == b.losses.test);
}

TEST_CASE("odd/even split alternates rows") {
  PointCloud p(5, 1);
  p << 0, 1, 2, 3, 4;
  PointCloud odd, even;
  split_odd_even(p, odd, even);
  REQUIRE(odd.rows() == 2);
  REQUIRE(even.rows() == 3);
  CHECK(odd(0, 0) == 1.0);
  CHECK(odd(1, 0) == 3.0);
  CHECK(even(2, 0) == 4.0);
}

TEST_CASE("trained circle pull maps radius 1.1 back onto the circle") {
  const PointCloud c = circle_points(2000);
  const PullNetwork net = train_pull(c, small_config(0.1, 3000));
  double worst = 0.0;
  for (int k = 0; k < 16; ++k) {
    const double a = 2.0 * std::numbers::pi * (k + 0.5) / 16.0;
    Vector y(2);
    y << 1.1 * std::cos(a), 1.1 * std::sin(a);
    worst = std::max(worst, std::abs(pull(net, y).norm() - 1.0));
  }
  CHECK(worst < 0.02);
  // Points on the manifold move by at most a few loss standard deviations.
  for (long i = 0; i < c.rows(); i += 100) {
    const Vector x = c.row(i).transpose();
    CHECK((pull(net, x) - x).norm() <= 3.0 * std::sqrt(net.losses.train * 2.0));
  }
}

TEST_CASE("zero-noise training approaches the identity on the data") {
  const PointCloud c = circle_points(400);
  const PullNetwork net = train_pull(c, small_config(0.0, 2000));
  for (long i = 0; i < c.rows(); i += 40) {
    const Vector x = c.row(i).transpose();
    CHECK((pull(net, x) - x).norm() <= 3.0 * std::sqrt(net.losses.train * 2.0));
  }
}

TEST_CASE("circle residual radius error decreases over 500-step windows") {
  const PointCloud c = circle_points(2000);
  PointCloud odd, even;
  split_odd_even(c, odd, even);
  TrainConfig cfg = small_config(0.1, 500);
  Mlp net({2, 32, 32, 2}, {Activation::tanh, Activation::tanh, Activation::identity}, cfg.seed);
  double previous = mean_radius_error(net, cfg.L, 99);
  for (int window = 0; window < 4; ++window) {
    cfg.seed = derive_seed(17, window);
    train_denoiser(net, odd, even, cfg);
    const double err = mean_radius_error(net, cfg.L, 99);
    CAPTURE(window);
    CHECK(err < previous);
    previous = err;
  }
}

TEST_CASE("network checkpoints round trip") {
  const PullNetwork net = train_pull(circle_points(200), small_config(0.2, 20));
  const auto path = std::filesystem::temp_directory_path() / "poincare_net_test.json";
  save_network(net, path.string());
  const PullNetwork r = load_network(path.string());
  CHECK((r.mlp.parameters() - net.mlp.parameters()).norm() == 0.0);
  CHECK(r.L == net.L);
  CHECK(r.seed == net.seed);
  CHECK(r.losses.train == net.losses.train);
  std::filesystem::remove(path);
}

TEST_CASE("training config is validated") {
  TrainConfig cfg;
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.steps = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.L = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("small-scale step budget grows like 1/L up to its cap") {
  TrainConfig cfg;
  cfg.steps = 100;
  cfg.L = 0.01;
  CHECK(cfg.steps_for_L() == 100);
  cfg.small_L_ref = 0.1;
  cfg.small_L_max_steps = 5000;
  CHECK(cfg.steps_for_L() == 1000);
  cfg.L = 0.2;
  CHECK(cfg.steps_for_L() == 100);
  cfg.L = 1e-4;
  CHECK(cfg.steps_for_L() == 5000);
  cfg.small_L_max_steps = 10;
  CHECK(cfg.steps_for_L() == 100);
  cfg.small_L_ref = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("divergent training is reported with its step") {
  TrainConfig cfg = small_config(0.1, 50);
  cfg.lr = 1e300;
  try {
    train_pull(circle_points(100), cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() >= 0);
  }
}
