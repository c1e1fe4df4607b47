#include "poincare/baselines.hpp"

#include "poincare/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace poincare {

int global_pca_dim(const PointCloud& points, double eps_p) {
  const WhitenModel model = fit_whiten(points, eps_p, true);
  return model.input_dim() - static_cast<int>(model.removed.size());
}

nlohmann::json AutoencoderResult::to_json() const {
  nlohmann::json j;
  j["dimension"] = dimension;
  j["threshold_met"] = threshold_met;
  j["widths"] = widths;
  j["test_error"] = test_error;
  j["envelope"] = envelope;
  return j;
}

AutoencoderResult autoencoder_dim(const PointCloud& points,
                                  const std::vector<int>& bottlenecks,
                                  const AutoencoderConfig& cfg) {
  const int dim = static_cast<int>(points.cols());
  if (bottlenecks.empty()) throw ConfigError("autoencoder: no bottleneck widths");
  if (!std::is_sorted(bottlenecks.begin(), bottlenecks.end())) {
    throw ConfigError("autoencoder: bottleneck widths must be ascending");
  }
  for (int s : bottlenecks) {
    if (s < 1 || s > dim) {
      throw ConfigError("autoencoder: widths must lie in [1, N]");
    }
  }
  if (cfg.restarts < 1) throw ConfigError("autoencoder: restarts must be >= 1");
  if (points.rows() < 2) throw InsufficientDataError("autoencoder: need 2 points");

  PointCloud odd, even;
  split_odd_even(points, odd, even);
  TrainConfig train = cfg.train;
  train.L = 0.0;
  train.small_L_ref = 0.0;
  const std::vector<int> hidden =
      cfg.train.hidden.empty() ? std::vector<int>{256} : cfg.train.hidden;

  AutoencoderResult result;
  result.widths = bottlenecks;
  for (std::size_t k = 0; k < bottlenecks.size(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.restarts; ++r) {
      const std::uint64_t seed = derive_seed(cfg.train.seed, k, r);
      // Encoder layers as listed, a linear bottleneck, then the mirror image.
      std::vector<int> widths{dim};
      widths.insert(widths.end(), hidden.begin(), hidden.end());
      widths.push_back(bottlenecks[k]);
      widths.insert(widths.end(), hidden.rbegin(), hidden.rend());
      widths.push_back(dim);
      std::vector<Activation> acts(widths.size() - 1, cfg.train.activation);
      acts[hidden.size()] = Activation::identity;
      acts.back() = Activation::identity;
      Mlp net(widths, acts, seed);
      train.seed = seed;
      best = std::min(best, train_denoiser(net, odd, even, train).test);
    }
    result.test_error.push_back(best);
    result.envelope.push_back(
        k == 0 ? best : std::min(best, result.envelope.back()));
  }
  result.dimension = dim;
  for (std::size_t k = 0; k < bottlenecks.size(); ++k) {
    if (result.envelope[k] < cfg.threshold) {
      result.dimension = bottlenecks[k];
      result.threshold_met = true;
      break;
    }
  }
  return result;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y,
                 int lo, int hi) {
  const int n = hi - lo + 1;
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (int i = lo; i <= hi; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (int i = lo; i <= hi; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

namespace {

// Longest run of consecutive local slopes whose spread stays within
// `tolerance` of their mean. Returns an inclusive index range on the curve.
std::pair<int, int> auto_window(const std::vector<double>& x,
                                const std::vector<double>& y,
                                double tolerance) {
  const int n = static_cast<int>(x.size());
  std::vector<double> local(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    local[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
  }
  std::pair<int, int> best{0, std::min(1, n - 1)};
  int best_len = 0;
  for (int start = 0; start < n - 1; ++start) {
    double lo = local[start], hi = local[start], sum = 0.0;
    for (int end = start; end < n - 1; ++end) {
      lo = std::min(lo, local[end]);
      hi = std::max(hi, local[end]);
      sum += local[end];
      const double mean = sum / (end - start + 1);
      if (!(mean > 0.0) || (hi - lo) > tolerance * mean) break;
      if (end - start + 1 > best_len) {
        best_len = end - start + 1;
        best = {start, end + 1};
      }
    }
  }
  return best;
}

}  // namespace

FractalCurve fractal_dim(const PointCloud& points, const FractalConfig& cfg) {
  if (points.rows() < 2) throw InsufficientDataError("fractal: need 2 points");
  if (cfg.max_points < 2) throw ConfigError("fractal: max_points must be >= 2");
  if (cfg.grid_points < 3) throw ConfigError("fractal: grid_points must be >= 3");

  // Random subset without replacement.
  std::vector<long> rows(points.rows());
  std::iota(rows.begin(), rows.end(), 0L);
  if (static_cast<long>(rows.size()) > cfg.max_points) {
    Rng rng(cfg.seed);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(cfg.max_points);
  }
  const long m = static_cast<long>(rows.size());
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (long a = 0; a < m; ++a) {
    for (long b = a + 1; b < m; ++b) {
      dist.push_back((points.row(rows[a]) - points.row(rows[b])).norm());
    }
  }
  std::sort(dist.begin(), dist.end());

  FractalCurve curve;
  auto first_positive = std::upper_bound(dist.begin(), dist.end(), 0.0);
  if (first_positive == dist.end()) {
    throw InsufficientDataError("fractal: all points coincide");
  }
  const double lo = std::log(*first_positive);
  const double hi = std::log(dist.back());
  for (int k = 0; k < cfg.grid_points; ++k) {
    const double log_L = lo + (hi - lo) * k / (cfg.grid_points - 1);
    // Pairs strictly closer than L; the top grid point includes the max.
    const double L = std::exp(log_L) * (k + 1 == cfg.grid_points ? 1.0 + 1e-12 : 1.0);
    const auto count = std::lower_bound(dist.begin(), dist.end(), L) - dist.begin();
    if (count == 0) {
      curve.truncated = true;
      continue;
    }
    curve.log_L.push_back(log_L);
    curve.log_pairs.push_back(std::log(static_cast<double>(count)));
  }
  const int n = static_cast<int>(curve.log_L.size());
  if (n < 2) throw InsufficientDataError("fractal: too few non-empty scales");

  if (cfg.window) {
    const double wlo = std::log(cfg.window->first);
    const double whi = std::log(cfg.window->second);
    int a = n, b = -1;
    for (int i = 0; i < n; ++i) {
      if (curve.log_L[i] >= wlo && curve.log_L[i] <= whi) {
        a = std::min(a, i);
        b = std::max(b, i);
      }
    }
    if (b - a < 1) throw ConfigError("fractal: window covers fewer than 2 scales");
    curve.fit_window = {a, b};
  } else {
    curve.fit_window = auto_window(curve.log_L, curve.log_pairs, cfg.slope_tolerance);
    curve.auto_window = true;
  }
  curve.slope = std::max(0.0, fit_slope(curve.log_L, curve.log_pairs,
                                        curve.fit_window.first,
                                        curve.fit_window.second));
  return curve;
}

nlohmann::json FractalCurve::to_json() const {
  nlohmann::json j;
  j["slope"] = slope;
  j["fit_window"] = {fit_window.first, fit_window.second};
  j["fit_L_range"] = {std::exp(log_L[fit_window.first]),
                      std::exp(log_L[fit_window.second])};
  j["auto_window"] = auto_window;
  j["truncated"] = truncated;
  return j;
}

void write_fractal_csv(const FractalCurve& curve, const std::string& path) {
  Matrix values(static_cast<long>(curve.log_L.size()), 2);
  for (std::size_t i = 0; i < curve.log_L.size(); ++i) {
    values(static_cast<long>(i), 0) = curve.log_L[i];
    values(static_cast<long>(i), 1) = curve.log_pairs[i];
  }
  write_csv(path, {"log_L", "log_pairs"}, values);
}

void write_autoencoder_csv(const AutoencoderResult& result,
                           const std::string& path) {
  Matrix values(static_cast<long>(result.widths.size()), 3);
  for (std::size_t i = 0; i < result.widths.size(); ++i) {
    values(static_cast<long>(i), 0) = result.widths[i];
    values(static_cast<long>(i), 1) = result.test_error[i];
    values(static_cast<long>(i), 2) = result.envelope[i];
  }
  write_csv(path, {"s", "test_error", "envelope"}, values);
}

}  // namespace poincare
