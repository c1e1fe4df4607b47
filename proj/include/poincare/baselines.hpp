#pragma once

#include "poincare/common.hpp"
#include "poincare/preprocess.hpp"
#include "poincare/pullnet.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace poincare {

// Global PCA: N minus the number of vanishing covariance eigenvalues.
int global_pca_dim(const PointCloud& points, double eps_p = kDefaultEpsP);

struct AutoencoderConfig {
  TrainConfig train;          // L is forced to 0; hidden = encoder layers
  double threshold = 1e-3;
  int restarts = 1;           // best-of-k per bottleneck width
};

struct AutoencoderResult {
  int dimension = 0;
  bool threshold_met = false;
  std::vector<int> widths;
  std::vector<double> test_error;  // raw best-of-k error per width
  std::vector<double> envelope;    // running minimum over increasing width
  nlohmann::json to_json() const;
};

/// Trains N -> hidden -> s -> reversed hidden -> N reconstructions for each s in
/// `bottlenecks` (ascending) and returns the smallest s whose test error is
/// below the threshold. A wider bottleneck can always ignore a unit, so the
/// decision uses the non-increasing envelope of the curve. When no width
/// qualifies the result is N with threshold_met = false.
AutoencoderResult autoencoder_dim(const PointCloud& points,
                                  const std::vector<int>& bottlenecks,
                                  const AutoencoderConfig& cfg);

struct FractalCurve {
  std::vector<double> log_L;      // natural log, ascending
  std::vector<double> log_pairs;  // log of pair count with distance < L
  std::pair<int, int> fit_window{0, 0};  // inclusive index range
  double slope = 0.0;
  bool auto_window = false;
  bool truncated = false;  // scales with zero pairs were dropped
  nlohmann::json to_json() const;
};

struct FractalConfig {
  std::optional<std::pair<double, double>> window;  // (L_lo, L_hi)
  int max_points = 1000;
  int grid_points = 40;
  double slope_tolerance = 0.2;  // relative spread allowed in auto windows
  std::uint64_t seed = 0;
};

/// Correlation dimension: slope of log(#pairs closer than L) vs log L.
FractalCurve fractal_dim(const PointCloud& points, const FractalConfig& cfg);

/// Least-squares slope of y on x over [lo, hi].
double fit_slope(const std::vector<double>& x, const std::vector<double>& y,
                 int lo, int hi);

void write_fractal_csv(const FractalCurve& curve, const std::string& path);
void write_autoencoder_csv(const AutoencoderResult& result,
                           const std::string& path);

}  // namespace poincare
