#pragma once

#include "poincare/common.hpp"
#include "poincare/preprocess.hpp"
#include "poincare/pullnet.hpp"
#include "poincare/sampler.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace poincare {

/// Explained ratios of a sample cloud: covariance eigenvalues about the
/// sample mean divided by their sum, descending. A cloud with zero spread
/// yields all-zero ratios. Requires more samples than dimensions.
Vector local_pca(const PointCloud& samples);

/// Smooth conserved-quantity count sum_i c(pi * N * omega_i) with
/// c(x) = cos x for x < pi/2 and 0 otherwise.
double n_eff_of_ratios(const Vector& ratios, int N);
double n_eff_of_ratios(const Vector& ratios);

/// 13 log-spaced scales from 10^-2.5 to 10^0.5 (includes 0.01, 0.1, 1).
std::vector<double> default_L_grid();

struct ExplainedRatioDiagram {
  int N = 0;
  std::vector<double> L_grid;
  Matrix ratios;                  // N x grid, column j sorted descending
  std::vector<double> n_eff;      // per grid point
  std::vector<bool> failed;       // column could not be computed
  std::vector<std::string> errors;
  std::vector<TrainLosses> losses;

  std::size_t size() const { return L_grid.size(); }
  std::size_t valid_columns() const;
};

struct ErdConfig {
  TrainConfig train;       // L is overridden per grid point
  SamplerConfig sampler;
  std::vector<double> L_grid = default_L_grid();
  int jobs = 1;
};

/// For every L: train a pull network on the whitened points, run a walk/pull
/// chain from the configured start and record the explained ratios. A failing
/// column is marked and the remaining scales still run. Networks are returned
/// through `nets_out` when given (failed columns hold an empty network).
ExplainedRatioDiagram build_erd(const PointCloud& whitened,
                                const ErdConfig& cfg,
                                std::vector<PullNetwork>* nets_out = nullptr);

/// Builds the diagram from networks that were already trained.
ExplainedRatioDiagram erd_from_networks(const std::vector<PullNetwork>& nets,
                                        const PointCloud& whitened,
                                        const SamplerConfig& sampler);

struct PhaseTransitions {
  std::optional<double> L_a;  // first grid point where n_eff rises above half max
  std::optional<double> L_b;  // first later grid point where it falls below
  double max_slope_near_b = 0.0;  // max |d n_eff / d log10 L| past the peak
};

PhaseTransitions phase_transitions(const ExplainedRatioDiagram& erd);

enum class CountMode { n_eff, threshold };

struct DetectionResult {
  int N = 0;
  int n_detected_threshold = 0;  // components with min_L omega_i < 0.1/N
  double n_eff_max = 0.0;
  double L_at_max = 0.0;
  int n_linear = 0;
  int n_total = 0;
  CountMode mode = CountMode::n_eff;
  std::vector<double> margins;  // min_L omega_i divided by 0.1/N, per i

  nlohmann::json to_json() const;
};

DetectionResult detect(const ExplainedRatioDiagram& erd, int n_linear,
                       CountMode mode = CountMode::n_eff);

/// Prewhitening followed by the diagram and detection.
struct Analysis {
  WhitenModel whiten;
  PointCloud whitened;
  ExplainedRatioDiagram erd;
  DetectionResult detection;
  std::vector<PullNetwork> nets;
};

struct AnalyzeConfig {
  double eps_p = kDefaultEpsP;
  double eps_n = kDefaultEpsN;
  bool reduce = true;
  CountMode count_mode = CountMode::n_eff;
  ErdConfig erd;
};

Analysis analyze(const PointCloud& raw, const AnalyzeConfig& cfg);

/// Long-form CSV `L,i,omega,n_eff_at_L`.
void write_erd_csv(const ExplainedRatioDiagram& erd, const std::string& path);

}  // namespace poincare
