#pragma once

#include "poincare/common.hpp"
#include "poincare/pullnet.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace poincare {

/// How successive walk steps are anchored.
///   chain:    x_{k+1} = P(x_k + n_k), a random walk along the manifold.
///   anchored: x'_k = P(origin + n_k), independent jumps from the origin.
enum class WalkMode { chain, anchored };

std::string to_string(WalkMode mode);
WalkMode walk_mode_from_string(const std::string& name);

// Chains whose state norm exceeds this (whitened units) are aborted.
inline constexpr double kRunawayNorm = 1e3;

struct SamplerConfig {
  int chain_length = 1000;
  WalkMode mode = WalkMode::anchored;
  long start_index = -1;  // -1 selects the trajectory midpoint
  std::uint64_t seed = 0;

  void validate() const;
};

struct SampleCloud {
  Vector origin;
  double L = 0.0;
  PointCloud samples;  // chain_length x N
  std::uint64_t seed = 0;
  WalkMode mode = WalkMode::anchored;
};

/// y = x + n with n ~ N(0, L^2 I).
Vector walk(const Vector& x, double L, Rng& rng);

/// Runs `n_steps` walk/pull steps at the network's training scale and keeps
/// every pulled-back state. Throws DivergenceError if a state runs away.
SampleCloud walk_pull_chain(const PullNetwork& net, const Vector& start,
                            int n_steps, Rng& rng,
                            WalkMode mode = WalkMode::anchored);

void write_sample_cloud(const SampleCloud& cloud, const std::string& csv_path);

struct StabilityResult {
  std::vector<long> start_indices;
  std::vector<double> n_eff;        // max over L, one per start
  std::vector<double> best_L;       // argmax L, one per start
  std::map<long, int> histogram;    // rounded n_eff -> count

  int count_equal(long value) const;
  nlohmann::json to_json() const;
};

/// For `n_points` random trajectory points x computes
/// n_eff(x) = max_L n_eff(x, L) using one trained network per L.
StabilityResult stability_sweep(const std::vector<PullNetwork>& net_per_L,
                                const PointCloud& whitened, int n_points,
                                int chain_len, std::uint64_t seed,
                                WalkMode mode = WalkMode::anchored, int jobs = 1);

}  // namespace poincare
