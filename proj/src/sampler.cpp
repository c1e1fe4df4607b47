#include "poincare/sampler.hpp"

#include "poincare/erd.hpp"
#include "poincare/io.hpp"
#include "poincare/parallel.hpp"

#include <cmath>

namespace poincare {

std::string to_string(WalkMode mode) {
  return mode == WalkMode::chain ? "chain" : "anchored";
}

WalkMode walk_mode_from_string(const std::string& name) {
  if (name == "chain") return WalkMode::chain;
  if (name == "anchored") return WalkMode::anchored;
  throw ConfigError("unknown walk mode '" + name + "'");
}

void SamplerConfig::validate() const {
  if (chain_length < 1) throw ConfigError("sampler: chain_length must be >= 1");
  if (start_index < -1) throw ConfigError("sampler: start_index must be >= -1");
}

Vector walk(const Vector& x, double L, Rng& rng) {
  if (!(L >= 0.0)) throw ConfigError("walk: L must be >= 0");
  if (L == 0.0) return x;
  std::normal_distribution<double> normal(0.0, L);
  Vector y = x;
  for (long i = 0; i < y.size(); ++i) y(i) += normal(rng);
  return y;
}

SampleCloud walk_pull_chain(const PullNetwork& net, const Vector& start,
                            int n_steps, Rng& rng, WalkMode mode) {
  if (start.size() != net.dimension()) {
    throw DimensionError("walk_pull_chain: start has dimension " +
                         std::to_string(start.size()) + ", network expects " +
                         std::to_string(net.dimension()));
  }
  if (n_steps < 1) throw ConfigError("walk_pull_chain: n_steps must be >= 1");

  SampleCloud cloud;
  cloud.origin = start;
  cloud.L = net.L;
  cloud.mode = mode;
  cloud.samples.resize(n_steps, start.size());

  if (mode == WalkMode::anchored) {
    Matrix noisy(start.size(), n_steps);
    for (int k = 0; k < n_steps; ++k) noisy.col(k) = walk(start, net.L, rng);
    const Matrix pulled = pull(net, noisy);
    for (int k = 0; k < n_steps; ++k) {
      if (!pulled.col(k).allFinite() || pulled.col(k).norm() > kRunawayNorm) {
        throw DivergenceError("walk/pull sample ran away", k);
      }
    }
    cloud.samples = pulled.transpose();
    return cloud;
  }

  Vector x = start;
  for (int k = 0; k < n_steps; ++k) {
    x = pull(net, walk(x, net.L, rng));
    if (!x.allFinite() || x.norm() > kRunawayNorm) {
      throw DivergenceError(
          "walk/pull chain ran away at step " + std::to_string(k), k);
    }
    cloud.samples.row(k) = x.transpose();
  }
  return cloud;
}

void write_sample_cloud(const SampleCloud& cloud, const std::string& csv_path) {
  std::vector<std::string> header;
  for (long j = 0; j < cloud.samples.cols(); ++j) {
    header.push_back("x" + std::to_string(j));
  }
  write_csv(csv_path, header, cloud.samples);
  nlohmann::json meta;
  meta["origin"] = to_json_vector(cloud.origin);
  meta["L"] = cloud.L;
  meta["seed"] = cloud.seed;
  meta["chain_length"] = cloud.samples.rows();
  meta["mode"] = to_string(cloud.mode);
  write_json_file(meta, csv_path + ".json");
}

int StabilityResult::count_equal(long value) const {
  auto it = histogram.find(value);
  return it == histogram.end() ? 0 : it->second;
}

nlohmann::json StabilityResult::to_json() const {
  nlohmann::json j;
  j["start_indices"] = start_indices;
  j["n_eff"] = n_eff;
  j["best_L"] = best_L;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [value, count] : histogram) {
    hist[std::to_string(value)] = count;
  }
  j["histogram"] = hist;
  return j;
}

StabilityResult stability_sweep(const std::vector<PullNetwork>& net_per_L,
                                const PointCloud& whitened, int n_points,
                                int chain_len, std::uint64_t seed,
                                WalkMode mode, int jobs) {
  if (net_per_L.empty()) throw ConfigError("stability: no networks given");
  if (n_points < 1) throw ConfigError("stability: n_points must be >= 1");
  if (whitened.rows() < 1) throw InsufficientDataError("stability: no points");
  if (chain_len <= whitened.cols()) {
    // PCA of fewer samples than dimensions is rank deficient by construction.
    throw ConfigError("stability: chain_len must exceed the dimension " +
                      std::to_string(whitened.cols()));
  }

  StabilityResult result;
  Rng pick_rng(derive_seed(seed, 0));
  std::uniform_int_distribution<long> pick(0, whitened.rows() - 1);
  for (int p = 0; p < n_points; ++p) result.start_indices.push_back(pick(pick_rng));
  result.n_eff.assign(n_points, 0.0);
  result.best_L.assign(n_points, 0.0);

  const int dim = static_cast<int>(whitened.cols());
  parallel_for(static_cast<std::size_t>(n_points), jobs, [&](std::size_t p) {
    const Vector start = whitened.row(result.start_indices[p]).transpose();
    double best = -1.0;
    double best_L = 0.0;
    for (std::size_t l = 0; l < net_per_L.size(); ++l) {
      Rng rng(derive_seed(seed, p + 1, l));
      const SampleCloud cloud =
          walk_pull_chain(net_per_L[l], start, chain_len, rng, mode);
      const double value = n_eff_of_ratios(local_pca(cloud.samples), dim);
      if (value > best) {
        best = value;
        best_L = net_per_L[l].L;
      }
    }
    result.n_eff[p] = best;
    result.best_L[p] = best_L;
  });
  for (double v : result.n_eff) {
    ++result.histogram[std::lround(v)];
  }
  return result;
}

}  // namespace poincare
