#include "poincare/erd.hpp"

#include "poincare/io.hpp"
#include "poincare/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace poincare {

Vector local_pca(const PointCloud& samples) {
  if (samples.rows() <= samples.cols()) {
    throw InsufficientDataError("local_pca: need more samples (" +
                                std::to_string(samples.rows()) +
                                ") than dimensions (" +
                                std::to_string(samples.cols()) + ")");
  }
  Vector values = symmetric_eigen(covariance(samples)).values;
  // Roundoff can leave tiny negative eigenvalues.
  values = values.cwiseMax(0.0);
  const double total = values.sum();
  if (!(total > 0.0)) return Vector::Zero(values.size());
  return values / total;
}

double n_eff_of_ratios(const Vector& ratios, int N) {
  const double half_pi = 0.5 * std::numbers::pi;
  double sum = 0.0;
  for (long i = 0; i < ratios.size(); ++i) {
    const double arg = std::numbers::pi * N * ratios(i);
    if (arg < half_pi) sum += std::cos(arg);
  }
  return sum;
}

double n_eff_of_ratios(const Vector& ratios) {
  return n_eff_of_ratios(ratios, static_cast<int>(ratios.size()));
}

std::vector<double> default_L_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 12; ++k) {
    grid.push_back(std::pow(10.0, -2.5 + 0.25 * k));
  }
  return grid;
}

std::size_t ExplainedRatioDiagram::valid_columns() const {
  return static_cast<std::size_t>(std::count(failed.begin(), failed.end(), false));
}

namespace {

long start_row(const PointCloud& whitened, const SamplerConfig& sampler) {
  if (sampler.start_index < 0) return whitened.rows() / 2;
  if (sampler.start_index >= whitened.rows()) {
    throw ConfigError("sampler: start_index beyond trajectory length");
  }
  return sampler.start_index;
}

ExplainedRatioDiagram empty_erd(int dim, const std::vector<double>& grid) {
  ExplainedRatioDiagram erd;
  erd.N = dim;
  erd.L_grid = grid;
  erd.ratios = Matrix::Zero(dim, static_cast<long>(grid.size()));
  erd.n_eff.assign(grid.size(), 0.0);
  erd.failed.assign(grid.size(), false);
  erd.errors.assign(grid.size(), std::string());
  erd.losses.assign(grid.size(), TrainLosses{});
  return erd;
}

void fill_column(ExplainedRatioDiagram& erd, std::size_t j,
                 const PullNetwork& net, const Vector& start,
                 const SamplerConfig& sampler) {
  Rng rng(derive_seed(sampler.seed, j));
  const SampleCloud cloud =
      walk_pull_chain(net, start, sampler.chain_length, rng, sampler.mode);
  const Vector ratios = local_pca(cloud.samples);
  erd.ratios.col(static_cast<long>(j)) = ratios;
  erd.n_eff[j] = n_eff_of_ratios(ratios, erd.N);
  erd.losses[j] = net.losses;
}

}  // namespace

ExplainedRatioDiagram build_erd(const PointCloud& whitened,
                                const ErdConfig& cfg,
                                std::vector<PullNetwork>* nets_out) {
  cfg.sampler.validate();
  cfg.train.validate();
  if (cfg.L_grid.empty()) throw ConfigError("erd: empty L grid");
  if (!std::is_sorted(cfg.L_grid.begin(), cfg.L_grid.end())) {
    throw ConfigError("erd: L grid must be ascending");
  }
  const int dim = static_cast<int>(whitened.cols());
  ExplainedRatioDiagram erd = empty_erd(dim, cfg.L_grid);
  const Vector start = whitened.row(start_row(whitened, cfg.sampler)).transpose();

  std::vector<PullNetwork> nets(cfg.L_grid.size());
  parallel_for(cfg.L_grid.size(), cfg.jobs, [&](std::size_t j) {
    try {
      TrainConfig train = cfg.train;
      train.L = cfg.L_grid[j];
      train.seed = derive_seed(cfg.train.seed, j);
      nets[j] = train_pull(whitened, train);
      fill_column(erd, j, nets[j], start, cfg.sampler);
    } catch (const Error& e) {
      erd.failed[j] = true;
      erd.errors[j] = e.what();
      erd.n_eff[j] = 0.0;
    }
  });
  if (nets_out) *nets_out = std::move(nets);
  return erd;
}

ExplainedRatioDiagram erd_from_networks(const std::vector<PullNetwork>& nets,
                                        const PointCloud& whitened,
                                        const SamplerConfig& sampler) {
  std::vector<double> grid;
  for (const auto& net : nets) grid.push_back(net.L);
  ExplainedRatioDiagram erd = empty_erd(static_cast<int>(whitened.cols()), grid);
  const Vector start = whitened.row(start_row(whitened, sampler)).transpose();
  for (std::size_t j = 0; j < nets.size(); ++j) {
    try {
      fill_column(erd, j, nets[j], start, sampler);
    } catch (const Error& e) {
      erd.failed[j] = true;
      erd.errors[j] = e.what();
    }
  }
  return erd;
}

PhaseTransitions phase_transitions(const ExplainedRatioDiagram& erd) {
  PhaseTransitions out;
  const std::size_t n = erd.size();
  if (n == 0) return out;
  std::size_t peak = 0;
  for (std::size_t j = 1; j < n; ++j) {
    if (erd.n_eff[j] > erd.n_eff[peak]) peak = j;
  }
  const double half = 0.5 * erd.n_eff[peak];
  if (!(half > 0.0)) return out;
  for (std::size_t j = 0; j <= peak; ++j) {
    if (erd.n_eff[j] > half) {
      out.L_a = erd.L_grid[j];
      break;
    }
  }
  for (std::size_t j = peak + 1; j < n; ++j) {
    if (erd.n_eff[j] < half) {
      out.L_b = erd.L_grid[j];
      break;
    }
  }
  for (std::size_t j = peak; j + 1 < n; ++j) {
    const double dlog = std::log10(erd.L_grid[j + 1]) - std::log10(erd.L_grid[j]);
    if (dlog <= 0.0) continue;
    const double slope = std::abs(erd.n_eff[j + 1] - erd.n_eff[j]) / dlog;
    out.max_slope_near_b = std::max(out.max_slope_near_b, slope);
  }
  return out;
}

DetectionResult detect(const ExplainedRatioDiagram& erd, int n_linear,
                       CountMode mode) {
  DetectionResult result;
  result.N = erd.N;
  result.n_linear = n_linear;
  result.mode = mode;
  const double threshold = 0.1 / erd.N;
  result.margins.assign(erd.N, std::numeric_limits<double>::infinity());
  result.n_eff_max = 0.0;
  for (std::size_t j = 0; j < erd.size(); ++j) {
    if (erd.failed[j]) continue;
    for (int i = 0; i < erd.N; ++i) {
      result.margins[i] = std::min(
          result.margins[i], erd.ratios(i, static_cast<long>(j)) / threshold);
    }
    if (erd.n_eff[j] > result.n_eff_max) {
      result.n_eff_max = erd.n_eff[j];
      result.L_at_max = erd.L_grid[j];
    }
  }
  for (double m : result.margins) {
    if (m < 1.0) ++result.n_detected_threshold;
  }
  result.n_total = n_linear + (mode == CountMode::n_eff
                                   ? static_cast<int>(std::lround(result.n_eff_max))
                                   : result.n_detected_threshold);
  return result;
}

nlohmann::json DetectionResult::to_json() const {
  nlohmann::json j;
  j["N"] = N;
  j["n_detected_threshold"] = n_detected_threshold;
  j["n_eff_max"] = n_eff_max;
  j["L_at_max"] = L_at_max;
  j["n_linear"] = n_linear;
  j["n_total"] = n_total;
  j["mode"] = mode == CountMode::n_eff ? "n_eff" : "threshold";
  nlohmann::json margins_json = nlohmann::json::array();
  for (double m : margins) {
    margins_json.push_back(std::isfinite(m) ? nlohmann::json(m) : nlohmann::json());
  }
  j["threshold_margins"] = margins_json;
  return j;
}

Analysis analyze(const PointCloud& raw, const AnalyzeConfig& cfg) {
  Analysis out;
  out.whiten = fit_whiten(raw, cfg.eps_p, cfg.reduce, cfg.eps_n);
  out.whitened = apply_whiten(out.whiten, raw);
  out.erd = build_erd(out.whitened, cfg.erd, &out.nets);
  if (out.erd.valid_columns() == 0) {
    throw Error("analyze: every L column failed: " + out.erd.errors.front());
  }
  const int n_linear = cfg.reduce ? static_cast<int>(out.whiten.removed.size()) : 0;
  out.detection = detect(out.erd, n_linear, cfg.count_mode);
  return out;
}

void write_erd_csv(const ExplainedRatioDiagram& erd, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.precision(17);
  out << "L,i,omega,n_eff_at_L\n";
  for (std::size_t j = 0; j < erd.size(); ++j) {
    if (erd.failed[j]) continue;
    for (int i = 0; i < erd.N; ++i) {
      out << erd.L_grid[j] << ',' << i << ','
          << erd.ratios(i, static_cast<long>(j)) << ',' << erd.n_eff[j] << '\n';
    }
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace poincare
