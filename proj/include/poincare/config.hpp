#pragma once

#include "poincare/baselines.hpp"
#include "poincare/dynamics.hpp"
#include "poincare/erd.hpp"
#include "poincare/export.hpp"
#include "poincare/scan.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace poincare {

struct ScanSettings {
  std::string axis = "pendulum_theta0";
  std::vector<double> values;
  std::vector<double> orbits;
  std::string custom_param;
  double window_length = 50.0;
  double fixed_L = 0.1;
  int seeds = 3;
  double desk_scale = 1.0;
  long max_points = 200000;
};

struct BaselineSettings {
  std::string method = "pca";  // pca | autoencoder | fractal
  std::vector<int> bottlenecks;  // empty = 1..N
  double threshold = 1e-3;
  int restarts = 1;
  std::optional<std::pair<double, double>> fractal_window;
  int fractal_max_points = 1000;
  int fractal_grid_points = 40;
};

struct ExportSettings {
  double target_a = 1.0;
  double target_b = 2.0;
  long stride = 1;
};

/// Everything a command needs. Loaded from TOML, then environment variables
/// (prefix POINCARE_), then command-line flags, later sources winning.
struct RunConfig {
  std::string system = "harmonic";
  std::map<std::string, double> params;
  std::vector<double> x0;  // empty = system default
  double dt = 0.0;         // 0 = system default
  long n_steps = 0;        // 0 = system default
  long stride = 1;

  double eps_p = kDefaultEpsP;
  double eps_n = kDefaultEpsN;
  bool reduce = true;

  TrainConfig train;
  SamplerConfig sampler;
  std::vector<double> L_grid = default_L_grid();
  std::string count_mode = "n_eff";
  int stability_points = 100;

  ScanSettings scan;
  BaselineSettings baseline;
  ExportSettings export_settings;

  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = "out";

  void validate() const;

  SystemSpec system_spec() const;
  Vector initial_state() const;
  double time_step() const;
  long steps() const;
  AnalyzeConfig analyze_config() const;
  ScanSpec scan_spec() const;

  nlohmann::json to_json() const;
};

RunConfig parse_config(std::string_view toml_text, const std::string& source);
RunConfig load_config(const std::string& path);

/// Sets one option by dotted key, e.g. "pullnet.steps" or "seed", from its
/// textual value. Throws ConfigError for unknown keys or bad values.
void set_option(RunConfig& cfg, const std::string& key, const std::string& value);

/// Applies PREFIX_SECTION__KEY=value environment variables (double
/// underscore separates the section, e.g. POINCARE_PULLNET__STEPS).
/// Top-level keys use a single name: POINCARE_SEED.
void apply_env_overrides(RunConfig& cfg, const std::string& prefix,
                         const std::function<const char*(const char*)>& getenv_fn);

/// Parses "a:b:n" (n evenly spaced values from a to b inclusive) or a
/// comma-separated list.
std::vector<double> parse_values(const std::string& text);

/// Every dotted key accepted by set_option.
std::vector<std::string> config_keys();

}  // namespace poincare
