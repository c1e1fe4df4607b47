// Command-line front end: simulate, analyze, scan, baseline, export, stability.

#include "poincare/baselines.hpp"
#include "poincare/config.hpp"
#include "poincare/dynamics.hpp"
#include "poincare/erd.hpp"
#include "poincare/export.hpp"
#include "poincare/io.hpp"
#include "poincare/preprocess.hpp"
#include "poincare/sampler.hpp"
#include "poincare/scan.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#ifndef POINCARE_VERSION
#define POINCARE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace poincare;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

struct Common {
  std::string config_path;
  std::string system;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
  std::vector<std::string> params;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "TOML configuration file");
  app->add_option("--system", c.system,
                  "harmonic | kepler | pendulum | mirror | threebody");
  app->add_option("--seed", c.seed, "root random seed");
  app->add_option("--jobs", c.jobs, "worker threads");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--param", c.params, "system parameter k=v (repeatable)");
  app->add_option("--set", c.sets, "any config key, e.g. pullnet.steps=2000 (repeatable)");
}

std::pair<std::string, std::string> split_kv(const std::string& text,
                                             const std::string& flag) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(flag + " expects key=value, got '" + text + "'");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (!c.config_path.empty()) cfg = load_config(c.config_path);
  apply_env_overrides(cfg, "POINCARE_", [](const char* n) { return std::getenv(n); });
  if (!c.system.empty()) cfg.system = c.system;
  if (c.seed) cfg.seed = *c.seed;
  if (c.jobs) cfg.jobs = *c.jobs;
  if (!c.out.empty()) cfg.out = c.out;
  for (const auto& p : c.params) {
    const auto [k, v] = split_kv(p, "--param");
    set_option(cfg, "system.params." + k, v);
  }
  for (const auto& s : c.sets) {
    const auto [k, v] = split_kv(s, "--set");
    set_option(cfg, k, v);
  }
  cfg.validate();
  return cfg;
}

// Collects written artifacts and writes the run manifest last.
class Run {
 public:
  Run(std::string command, const RunConfig& cfg, int argc, char** argv)
      : command_(std::move(command)), cfg_(cfg),
        start_(std::chrono::system_clock::now()) {
    for (int i = 0; i < argc; ++i) argv_.emplace_back(argv[i]);
    fs::create_directories(cfg.out);
  }

  std::string path(const std::string& name) const {
    return (fs::path(cfg_.out) / name).string();
  }

  void wrote(const std::string& p) { artifacts_.push_back(p); }

  void finish(const json& summary) {
    json m;
    m["command"] = command_;
    m["argv"] = argv_;
    m["tool_version"] = POINCARE_VERSION;
    m["config"] = cfg_.to_json();
    m["root_seed"] = cfg_.seed;
    m["artifacts"] = artifacts_;
    m["summary"] = summary;
    m["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::system_clock::now() - start_).count();
    write_json_file(m, path("manifest.json"));
  }

 private:
  std::string command_;
  RunConfig cfg_;
  std::vector<std::string> argv_;
  std::vector<std::string> artifacts_;
  std::chrono::system_clock::time_point start_;
};

Trajectory simulate_from(const RunConfig& cfg) {
  Trajectory t = simulate(cfg.system_spec(), cfg.initial_state(), cfg.time_step(),
                          cfg.steps(), cfg.stride);
  t.seed = cfg.seed;
  return t;
}

// Raw points: a trajectory file if given, otherwise a fresh simulation.
PointCloud load_points(const RunConfig& cfg, const std::string& trajectory,
                       bool bare) {
  if (trajectory.empty()) return simulate_from(cfg).points;
  if (bare) return read_points_csv(trajectory, false);
  return read_trajectory(trajectory).points;
}

int cmd_simulate(const RunConfig& cfg, Run& run) {
  const Trajectory t = simulate_from(cfg);
  const std::string p = run.path("trajectory.csv");
  write_trajectory(t, p);
  run.wrote(p);
  run.wrote(p + ".json");
  const double h0 = cfg.system_spec().hamiltonian(t.point(0));
  const double h1 = cfg.system_spec().hamiltonian(t.point(t.size() - 1));
  std::cout << "wrote " << t.size() << " rows to " << p << "\n";
  run.finish({{"rows", t.size()}, {"H_start", h0}, {"H_end", h1}});
  return kOk;
}

int cmd_analyze(const RunConfig& cfg, Run& run, const std::string& trajectory,
                bool bare, bool save_networks) {
  const PointCloud raw = load_points(cfg, trajectory, bare);
  const Analysis an = analyze(raw, cfg.analyze_config());

  write_json_file(an.whiten.to_json(), run.path("whiten.json"));
  run.wrote(run.path("whiten.json"));
  write_erd_csv(an.erd, run.path("erd.csv"));
  run.wrote(run.path("erd.csv"));

  json det = an.detection.to_json();
  det["L_grid"] = an.erd.L_grid;
  det["n_eff_curve"] = an.erd.n_eff;
  det["config_hash"] = std::hash<std::string>{}(cfg.to_json().dump());
  json losses = json::array();
  for (const auto& l : an.erd.losses) losses.push_back({l.train, l.test});
  det["losses"] = losses;
  json failures = json::object();
  for (std::size_t j = 0; j < an.erd.size(); ++j) {
    if (an.erd.failed[j]) failures[std::to_string(an.erd.L_grid[j])] = an.erd.errors[j];
  }
  det["failed_columns"] = failures;
  const PhaseTransitions pt = phase_transitions(an.erd);
  det["L_a"] = pt.L_a ? json(*pt.L_a) : json();
  det["L_b"] = pt.L_b ? json(*pt.L_b) : json();
  write_json_file(det, run.path("detection.json"));
  run.wrote(run.path("detection.json"));

  if (save_networks) {
    fs::create_directories(run.path("networks"));
    for (std::size_t j = 0; j < an.nets.size(); ++j) {
      if (an.erd.failed[j]) continue;
      const std::string p = run.path("networks/net_" + std::to_string(j) + ".json");
      save_network(an.nets[j], p);
      run.wrote(p);
    }
  }
  std::cout << "n_linear=" << an.detection.n_linear
            << " n_eff_max=" << an.detection.n_eff_max
            << " (L=" << an.detection.L_at_max << ")"
            << " threshold_count=" << an.detection.n_detected_threshold
            << " total=" << an.detection.n_total << "\n";
  run.finish(det);
  return kOk;
}

int cmd_scan(const RunConfig& cfg, Run& run) {
  const ScanSpec spec = cfg.scan_spec();
  if (spec.axis == ScanAxis::kepler_eps_vs_orbits) {
    const KeplerGrid grid = run_kepler_grid(spec);
    write_kepler_grid_csv(grid, run.path("kepler_grid.csv"));
    run.wrote(run.path("kepler_grid.csv"));
    write_json_file(grid.to_json(), run.path("kepler_grid.json"));
    run.wrote(run.path("kepler_grid.json"));
    std::cout << "contour slope: "
              << (grid.contour_slope ? std::to_string(*grid.contour_slope) : "n/a") << "\n";
    run.finish(grid.to_json());
    return kOk;
  }
  const ScanResult result = run_scan(spec);
  write_scan_csv(result, run.path("scan.csv"));
  run.wrote(run.path("scan.csv"));
  write_json_file(result.to_json(), run.path("scan.json"));
  run.wrote(run.path("scan.json"));
  for (std::size_t i = 0; i < result.size(); ++i) {
    std::cout << result.values[i] << "  n_eff=" << result.n_eff_mean[i] << " +- "
              << result.n_eff_std[i] << "  count=" << result.rounded[i]
              << (result.failed[i] ? "  FAILED: " + result.errors[i] : "") << "\n";
  }
  run.finish(result.to_json());
  return kOk;
}

int cmd_baseline(const RunConfig& cfg, Run& run, const std::string& trajectory,
                 bool bare) {
  const PointCloud raw = load_points(cfg, trajectory, bare);
  const std::string& method = cfg.baseline.method;
  json verdict;
  verdict["method"] = method;
  if (method == "pca") {
    const WhitenModel model = fit_whiten(raw, cfg.eps_p, true);
    const int dim = global_pca_dim(raw, cfg.eps_p);
    Matrix values(model.eigvals.size(), 2);
    for (long i = 0; i < values.rows(); ++i) {
      values(i, 0) = static_cast<double>(i);
      values(i, 1) = model.eigvals(i);
    }
    write_csv(run.path("pca_eigenvalues.csv"), {"i", "eigenvalue"}, values);
    run.wrote(run.path("pca_eigenvalues.csv"));
    verdict["dimension"] = dim;
    verdict["conserved"] = raw.cols() - dim;
    verdict["eigenvalues"] = to_json_vector(model.eigvals);
    std::cout << "global PCA dimension " << dim << " (" << raw.cols() - dim
              << " linear conserved)\n";
  } else {
    const WhitenModel model = fit_whiten(raw, cfg.eps_p, true);
    const PointCloud white = apply_whiten(model, raw);
    const int dim = static_cast<int>(white.cols());
    if (method == "fractal") {
      FractalConfig fc;
      fc.window = cfg.baseline.fractal_window;
      fc.max_points = cfg.baseline.fractal_max_points;
      fc.grid_points = cfg.baseline.fractal_grid_points;
      fc.seed = derive_seed(cfg.seed, 4);
      const FractalCurve curve = fractal_dim(white, fc);
      write_fractal_csv(curve, run.path("fractal.csv"));
      run.wrote(run.path("fractal.csv"));
      verdict.update(curve.to_json());
      verdict["conserved"] = raw.cols() - curve.slope;
      std::cout << "fractal slope " << curve.slope << " => "
                << raw.cols() - curve.slope << " conserved\n";
    } else {
      AutoencoderConfig ac;
      ac.train = cfg.train;
      ac.train.seed = derive_seed(cfg.seed, 5);
      ac.threshold = cfg.baseline.threshold;
      ac.restarts = cfg.baseline.restarts;
      std::vector<int> widths = cfg.baseline.bottlenecks;
      if (widths.empty()) {
        for (int s = 1; s <= dim; ++s) widths.push_back(s);
      }
      const AutoencoderResult res = autoencoder_dim(white, widths, ac);
      write_autoencoder_csv(res, run.path("autoencoder.csv"));
      run.wrote(run.path("autoencoder.csv"));
      verdict.update(res.to_json());
      verdict["n_linear"] = model.removed.size();
      verdict["conserved"] = raw.cols() - res.dimension;
      std::cout << "autoencoder dimension " << res.dimension
                << (res.threshold_met ? "" : " (threshold not met)") << " => "
                << raw.cols() - res.dimension << " conserved\n";
    }
  }
  write_json_file(verdict, run.path("baseline.json"));
  run.wrote(run.path("baseline.json"));
  run.finish(verdict);
  return kOk;
}

int cmd_export(const RunConfig& cfg, Run& run, const std::string& a,
               const std::string& b, const std::string& c,
               const std::vector<std::string>& formulas) {
  json summary;
  if (!a.empty() || !b.empty()) {
    if (a.empty() || b.empty()) throw ConfigError("export needs both --traj-a and --traj-b");
    const Trajectory ta = read_trajectory(a);
    const Trajectory tb = read_trajectory(b);
    std::optional<Trajectory> tc;
    if (!c.empty()) tc = read_trajectory(c);
    ExportOptions opt;
    opt.target_a = cfg.export_settings.target_a;
    opt.target_b = cfg.export_settings.target_b;
    opt.stride = cfg.export_settings.stride;
    const ExportManifest m =
        export_gauge_fixed(ta, tb, tc ? &*tc : nullptr, run.path("gauge_fixed.txt"), opt);
    run.wrote(m.data_path);
    run.wrote(m.data_path + ".json");
    if (!m.eval_path.empty()) run.wrote(m.eval_path);
    summary["export"] = m.to_json();
    std::cout << "wrote " << m.rows_a + m.rows_b << " targeted rows to " << m.data_path << "\n";
  }
  if (!formulas.empty()) {
    const std::string source = !c.empty() ? c : a;
    const Trajectory t = source.empty() ? simulate_from(cfg) : read_trajectory(source);
    json evals = json::array();
    for (const auto& f : formulas) {
      const CandidateStats s = evaluate_candidate(f, t);
      json e = s.to_json();
      e["formula"] = f;
      evals.push_back(e);
      std::cout << f << ": " << s.mean << " +- " << s.std << " (relative "
                << s.relative_spread() << ", excluded " << s.excluded << ")\n";
    }
    write_json_file(evals, run.path("candidates.json"));
    run.wrote(run.path("candidates.json"));
    summary["candidates"] = evals;
  }
  if (summary.is_null()) {
    throw ConfigError("export: give --traj-a/--traj-b and/or --evaluate");
  }
  run.finish(summary);
  return kOk;
}

int cmd_stability(const RunConfig& cfg, Run& run, const std::string& trajectory,
                  bool bare, const std::string& from) {
  std::vector<PullNetwork> nets;
  PointCloud white;
  if (!from.empty()) {
    const WhitenModel model = WhitenModel::from_json(read_json_file(
        (fs::path(from) / "whiten.json").string()));
    white = apply_whiten(model, load_points(cfg, trajectory, bare));
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(fs::path(from) / "networks")) {
      files.push_back(e.path());
    }
    std::sort(files.begin(), files.end(), [](const fs::path& x, const fs::path& y) {
      return std::stoi(x.stem().string().substr(4)) < std::stoi(y.stem().string().substr(4));
    });
    for (const auto& f : files) nets.push_back(load_network(f.string()));
    if (nets.empty()) throw Error("no networks found under " + from);
  } else {
    const Analysis an = analyze(load_points(cfg, trajectory, bare), cfg.analyze_config());
    white = an.whitened;
    for (std::size_t j = 0; j < an.nets.size(); ++j) {
      if (!an.erd.failed[j]) nets.push_back(an.nets[j]);
    }
  }
  const StabilityResult res =
      stability_sweep(nets, white, cfg.stability_points, cfg.sampler.chain_length,
                      derive_seed(cfg.seed, 6), cfg.sampler.mode, cfg.jobs);
  json j = res.to_json();
  write_json_file(j, run.path("stability.json"));
  run.wrote(run.path("stability.json"));
  std::cout << "histogram of rounded n_eff(x):";
  for (const auto& [k, v] : res.histogram) std::cout << " " << k << ":" << v;
  std::cout << "\n";
  run.finish(j);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conserved-quantity discovery from trajectory data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", POINCARE_VERSION);

  Common common;
  std::string trajectory, traj_a, traj_b, traj_c, from, method, axis, values, orbits;
  bool bare = false, save_networks = false;
  std::vector<std::string> formulas;

  auto* sim = app.add_subcommand("simulate", "integrate a system and write its trajectory");
  add_common(sim, common);

  auto* ana = app.add_subcommand("analyze", "prewhiten, build the ERD and count conserved quantities");
  add_common(ana, common);
  ana->add_option("trajectory", trajectory, "trajectory CSV (default: simulate)");
  ana->add_flag("--bare", bare, "trajectory is a plain point table without time column");
  ana->add_flag("--save-networks", save_networks, "write one JSON checkpoint per L");

  auto* scan = app.add_subcommand("scan", "sweep a parameter at fixed L");
  add_common(scan, common);
  scan->add_option("--axis", axis, "kepler_eps_vs_orbits | pendulum_theta0 | mirror_v0 | threebody_time_window | custom");
  scan->add_option("--values", values, "start:stop:count or comma list");
  scan->add_option("--orbits", orbits, "orbit counts for the kepler grid");

  auto* base = app.add_subcommand("baseline", "global PCA, autoencoder or fractal dimension");
  add_common(base, common);
  base->add_option("--method", method, "pca | autoencoder | fractal");
  base->add_option("trajectory", trajectory, "trajectory CSV (default: simulate)");
  base->add_flag("--bare", bare, "trajectory is a plain point table");

  auto* exp = app.add_subcommand("export", "gauge-fixed regression data and candidate evaluation");
  add_common(exp, common);
  exp->add_option("--traj-a", traj_a, "trajectory with target_a");
  exp->add_option("--traj-b", traj_b, "trajectory with target_b");
  exp->add_option("--traj-c", traj_c, "held-out trajectory");
  exp->add_option("--evaluate", formulas, "formula to evaluate along a trajectory (repeatable)");

  auto* stab = app.add_subcommand("stability", "n_eff from random starting points");
  add_common(stab, common);
  stab->add_option("trajectory", trajectory, "trajectory CSV (default: simulate)");
  stab->add_flag("--bare", bare, "trajectory is a plain point table");
  stab->add_option("--from", from, "reuse whiten.json and networks/ from an analyze run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsageError;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    RunConfig cfg = resolve(common);
    if (!method.empty()) set_option(cfg, "baseline.method", method);
    if (!axis.empty()) set_option(cfg, "scan.axis", axis);
    if (!values.empty()) set_option(cfg, "scan.values", values);
    if (!orbits.empty()) set_option(cfg, "scan.orbits", orbits);
    cfg.validate();
    if (cmd == scan && cfg.scan.values.empty()) {
      throw ConfigError("scan: values list is empty");
    }

    Run run(cmd->get_name(), cfg, argc, argv);
    if (cmd == sim) return cmd_simulate(cfg, run);
    if (cmd == ana) return cmd_analyze(cfg, run, trajectory, bare, save_networks);
    if (cmd == scan) return cmd_scan(cfg, run);
    if (cmd == base) return cmd_baseline(cfg, run, trajectory, bare);
    if (cmd == exp) return cmd_export(cfg, run, traj_a, traj_b, traj_c, formulas);
    return cmd_stability(cfg, run, trajectory, bare, from);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << cmd->get_name() << ": " << e.what() << "\n";
    return kRuntimeError;
  }
}
