#include "poincare/scan.hpp"

#include "poincare/erd.hpp"
#include "poincare/io.hpp"
#include "poincare/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace poincare {

std::string_view to_string(ScanAxis axis) {
  switch (axis) {
    case ScanAxis::kepler_eps_vs_orbits: return "kepler_eps_vs_orbits";
    case ScanAxis::pendulum_theta0: return "pendulum_theta0";
    case ScanAxis::mirror_v0: return "mirror_v0";
    case ScanAxis::threebody_time_window: return "threebody_time_window";
    case ScanAxis::custom: return "custom";
  }
  return "custom";
}

ScanAxis scan_axis_from_string(std::string_view name) {
  for (ScanAxis a : {ScanAxis::kepler_eps_vs_orbits, ScanAxis::pendulum_theta0,
                     ScanAxis::mirror_v0, ScanAxis::threebody_time_window,
                     ScanAxis::custom}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown scan axis '" + std::string(name) + "'");
}

namespace {

SystemKind required_system(ScanAxis axis) {
  switch (axis) {
    case ScanAxis::kepler_eps_vs_orbits: return SystemKind::kepler;
    case ScanAxis::pendulum_theta0: return SystemKind::pendulum;
    case ScanAxis::mirror_v0: return SystemKind::mirror;
    case ScanAxis::threebody_time_window: return SystemKind::threebody;
    case ScanAxis::custom: break;
  }
  return SystemKind::harmonic;
}

// Parses "x0[i]"; returns -1 for a plain parameter name.
int state_index(const std::string& name) {
  if (name.rfind("x0[", 0) != 0 || name.back() != ']') return -1;
  try {
    return std::stoi(name.substr(3, name.size() - 4));
  } catch (const std::exception&) {
    throw ConfigError("scan: malformed state reference '" + name + "'");
  }
}

}  // namespace

void ScanSpec::validate() const {
  system.validate();
  if (values.empty()) throw ConfigError("scan: values list is empty");
  if (!std::is_sorted(values.begin(), values.end())) {
    throw ConfigError("scan: values must be sorted ascending");
  }
  if (axis != ScanAxis::custom && system.kind != required_system(axis)) {
    throw ConfigError("scan: axis " + std::string(to_string(axis)) +
                      " requires system " +
                      std::string(to_string(required_system(axis))));
  }
  if (axis == ScanAxis::kepler_eps_vs_orbits) {
    if (orbits.empty() || !std::is_sorted(orbits.begin(), orbits.end())) {
      throw ConfigError("scan: kepler grid needs an ascending orbits list");
    }
    if (orbits.front() <= 0.0) throw ConfigError("scan: orbit counts must be positive");
  }
  if (axis == ScanAxis::custom) {
    if (custom_param.empty()) throw ConfigError("scan: custom axis needs custom_param");
    const int idx = state_index(custom_param);
    if (idx >= system.dimension()) throw ConfigError("scan: state index out of range");
    if (idx < 0) {
      SystemSpec probe = system;
      probe.params[custom_param] = 0.0;
      probe.validate();
    }
  }
  if (axis == ScanAxis::threebody_time_window && !(window_length > 0.0)) {
    throw ConfigError("scan: window_length must be positive");
  }
  if (x0 && x0->size() != system.dimension()) {
    throw DimensionError("scan: x0 has wrong dimension");
  }
  if (!(fixed_L >= 0.0)) throw ConfigError("scan: fixed_L must be >= 0");
  if (seeds < 1) throw ConfigError("scan: seeds must be >= 1");
  if (!(desk_scale > 0.0)) throw ConfigError("scan: desk_scale must be positive");
  if (max_points < 2) throw ConfigError("scan: max_points must be >= 2");
  if (!(eps_p > 0.0 && eps_p < 1.0)) throw ConfigError("scan: eps_p must lie in (0, 1)");
  train.validate();
  sampler.validate();
}

nlohmann::json ScanResult::to_json() const {
  nlohmann::json j;
  j["axis"] = std::string(to_string(axis));
  j["values"] = values;
  j["n_eff_mean"] = n_eff_mean;
  j["n_eff_std"] = n_eff_std;
  j["n_linear"] = n_linear;
  j["rounded"] = rounded;
  j["transitions"] = transitions;
  j["crossings_1_5"] = crossings;
  nlohmann::json errs = nlohmann::json::object();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (failed[i]) errs[std::to_string(values[i])] = errors[i];
  }
  j["errors"] = errs;
  return j;
}

nlohmann::json KeplerGrid::to_json() const {
  nlohmann::json j;
  j["eps"] = eps;
  j["orbits"] = orbits;
  j["level"] = level;
  auto rows = [](const Matrix& m) {
    nlohmann::json out = nlohmann::json::array();
    for (long r = 0; r < m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (long c = 0; c < m.cols(); ++c) {
        row.push_back(std::isnan(m(r, c)) ? nlohmann::json() : nlohmann::json(m(r, c)));
      }
      out.push_back(row);
    }
    return out;
  };
  j["n_eff"] = rows(n_eff);
  j["n_eff_std"] = rows(n_eff_std);
  j["errors"] = errors;
  nlohmann::json contour = nlohmann::json::array();
  for (const auto& c : contour_orbits) contour.push_back(c ? nlohmann::json(*c) : nlohmann::json());
  j["contour_orbits"] = contour;
  j["contour_slope"] = contour_slope ? nlohmann::json(*contour_slope) : nlohmann::json();
  return j;
}

PointEstimate estimate_n_eff(const PointCloud& raw, double L, double eps_p,
                             const TrainConfig& train,
                             const SamplerConfig& sampler, std::uint64_t seed) {
  const WhitenModel model = fit_whiten(raw, eps_p, true);
  const PointCloud white = apply_whiten(model, raw);
  if (white.cols() == 0) {
    throw InsufficientDataError("scan: every direction is a linear invariant");
  }
  TrainConfig cfg = train;
  cfg.L = L;
  cfg.seed = derive_seed(seed, 0);
  const PullNetwork net = train_pull(white, cfg);
  long start = sampler.start_index < 0 ? white.rows() / 2 : sampler.start_index;
  if (start >= white.rows()) throw ConfigError("scan: start_index beyond data");
  Rng rng(derive_seed(seed, 1));
  const SampleCloud cloud = walk_pull_chain(net, white.row(start).transpose(),
                                            sampler.chain_length, rng, sampler.mode);
  PointEstimate out;
  out.n_eff = n_eff_of_ratios(local_pca(cloud.samples), static_cast<int>(white.cols()));
  out.n_linear = static_cast<int>(model.removed.size());
  out.losses = net.losses;
  return out;
}

double kepler_period(const Vector& x) {
  const double r = std::hypot(x(0), x(1));
  const double v2 = x(2) * x(2) + x(3) * x(3);
  const double inv_a = 2.0 / r - v2;
  if (!(inv_a > 0.0)) throw ConfigError("kepler_period: orbit is not bound");
  return 2.0 * std::numbers::pi * std::pow(1.0 / inv_a, 1.5);
}

long apoapsis_index(const PointCloud& points, long centre, long half_window) {
  if (points.rows() == 0 || points.cols() < 2) {
    throw InsufficientDataError("apoapsis_index: need planar points");
  }
  const long lo = std::max(0L, centre - half_window);
  const long hi = std::min<long>(points.rows() - 1, centre + half_window);
  if (lo > hi) throw ConfigError("apoapsis_index: centre outside data");
  long best = lo;
  double best_r2 = -1.0;
  for (long i = lo; i <= hi; ++i) {
    const double r2 = points(i, 0) * points(i, 0) + points(i, 1) * points(i, 1);
    if (r2 > best_r2) {
      best_r2 = r2;
      best = i;
    }
  }
  return best;
}

SystemSpec scan_system(const ScanSpec& spec, double value) {
  SystemSpec sys = spec.system;
  if (spec.axis == ScanAxis::custom && state_index(spec.custom_param) < 0) {
    sys.params[spec.custom_param] = value;
  }
  if (spec.axis == ScanAxis::kepler_eps_vs_orbits) sys.params["eps"] = value;
  return sys;
}

Vector scan_initial_state(const ScanSpec& spec, double value) {
  const SystemSpec sys = scan_system(spec, value);
  Vector x = spec.x0 ? *spec.x0 : sys.default_initial_state();
  switch (spec.axis) {
    case ScanAxis::pendulum_theta0: {
      const double theta = value * std::numbers::pi / 180.0;
      x << theta, theta, 0.0, 0.0;
      break;
    }
    case ScanAxis::mirror_v0: {
      const double v = value / std::sqrt(2.0);
      x << 0.0, 0.0, v, v;
      break;
    }
    case ScanAxis::custom: {
      const int idx = state_index(spec.custom_param);
      if (idx >= 0) x(idx) = value;
      break;
    }
    default:
      break;
  }
  return x;
}

namespace {

long scaled_steps(const SystemSpec& sys, double desk_scale) {
  return std::max(1L, std::lround(static_cast<double>(sys.default_steps()) * desk_scale));
}

long stride_for(long n_steps, long max_points) {
  return std::max(1L, (n_steps + max_points - 1) / max_points);
}

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;
  int n_linear = 0;
};

Aggregate aggregate_seeds(const PointCloud& raw, const ScanSpec& spec,
                          std::size_t index) {
  std::vector<double> vals;
  Aggregate agg;
  for (int k = 0; k < spec.seeds; ++k) {
    const PointEstimate est =
        estimate_n_eff(raw, spec.fixed_L, spec.eps_p, spec.train, spec.sampler,
                       derive_seed(spec.seed, index, static_cast<std::uint64_t>(k)));
    vals.push_back(est.n_eff);
    agg.n_linear = est.n_linear;
  }
  for (double v : vals) agg.mean += v;
  agg.mean /= static_cast<double>(vals.size());
  for (double v : vals) agg.std += (v - agg.mean) * (v - agg.mean);
  agg.std = vals.size() > 1 ? std::sqrt(agg.std / static_cast<double>(vals.size() - 1)) : 0.0;
  return agg;
}

ScanResult empty_result(ScanAxis axis, const std::vector<double>& values) {
  ScanResult r;
  r.axis = axis;
  r.values = values;
  const std::size_t n = values.size();
  r.n_eff_mean.assign(n, 0.0);
  r.n_eff_std.assign(n, 0.0);
  r.n_linear.assign(n, 0);
  r.rounded.assign(n, 0);
  r.failed.assign(n, false);
  r.errors.assign(n, std::string());
  return r;
}

void finalize(ScanResult& r) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!r.failed[i]) {
      r.rounded[i] = r.n_linear[i] + static_cast<int>(std::lround(r.n_eff_mean[i]));
    }
  }
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r.failed[i]) continue;
    if (prev) {
      if (r.rounded[i] != r.rounded[*prev]) r.transitions.push_back(r.values[i]);
      const double a = r.n_eff_mean[*prev] - 1.5;
      const double b = r.n_eff_mean[i] - 1.5;
      if ((a < 0.0) != (b < 0.0)) {
        const double f = a / (a - b);
        r.crossings.push_back(r.values[*prev] + f * (r.values[i] - r.values[*prev]));
      }
    }
    prev = i;
  }
}

}  // namespace

ScanResult run_scan(const ScanSpec& spec) {
  spec.validate();
  if (spec.axis == ScanAxis::kepler_eps_vs_orbits) {
    throw ConfigError("scan: the kepler grid is two-dimensional; use run_kepler_grid");
  }
  if (spec.axis == ScanAxis::threebody_time_window) {
    const SystemSpec sys = spec.system;
    const Vector x0 = spec.x0 ? *spec.x0 : sys.default_initial_state();
    const long n = scaled_steps(sys, spec.desk_scale);
    const Trajectory traj = simulate(sys, x0, sys.default_dt(), n,
                                     stride_for(n, spec.max_points));
    std::vector<std::pair<double, double>> windows;
    for (double t0 : spec.values) windows.emplace_back(t0, t0 + spec.window_length);
    return time_window_scan(traj, windows, spec);
  }

  ScanResult result = empty_result(spec.axis, spec.values);
  parallel_for(spec.values.size(), spec.jobs, [&](std::size_t i) {
    try {
      const SystemSpec sys = scan_system(spec, spec.values[i]);
      const Vector x0 = scan_initial_state(spec, spec.values[i]);
      const long n = scaled_steps(sys, spec.desk_scale);
      const Trajectory traj = simulate(sys, x0, sys.default_dt(), n,
                                       stride_for(n, spec.max_points));
      const Aggregate agg = aggregate_seeds(traj.points, spec, i);
      result.n_eff_mean[i] = agg.mean;
      result.n_eff_std[i] = agg.std;
      result.n_linear[i] = agg.n_linear;
    } catch (const Error& e) {
      result.failed[i] = true;
      result.errors[i] = e.what();
    }
  });
  finalize(result);
  return result;
}

ScanResult time_window_scan(const Trajectory& traj,
                            const std::vector<std::pair<double, double>>& windows,
                            const ScanSpec& spec) {
  std::vector<double> starts;
  for (const auto& w : windows) starts.push_back(w.first);
  ScanResult result = empty_result(ScanAxis::threebody_time_window, starts);
  const double t_end = traj.times.empty() ? 0.0 : traj.times.back();
  parallel_for(windows.size(), spec.jobs, [&](std::size_t i) {
    try {
      const auto [t0, t1] = windows[i];
      if (t0 < 0.0 || t1 > t_end + 1e-9 || !(t1 > t0)) {
        throw ConfigError("window outside trajectory span");
      }
      const PointCloud raw = traj.window(t0, t1);
      if (raw.rows() < 2 * (raw.cols() + 1)) {
        throw InsufficientDataError("window has too few points (" +
                                    std::to_string(raw.rows()) + ")");
      }
      const Aggregate agg = aggregate_seeds(raw, spec, i);
      result.n_eff_mean[i] = agg.mean;
      result.n_eff_std[i] = agg.std;
      result.n_linear[i] = agg.n_linear;
    } catch (const Error& e) {
      result.failed[i] = true;
      result.errors[i] = std::string("skipped: ") + e.what();
    }
  });
  finalize(result);
  return result;
}

KeplerGrid run_kepler_grid(const ScanSpec& spec) {
  spec.validate();
  if (spec.axis != ScanAxis::kepler_eps_vs_orbits) {
    throw ConfigError("run_kepler_grid: axis must be kepler_eps_vs_orbits");
  }
  KeplerGrid grid;
  grid.eps = spec.values;
  grid.orbits = spec.orbits;
  const long n_eps = static_cast<long>(spec.values.size());
  const long n_orb = static_cast<long>(spec.orbits.size());
  grid.n_eff = Matrix::Constant(n_eps, n_orb, std::nan(""));
  grid.n_eff_std = Matrix::Constant(n_eps, n_orb, std::nan(""));
  grid.errors.assign(static_cast<std::size_t>(n_eps * n_orb), "");

  const Vector x0 = spec.x0 ? *spec.x0 : spec.system.default_initial_state();
  const double period = kepler_period(x0);
  const double dt = spec.system.default_dt();

  parallel_for(static_cast<std::size_t>(n_eps * n_orb), spec.jobs, [&](std::size_t k) {
    const long e = static_cast<long>(k) / n_orb;
    const long o = static_cast<long>(k) % n_orb;
    const SystemSpec sys = scan_system(spec, spec.values[e]);
    const long n = std::max(1L, std::lround(spec.orbits[o] * period / dt));
    try {
      const long stride = stride_for(n, spec.max_points);
      const Trajectory run = simulate(sys, x0, dt, n, stride);
      ScanSpec cell = spec;
      if (cell.sampler.start_index < 0) {
        // The midpoint phase varies with the orbit count; near periapsis the
        // orbit bends on the scale of L and reads as one dimension higher.
        const long per_orbit = std::max(1L, std::lround(period / (dt * stride)));
        cell.sampler.start_index =
            apoapsis_index(run.points, run.points.rows() / 2, per_orbit / 2 + 1);
      }
      const Aggregate agg = aggregate_seeds(run.points, cell, k);
      grid.n_eff(e, o) = agg.mean;
      grid.n_eff_std(e, o) = agg.std;
    } catch (const Error& err) {
      // Left as NaN; the contour ignores missing cells.
      grid.errors[k] = err.what();
    }
  });

  std::vector<double> log_eps, log_orb;
  for (long e = 0; e < n_eps; ++e) {
    std::optional<double> crossing;
    for (long o = 0; o + 1 < n_orb; ++o) {
      const double a = grid.n_eff(e, o);
      const double b = grid.n_eff(e, o + 1);
      if (std::isnan(a) || std::isnan(b)) continue;
      if (a >= grid.level && b < grid.level) {
        const double f = (a - grid.level) / (a - b);
        const double la = std::log10(spec.orbits[o]);
        const double lb = std::log10(spec.orbits[o + 1]);
        crossing = std::pow(10.0, la + f * (lb - la));
        break;
      }
    }
    grid.contour_orbits.push_back(crossing);
    if (crossing && spec.values[e] > 0.0) {
      log_eps.push_back(std::log10(spec.values[e]));
      log_orb.push_back(std::log10(*crossing));
    }
  }
  if (log_eps.size() >= 2) {
    double me = 0.0, mo = 0.0;
    for (std::size_t i = 0; i < log_eps.size(); ++i) {
      me += log_eps[i];
      mo += log_orb[i];
    }
    me /= static_cast<double>(log_eps.size());
    mo /= static_cast<double>(log_eps.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < log_eps.size(); ++i) {
      sxy += (log_eps[i] - me) * (log_orb[i] - mo);
      sxx += (log_eps[i] - me) * (log_eps[i] - me);
    }
    if (sxx > 0.0) grid.contour_slope = sxy / sxx;
  }
  return grid;
}

MaximizeResult maximize_neff(const ScanSpec& spec, double lo, double hi,
                             int iterations, double flat_tolerance) {
  if (!(hi > lo)) throw ConfigError("maximize_neff: empty bracket");
  if (iterations < 1) throw ConfigError("maximize_neff: iterations must be >= 1");
  if (spec.axis == ScanAxis::kepler_eps_vs_orbits ||
      spec.axis == ScanAxis::threebody_time_window) {
    throw ConfigError("maximize_neff: axis must select an initial condition");
  }
  MaximizeResult result;
  std::size_t counter = 0;
  auto f = [&](double v) {
    ScanSpec one = spec;
    one.values = {v};
    one.seed = derive_seed(spec.seed, counter++);
    const ScanResult r = run_scan(one);
    if (r.failed[0]) throw Error("maximize_neff: evaluation failed at " +
                                 std::to_string(v) + ": " + r.errors[0]);
    result.evaluations.emplace_back(v, r.n_eff_mean[0]);
    return r.n_eff_mean[0];
  };

  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iterations; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  const auto best = std::max_element(
      result.evaluations.begin(), result.evaluations.end(),
      [](const auto& x, const auto& y) { return x.second < y.second; });
  const auto worst = std::min_element(
      result.evaluations.begin(), result.evaluations.end(),
      [](const auto& x, const auto& y) { return x.second < y.second; });
  if (best->second - worst->second < flat_tolerance) {
    throw NoMaxFoundError("maximize_neff: flat response (n_eff spread " +
                          std::to_string(best->second - worst->second) + ")");
  }
  result.value = best->first;
  result.n_eff = best->second;
  return result;
}

void write_scan_csv(const ScanResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.precision(17);
  out << "axis_value,n_eff_mean,n_eff_std,rounded\n";
  for (std::size_t i = 0; i < result.size(); ++i) {
    if (result.failed[i]) {
      out << result.values[i] << ",nan,nan,\n";
    } else {
      out << result.values[i] << ',' << result.n_eff_mean[i] << ','
          << result.n_eff_std[i] << ',' << result.rounded[i] << '\n';
    }
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

void write_kepler_grid_csv(const KeplerGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.precision(17);
  out << "eps,orbits,n_eff\n";
  for (std::size_t e = 0; e < grid.eps.size(); ++e) {
    for (std::size_t o = 0; o < grid.orbits.size(); ++o) {
      out << grid.eps[e] << ',' << grid.orbits[o] << ','
          << grid.n_eff(static_cast<long>(e), static_cast<long>(o)) << '\n';
    }
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace poincare
