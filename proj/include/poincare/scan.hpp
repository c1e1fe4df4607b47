#pragma once

#include "poincare/common.hpp"
#include "poincare/dynamics.hpp"
#include "poincare/preprocess.hpp"
#include "poincare/pullnet.hpp"
#include "poincare/sampler.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace poincare {

enum class ScanAxis {
  kepler_eps_vs_orbits,
  pendulum_theta0,       // degrees, theta1 = theta2 = value, zero velocities
  mirror_v0,             // start at the origin with rho_dot = z_dot = v0/sqrt(2)
  threebody_time_window, // values are window start times
  custom,                // sets custom_param ("name" or "x0[i]") to each value
};

std::string_view to_string(ScanAxis axis);
ScanAxis scan_axis_from_string(std::string_view name);

struct ScanSpec {
  SystemSpec system;
  ScanAxis axis = ScanAxis::custom;
  std::vector<double> values;
  std::vector<double> orbits;    // kepler grid only
  std::string custom_param;
  double window_length = 50.0;   // threebody_time_window only
  std::optional<Vector> x0;      // overrides the system default where used
  double fixed_L = 0.1;
  int seeds = 3;
  double desk_scale = 1.0;       // multiplies the system's default step count
  long max_points = 200000;      // longer runs are recorded with a stride
  double eps_p = kDefaultEpsP;
  TrainConfig train;
  SamplerConfig sampler;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

struct ScanResult {
  ScanAxis axis = ScanAxis::custom;
  std::vector<double> values;
  std::vector<double> n_eff_mean;
  std::vector<double> n_eff_std;
  std::vector<int> n_linear;
  std::vector<int> rounded;  // n_linear + round(n_eff_mean)
  std::vector<bool> failed;
  std::vector<std::string> errors;
  std::vector<double> transitions;  // values where the rounded count changes
  std::vector<double> crossings;    // where n_eff_mean crosses 1.5 (interpolated)

  std::size_t size() const { return values.size(); }
  nlohmann::json to_json() const;
};

struct KeplerGrid {
  std::vector<double> eps;
  std::vector<double> orbits;
  Matrix n_eff;      // eps x orbits
  Matrix n_eff_std;
  std::vector<std::string> errors;  // row-major over (eps, orbits); empty when ok
  std::vector<std::optional<double>> contour_orbits;  // n_eff = level crossing per eps
  std::optional<double> contour_slope;  // d log(orbits) / d log(eps)
  double level = 2.5;
  nlohmann::json to_json() const;
};

struct PointEstimate {
  double n_eff = 0.0;
  int n_linear = 0;
  TrainLosses losses;
};

/// Whitens `raw`, trains one pull network at `L`, samples from the midpoint
/// and returns n_eff of the local explained ratios.
PointEstimate estimate_n_eff(const PointCloud& raw, double L, double eps_p,
                             const TrainConfig& train,
                             const SamplerConfig& sampler, std::uint64_t seed);

/// Orbital period of the unperturbed Kepler orbit through x (bound orbits only).
double kepler_period(const Vector& x);

/// Index of the largest x^2 + y^2 among rows within `half_window` of `centre`.
long apoapsis_index(const PointCloud& points, long centre, long half_window);

/// Initial state for one axis value (not used by time windows).
Vector scan_initial_state(const ScanSpec& spec, double value);
SystemSpec scan_system(const ScanSpec& spec, double value);

ScanResult run_scan(const ScanSpec& spec);
ScanResult time_window_scan(const Trajectory& traj,
                            const std::vector<std::pair<double, double>>& windows,
                            const ScanSpec& spec);
/// Each cell starts its walk at the apoapsis nearest the run midpoint unless
/// sampler.start_index is set, so every cell probes the same orbital phase.
KeplerGrid run_kepler_grid(const ScanSpec& spec);

struct MaximizeResult {
  double value = 0.0;
  double n_eff = 0.0;
  std::vector<std::pair<double, double>> evaluations;
};

class NoMaxFoundError : public Error {
 public:
  using Error::Error;
};

/// Golden-section search for the axis value maximizing the seed-averaged
/// n_eff inside [lo, hi]. Throws NoMaxFoundError when the evaluated values
/// span less than `flat_tolerance`.
MaximizeResult maximize_neff(const ScanSpec& spec, double lo, double hi,
                             int iterations = 6, double flat_tolerance = 0.3);

void write_scan_csv(const ScanResult& result, const std::string& path);
void write_kepler_grid_csv(const KeplerGrid& grid, const std::string& path);

}  // namespace poincare
