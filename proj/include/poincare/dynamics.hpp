#pragma once

#include "poincare/common.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace poincare {

enum class SystemKind { harmonic, kepler, pendulum, mirror, threebody };

std::string_view to_string(SystemKind kind);
SystemKind system_kind_from_string(std::string_view name);

/// One of the five Hamiltonian test systems plus its named parameters.
///
/// Recognized parameters:
///   kepler:    eps  (force F = r^-(2+eps), default 0)
///   threebody: mass (default 5e6), G is fixed to 1
/// Unknown parameter names are rejected by validate().
struct SystemSpec {
  SystemKind kind = SystemKind::harmonic;
  std::map<std::string, double> params;

  static SystemSpec make(SystemKind kind);

  double param(const std::string& name) const;
  void validate() const;

  /// Phase-space dimension N = 2kd.
  int dimension() const;
  /// Number of independent conserved quantities of the unperturbed system.
  int ground_truth_n() const;

  /// Right-hand side f(x, t) of dx/dt = f.
  Vector derivative(const Vector& x, double t = 0.0) const;

  /// Total energy in the system's own coordinates.
  double hamiltonian(const Vector& x) const;

  // Paper-length run settings.
  double default_dt() const;
  long default_steps() const;
  Vector default_initial_state() const;
};

// Pairwise distances below this abort integration.
inline constexpr double kSingularityRadius = 1e-6;

Vector rk4_step(const SystemSpec& sys, const Vector& x, double t, double dt);

struct Trajectory {
  SystemSpec system;
  Vector x0;
  double dt = 0.0;
  long stride = 1;    // integration steps per recorded row
  PointCloud points;  // (n_steps / stride + 1) x N
  std::vector<double> times;
  std::uint64_t seed = 0;

  long size() const { return static_cast<long>(points.rows()); }
  int dimension() const { return static_cast<int>(points.cols()); }
  Vector point(long i) const { return points.row(i).transpose(); }

  /// Rows with time in [t0, t1].
  PointCloud window(double t0, double t1) const;
};

/// Fixed-step RK4 integration. Pendulum angles are kept in [-pi, pi]; the
/// equations of motion are 2pi-periodic, so this only changes the chart.
/// Throws SingularityError carrying the step index. With stride > 1 only
/// every stride-th state is recorded.
Trajectory simulate(const SystemSpec& sys, const Vector& x0, double dt,
                    long n_steps, long stride = 1);

double hamiltonian_value(const SystemSpec& sys, const Vector& x);

/// Maps each angle to [-pi, pi].
Vector wrap_angles(const Vector& angles);

// Double-pendulum helpers (m1 = m2 = l1 = l2 = 1, g = 10).
Vector pendulum_canonical_momenta(const Vector& x);

/// Initial state of an equal-mass hierarchical triple: a tight binary of
/// separation `inner_sep` on a circular orbit, orbited by a third body at
/// distance `outer_sep` from the binary's centre of mass. Total momentum is
/// zero and the centre of mass sits at the origin. Speed factors below 1
/// start the corresponding orbit at apocentre of an eccentric ellipse.
Vector hierarchical_triple(double mass, double inner_sep, double outer_sep,
                           double outer_speed_factor = 1.0,
                           double phase = 0.0,
                           double inner_speed_factor = 1.0);

// CSV with header t,x0,...,x{N-1} plus a JSON sidecar (path + ".json").
void write_trajectory(const Trajectory& traj, const std::string& csv_path);
Trajectory read_trajectory(const std::string& csv_path);

/// Reads a bare point table (CSV with optional header). Used for data that
/// did not come from simulate, e.g. noise files.
PointCloud read_points_csv(const std::string& path, bool skip_time_column);

}  // namespace poincare
