#include "poincare/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace poincare {

namespace {

constexpr double kPendulumGravity = 10.0;

void require_dim(const SystemSpec& sys, const Vector& x) {
  if (x.size() != sys.dimension()) {
    std::ostringstream msg;
    msg << to_string(sys.kind) << ": expected state of dimension "
        << sys.dimension() << ", got " << x.size();
    throw DimensionError(msg.str());
  }
}

double checked_radius(double dx, double dy, const char* what) {
  const double r = std::hypot(dx, dy);
  if (!(r >= kSingularityRadius)) {
    std::ostringstream msg;
    msg << "integration singularity: " << what << " distance " << r;
    throw SingularityError(msg.str());
  }
  return r;
}

const char* kPairNames[3] = {"bodies 1-2", "bodies 1-3", "bodies 2-3"};

}  // namespace

std::string_view to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::harmonic: return "harmonic";
    case SystemKind::kepler: return "kepler";
    case SystemKind::pendulum: return "pendulum";
    case SystemKind::mirror: return "mirror";
    case SystemKind::threebody: return "threebody";
  }
  return "unknown";
}

SystemKind system_kind_from_string(std::string_view name) {
  for (auto kind : {SystemKind::harmonic, SystemKind::kepler,
                    SystemKind::pendulum, SystemKind::mirror,
                    SystemKind::threebody}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown system '" + std::string(name) + "'");
}

SystemSpec SystemSpec::make(SystemKind kind) {
  SystemSpec spec;
  spec.kind = kind;
  if (kind == SystemKind::kepler) spec.params["eps"] = 0.0;
  if (kind == SystemKind::threebody) spec.params["mass"] = 5e6;
  return spec;
}

double SystemSpec::param(const std::string& name) const {
  auto it = params.find(name);
  if (it != params.end()) return it->second;
  if (kind == SystemKind::kepler && name == "eps") return 0.0;
  if (kind == SystemKind::threebody && name == "mass") return 5e6;
  throw ConfigError(std::string(to_string(kind)) + ": no parameter '" + name +
                    "'");
}

void SystemSpec::validate() const {
  for (const auto& [key, value] : params) {
    const bool known = (kind == SystemKind::kepler && key == "eps") ||
                       (kind == SystemKind::threebody && key == "mass");
    if (!known) {
      throw ConfigError(std::string(to_string(kind)) +
                        ": unknown parameter '" + key + "'");
    }
    if (!std::isfinite(value)) {
      throw ConfigError("parameter '" + key + "' is not finite");
    }
  }
  if (kind == SystemKind::threebody && param("mass") <= 0.0) {
    throw ConfigError("threebody: mass must be positive");
  }
}

int SystemSpec::dimension() const {
  switch (kind) {
    case SystemKind::harmonic: return 2;
    case SystemKind::kepler: return 4;
    case SystemKind::pendulum: return 4;
    case SystemKind::mirror: return 4;
    case SystemKind::threebody: return 12;
  }
  return 0;
}

int SystemSpec::ground_truth_n() const {
  switch (kind) {
    case SystemKind::harmonic: return 1;
    case SystemKind::kepler: return 3;
    case SystemKind::pendulum: return 1;
    case SystemKind::mirror: return 1;
    case SystemKind::threebody: return 6;
  }
  return 0;
}

Vector SystemSpec::derivative(const Vector& x, double /*t*/) const {
  require_dim(*this, x);
  Vector dx(x.size());
  switch (kind) {
    case SystemKind::harmonic:
      dx << x(1), -x(0);
      break;
    case SystemKind::kepler: {
      const double eps = param("eps");
      const double r = checked_radius(x(0), x(1), "orbital");
      // |a| = r^-(2+eps), directed toward the origin.
      const double scale = -std::pow(r, -(3.0 + eps));
      dx << x(2), x(3), scale * x(0), scale * x(1);
      break;
    }
    case SystemKind::pendulum: {
      const double th1 = x(0), th2 = x(1), w1 = x(2), w2 = x(3);
      const double delta = th1 - th2;
      const double c = std::cos(delta), s = std::sin(delta);
      // Mass matrix [[2, c], [c, 1]] times accelerations.
      const double rhs1 = -w2 * w2 * s - 2.0 * kPendulumGravity * std::sin(th1);
      const double rhs2 = w1 * w1 * s - kPendulumGravity * std::sin(th2);
      const double det = 2.0 - c * c;
      dx << w1, w2, (rhs1 - c * rhs2) / det, (2.0 * rhs2 - c * rhs1) / det;
      break;
    }
    case SystemKind::mirror: {
      const double rho = x(0), z = x(1);
      dx << x(2), x(3), -rho * (1.0 + z * z), -z / 5.0 - rho * rho * z;
      break;
    }
    case SystemKind::threebody: {
      const double m = param("mass");
      dx.head<6>() = x.tail<6>();
      dx.tail<6>().setZero();
      int pair = 0;
      for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j, ++pair) {
          const double ddx = x(2 * j) - x(2 * i);
          const double ddy = x(2 * j + 1) - x(2 * i + 1);
          const double r = checked_radius(ddx, ddy, kPairNames[pair]);
          const double f = m / (r * r * r);
          dx(6 + 2 * i) += f * ddx;
          dx(6 + 2 * i + 1) += f * ddy;
          dx(6 + 2 * j) -= f * ddx;
          dx(6 + 2 * j + 1) -= f * ddy;
        }
      }
      break;
    }
  }
  if (!dx.allFinite()) {
    throw SingularityError(std::string(to_string(kind)) +
                           ": non-finite derivative");
  }
  return dx;
}

double SystemSpec::hamiltonian(const Vector& x) const {
  require_dim(*this, x);
  switch (kind) {
    case SystemKind::harmonic:
      return 0.5 * (x(0) * x(0) + x(1) * x(1));
    case SystemKind::kepler: {
      const double eps = param("eps");
      const double r = checked_radius(x(0), x(1), "orbital");
      const double kinetic = 0.5 * (x(2) * x(2) + x(3) * x(3));
      // Potential of F = r^-(2+eps); reduces to -1/r at eps = 0.
      if (eps == 0.0) return kinetic - 1.0 / r;
      return kinetic - std::pow(r, -(1.0 + eps)) / (1.0 + eps);
    }
    case SystemKind::pendulum: {
      const double th1 = x(0), th2 = x(1), w1 = x(2), w2 = x(3);
      return -20.0 * std::cos(th1) - 10.0 * std::cos(th2) + w1 * w1 +
             0.5 * w2 * w2 + w1 * w2 * std::cos(th1 - th2);
    }
    case SystemKind::mirror: {
      const double rho = x(0), z = x(1);
      return 0.5 * (x(2) * x(2) + x(3) * x(3)) +
             0.5 * (rho * rho + z * z / 5.0 + rho * rho * z * z);
    }
    case SystemKind::threebody: {
      const double m = param("mass");
      double kinetic = 0.0;
      for (int i = 6; i < 12; ++i) kinetic += x(i) * x(i);
      kinetic *= 0.5 * m;
      double inv_r = 0.0;
      int pair = 0;
      for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j, ++pair) {
          inv_r += 1.0 / checked_radius(x(2 * j) - x(2 * i),
                                        x(2 * j + 1) - x(2 * i + 1),
                                        kPairNames[pair]);
        }
      }
      return kinetic - m * m * inv_r;
    }
  }
  return 0.0;
}

double SystemSpec::default_dt() const {
  switch (kind) {
    case SystemKind::harmonic:
    case SystemKind::kepler:
      return 1e-2;
    default:
      return 1e-3;
  }
}

long SystemSpec::default_steps() const {
  switch (kind) {
    case SystemKind::harmonic: return 1000;
    case SystemKind::kepler: return 100000;
    case SystemKind::pendulum: return 1000000;
    case SystemKind::mirror: return 100000;
    case SystemKind::threebody: return 200000;
  }
  return 0;
}

Vector SystemSpec::default_initial_state() const {
  Vector x(dimension());
  switch (kind) {
    case SystemKind::harmonic:
      x << 1.0, 0.0;
      break;
    case SystemKind::kepler:
      x << 1.0, 0.0, 0.0, 1.2;
      break;
    case SystemKind::pendulum:
      // Outer arm raised to 160 degrees: chaotic, with energy just below the
      // level at which either arm could swing over the top.
      x << 0.0, 160.0 * std::numbers::pi / 180.0, 0.0, 0.0;
      break;
    case SystemKind::mirror: {
      const double v = 1.5 / std::sqrt(2.0);
      x << 0.0, 0.0, v, v;
      break;
    }
    case SystemKind::threebody:
      x = hierarchical_triple(param("mass"), 100.0, 250.0, 1.0, 0.0, 0.9);
      break;
  }
  return x;
}

Vector hierarchical_triple(double mass, double inner_sep, double outer_sep,
                           double outer_speed_factor, double phase,
                           double inner_speed_factor) {
  // Circular two-body speeds with G = 1, scaled by the speed factors.
  const double v_inner =
      inner_speed_factor * std::sqrt(2.0 * mass / inner_sep);
  const double v_outer =
      outer_speed_factor * std::sqrt(3.0 * mass / outer_sep);

  // Binary (bodies 1, 2) around its own centre of mass.
  const double c = std::cos(phase), s = std::sin(phase);
  Eigen::Vector2d r1(-0.5 * inner_sep * c, -0.5 * inner_sep * s);
  Eigen::Vector2d r2 = -r1;
  Eigen::Vector2d v1(0.5 * v_inner * s, -0.5 * v_inner * c);
  Eigen::Vector2d v2 = -v1;

  // Outer relative orbit; binary COM at -R/3, third body at 2R/3.
  Eigen::Vector2d rel(outer_sep, 0.0);
  Eigen::Vector2d vrel(0.0, v_outer);
  Eigen::Vector2d com_b = -rel / 3.0, com_v = -vrel / 3.0;
  Eigen::Vector2d r3 = 2.0 * rel / 3.0, v3 = 2.0 * vrel / 3.0;

  Vector x(12);
  x << r1 + com_b, r2 + com_b, r3, v1 + com_v, v2 + com_v, v3;
  return x;
}

Vector wrap_angles(const Vector& angles) {
  Vector out = angles;
  for (long i = 0; i < out.size(); ++i) {
    out(i) = std::remainder(out(i), 2.0 * std::numbers::pi);
  }
  return out;
}

Vector pendulum_canonical_momenta(const Vector& x) {
  const double c = std::cos(x(0) - x(1));
  Vector p(2);
  p << 2.0 * x(2) + c * x(3), x(3) + c * x(2);
  return p;
}

Vector rk4_step(const SystemSpec& sys, const Vector& x, double t, double dt) {
  if (dt == 0.0) return x;
  const Vector k1 = sys.derivative(x, t);
  const Vector k2 = sys.derivative(x + 0.5 * dt * k1, t + 0.5 * dt);
  const Vector k3 = sys.derivative(x + 0.5 * dt * k2, t + 0.5 * dt);
  const Vector k4 = sys.derivative(x + dt * k3, t + dt);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double hamiltonian_value(const SystemSpec& sys, const Vector& x) {
  return sys.hamiltonian(x);
}

Trajectory simulate(const SystemSpec& sys, const Vector& x0, double dt,
                    long n_steps, long stride) {
  sys.validate();
  if (n_steps < 1) throw Error("simulate: n_steps must be >= 1");
  if (!(dt != 0.0) || !std::isfinite(dt)) {
    throw Error("simulate: dt must be finite and nonzero");
  }
  if (x0.size() != sys.dimension()) {
    throw DimensionError("simulate: initial state has wrong dimension");
  }
  if (!x0.allFinite()) throw Error("simulate: initial state not finite");
  if (stride < 1) throw Error("simulate: stride must be >= 1");

  Trajectory traj;
  traj.system = sys;
  traj.x0 = x0;
  traj.dt = dt;
  traj.stride = stride;
  const long n_rows = n_steps / stride + 1;
  traj.points.resize(n_rows, x0.size());
  traj.times.resize(n_rows);
  traj.points.row(0) = x0.transpose();
  traj.times[0] = 0.0;

  Vector x = x0;
  for (long i = 0; i < n_steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    try {
      x = rk4_step(sys, x, t, dt);
    } catch (const SingularityError& e) {
      throw SingularityError(std::string(e.what()) + " at step " +
                                 std::to_string(i),
                             i);
    }
    if (sys.kind == SystemKind::pendulum) x.head<2>() = wrap_angles(x.head<2>());
    if ((i + 1) % stride != 0) continue;
    const long row = (i + 1) / stride;
    traj.points.row(row) = x.transpose();
    traj.times[row] = static_cast<double>(i + 1) * dt;
  }
  return traj;
}

PointCloud Trajectory::window(double t0, double t1) const {
  std::vector<long> rows;
  for (long i = 0; i < size(); ++i) {
    if (times[i] >= t0 && times[i] <= t1) rows.push_back(i);
  }
  PointCloud out(static_cast<long>(rows.size()), points.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<long>(k)) = points.row(rows[k]);
  }
  return out;
}

}  // namespace poincare
