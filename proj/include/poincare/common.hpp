#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace poincare {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Point clouds are stored one point per row.
using PointCloud = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Integration hit r -> 0 (or produced a non-finite derivative).
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, long step = -1)
      : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Training loss or a sampling chain left the finite range.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step)
      : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a root seed and a task counter
/// (splitmix64 finalizer). Parallel subtasks seeded this way do not depend on
/// scheduling order.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t counter) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                                 std::uint64_t b) {
  return derive_seed(derive_seed(root, a), b);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite();
}

}  // namespace poincare
