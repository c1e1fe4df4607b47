#pragma once

#include "poincare/common.hpp"

#include <json.hpp>

#include <vector>

namespace poincare {

inline constexpr double kDefaultEpsP = 1e-3;
inline constexpr double kDefaultEpsN = 1e-3;

/// Affine prewhitening map fitted to a point cloud.
///
/// Eigenpairs of the (population) covariance are stored in descending order.
/// An eigenvalue counts as vanishing when |lambda_i| < eps_p * max_j lambda_j;
/// its eigenvector then defines a linear conserved quantity e_i . x.
///
/// With `reduce` the output keeps only the non-vanishing directions, each
/// scaled by lambda^-1/2. Without it every direction is kept and divided by
/// lambda^1/2 + eps_n so near-zero eigenvalues do not blow up.
struct WhitenModel {
  Vector mean;
  Vector eigvals;   // descending
  Matrix eigvecs;   // column i pairs with eigvals(i)
  std::vector<int> kept;
  std::vector<int> removed;
  double eps_p = kDefaultEpsP;
  double eps_n = kDefaultEpsN;
  bool reduce = true;

  int input_dim() const { return static_cast<int>(mean.size()); }
  int output_dim() const {
    return reduce ? static_cast<int>(kept.size()) : input_dim();
  }
  /// Eigen-indices that appear in the output, in output order.
  std::vector<int> output_indices() const;

  nlohmann::json to_json() const;
  static WhitenModel from_json(const nlohmann::json& j);
};

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // columns
};

/// Eigendecomposition of a symmetric matrix, sorted descending.
SymmetricEigen symmetric_eigen(const Matrix& sym);

/// Population covariance (divide by n) and mean of the rows.
Matrix covariance(const PointCloud& points, Vector* mean_out = nullptr);

WhitenModel fit_whiten(const PointCloud& points, double eps_p = kDefaultEpsP,
                       bool reduce = true, double eps_n = kDefaultEpsN);

Vector apply_whiten(const WhitenModel& model, const Vector& x);
PointCloud apply_whiten(const WhitenModel& model, const PointCloud& points);

/// Maps whitened coordinates back to the original space. In reduce mode the
/// removed directions are restored at their mean value.
Vector invert_whiten(const WhitenModel& model, const Vector& y);

struct LinearConservedQuantity {
  Vector direction;  // unit eigenvector e_i; H_i(x) = e_i . x
  double eigenvalue;
};

std::vector<LinearConservedQuantity> linear_conserved_report(
    const WhitenModel& model);

struct NoiseScanRow {
  double sigma;
  Vector eigvals;  // descending
};

/// Covariance eigenvalues after adding iid N(0, sigma^2) noise to every
/// coordinate, one row per sigma.
std::vector<NoiseScanRow> noise_eigenvalue_scan(const PointCloud& points,
                                                const std::vector<double>& sigmas,
                                                std::uint64_t seed);

}  // namespace poincare
