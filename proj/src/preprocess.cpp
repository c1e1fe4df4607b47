#include "poincare/preprocess.hpp"

#include "poincare/io.hpp"

#include <cmath>
#include <numeric>

namespace poincare {

SymmetricEigen symmetric_eigen(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error("symmetric eigendecomposition failed");
  }
  // Eigen returns ascending order.
  SymmetricEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

Matrix covariance(const PointCloud& points, Vector* mean_out) {
  const Vector mean = points.colwise().mean().transpose();
  const Matrix centered = points.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) /
               static_cast<double>(points.rows());
  cov = 0.5 * (cov + cov.transpose());
  if (mean_out) *mean_out = mean;
  return cov;
}

WhitenModel fit_whiten(const PointCloud& points, double eps_p, bool reduce,
                       double eps_n) {
  const long n = points.rows();
  const long dim = points.cols();
  if (n < dim + 1) {
    throw InsufficientDataError("fit_whiten: need at least " +
                                std::to_string(dim + 1) + " points, got " +
                                std::to_string(n));
  }
  if (!(eps_p > 0.0 && eps_p < 1.0)) {
    throw ConfigError("fit_whiten: eps_p must lie in (0, 1)");
  }
  if (!points.allFinite()) throw Error("fit_whiten: non-finite input");

  WhitenModel model;
  model.eps_p = eps_p;
  model.eps_n = eps_n;
  model.reduce = reduce;
  const Matrix cov = covariance(points, &model.mean);
  auto eig = symmetric_eigen(cov);
  model.eigvals = std::move(eig.values);
  model.eigvecs = std::move(eig.vectors);

  const double cutoff = eps_p * model.eigvals.maxCoeff();
  for (int i = 0; i < dim; ++i) {
    if (std::abs(model.eigvals(i)) < cutoff) {
      model.removed.push_back(i);
    } else {
      model.kept.push_back(i);
    }
  }
  return model;
}

std::vector<int> WhitenModel::output_indices() const {
  if (reduce) return kept;
  std::vector<int> all(input_dim());
  std::iota(all.begin(), all.end(), 0);
  return all;
}

namespace {

double component_scale(const WhitenModel& model, int i) {
  const double sd = std::sqrt(std::abs(model.eigvals(i)));
  return model.reduce ? sd : sd + model.eps_n;
}

}  // namespace

Vector apply_whiten(const WhitenModel& model, const Vector& x) {
  if (x.size() != model.input_dim()) {
    throw DimensionError("apply_whiten: expected dimension " +
                         std::to_string(model.input_dim()) + ", got " +
                         std::to_string(x.size()));
  }
  const auto idx = model.output_indices();
  const Vector centered = x - model.mean;
  Vector y(static_cast<long>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    y(static_cast<long>(k)) = model.eigvecs.col(idx[k]).dot(centered) /
                              component_scale(model, idx[k]);
  }
  return y;
}

PointCloud apply_whiten(const WhitenModel& model, const PointCloud& points) {
  if (points.cols() != model.input_dim()) {
    throw DimensionError("apply_whiten: point dimension mismatch");
  }
  const auto idx = model.output_indices();
  Matrix basis(model.input_dim(), static_cast<long>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    basis.col(static_cast<long>(k)) =
        model.eigvecs.col(idx[k]) / component_scale(model, idx[k]);
  }
  return (points.rowwise() - model.mean.transpose()) * basis;
}

Vector invert_whiten(const WhitenModel& model, const Vector& y) {
  const auto idx = model.output_indices();
  if (y.size() != static_cast<long>(idx.size())) {
    throw DimensionError("invert_whiten: dimension mismatch");
  }
  Vector x = model.mean;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    x += model.eigvecs.col(idx[k]) * (y(static_cast<long>(k)) *
                                      component_scale(model, idx[k]));
  }
  return x;
}

std::vector<LinearConservedQuantity> linear_conserved_report(
    const WhitenModel& model) {
  std::vector<LinearConservedQuantity> out;
  for (int i : model.removed) {
    out.push_back({model.eigvecs.col(i), model.eigvals(i)});
  }
  return out;
}

std::vector<NoiseScanRow> noise_eigenvalue_scan(
    const PointCloud& points, const std::vector<double>& sigmas,
    std::uint64_t seed) {
  std::vector<NoiseScanRow> rows;
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    const double sigma = sigmas[k];
    if (!(sigma >= 0.0)) throw ConfigError("noise scan: sigma must be >= 0");
    PointCloud noisy = points;
    if (sigma > 0.0) {
      Rng rng(derive_seed(seed, k));
      std::normal_distribution<double> normal(0.0, sigma);
      for (long j = 0; j < noisy.cols(); ++j) {
        for (long i = 0; i < noisy.rows(); ++i) noisy(i, j) += normal(rng);
      }
    }
    rows.push_back({sigma, symmetric_eigen(covariance(noisy)).values});
  }
  return rows;
}

nlohmann::json WhitenModel::to_json() const {
  nlohmann::json j;
  j["mean"] = to_json_vector(mean);
  j["eigvals"] = to_json_vector(eigvals);
  j["eigvecs"] = to_json_matrix(eigvecs.transpose());  // one vector per row
  j["kept"] = kept;
  j["removed"] = removed;
  j["eps_p"] = eps_p;
  j["eps_n"] = eps_n;
  j["reduce"] = reduce;
  return j;
}

WhitenModel WhitenModel::from_json(const nlohmann::json& j) {
  WhitenModel m;
  m.mean = from_json_vector(j.at("mean"));
  m.eigvals = from_json_vector(j.at("eigvals"));
  m.eigvecs = from_json_matrix(j.at("eigvecs")).transpose();
  m.kept = j.at("kept").get<std::vector<int>>();
  m.removed = j.at("removed").get<std::vector<int>>();
  m.eps_p = j.at("eps_p").get<double>();
  m.eps_n = j.at("eps_n").get<double>();
  m.reduce = j.at("reduce").get<bool>();
  return m;
}

}  // namespace poincare
