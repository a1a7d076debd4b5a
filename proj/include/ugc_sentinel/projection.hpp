#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "ugc_sentinel/error.hpp"

namespace ugcs {

// Fitted 2-D principal-component projector: mean plus two orthonormal axes
// ordered by captured variance. Serializable and reusable on new points.
struct Projector {
  std::vector<double> mean;
  std::vector<double> axis1;
  std::vector<double> axis2;
  double var1 = 0.0;
  double var2 = 0.0;
  double total_variance = 0.0;

  std::size_t dim() const { return mean.size(); }

  std::pair<double, double> project(const std::vector<double>& v) const {
    if (v.size() != mean.size())
      throw ValidationError("Projector::project: dimension mismatch");
    double x = 0.0, y = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double c = v[i] - mean[i];
      x += c * axis1[i];
      y += c * axis2[i];
    }
    return {x, y};
  }

  // Reconstruction of v from its projection; used by the subspace oracle.
  std::vector<double> reconstruct(double x, double y) const {
    std::vector<double> v(mean.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = mean[i] + x * axis1[i] + y * axis2[i];
    return v;
  }

  double captured_fraction() const {
    return total_variance > 0 ? (var1 + var2) / total_variance : 0.0;
  }

  nlohmann::json to_json() const {
    return {{"mean", mean},       {"axis1", axis1}, {"axis2", axis2},
            {"var1", var1},       {"var2", var2},
            {"total_variance", total_variance}};
  }

  static Projector from_json(const nlohmann::json& j) {
    Projector p;
    p.mean = j.at("mean").get<std::vector<double>>();
    p.axis1 = j.at("axis1").get<std::vector<double>>();
    p.axis2 = j.at("axis2").get<std::vector<double>>();
    p.var1 = j.at("var1");
    p.var2 = j.at("var2");
    p.total_variance = j.at("total_variance");
    return p;
  }
};

struct Reduce2dResult {
  Projector projector;
  std::vector<std::pair<double, double>> points;
};

namespace projection_detail {

// Sign convention: the component with the largest magnitude is positive,
// so re-fits produce identical axes.
inline void fix_sign(Eigen::VectorXd& v) {
  int at = 0;
  double best = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      at = i;
    }
  }
  if (v[at] < 0) v = -v;
}

}  // namespace projection_detail

// Principal-component projection onto the top-2 variance axes. Uses the
// d x d covariance when the dimension is modest and the n x n Gram matrix
// otherwise.
inline Reduce2dResult reduce_2d(const std::vector<std::vector<double>>& pts) {
  if (pts.size() < 3)
    throw ValidationError("reduce_2d: need at least 3 points");
  const std::size_t n = pts.size();
  const std::size_t d = pts[0].size();
  if (d < 2) throw ValidationError("reduce_2d: dimension must be >= 2");
  for (const auto& p : pts)
    if (p.size() != d)
      throw ValidationError("reduce_2d: inconsistent dimensions");

  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pts[i][j];

  const Eigen::RowVectorXd mean = X.colwise().mean();
  X.rowwise() -= mean;

  const double denom = static_cast<double>(n - 1);
  const double total_variance = X.squaredNorm() / denom;
  if (total_variance <= 1e-24)
    throw ValidationError("reduce_2d: all points identical (zero variance)");

  Eigen::VectorXd a1, a2;
  double var1 = 0.0, var2 = 0.0;
  if (d <= n || d <= 512) {
    Eigen::MatrixXd cov = X.transpose() * X / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
      throw Error("reduce_2d: eigendecomposition failed");
    const auto& vals = solver.eigenvalues();   // ascending
    const auto& vecs = solver.eigenvectors();
    var1 = vals[static_cast<Eigen::Index>(d) - 1];
    var2 = vals[static_cast<Eigen::Index>(d) - 2];
    a1 = vecs.col(static_cast<Eigen::Index>(d) - 1);
    a2 = vecs.col(static_cast<Eigen::Index>(d) - 2);
  } else {
    // Gram trick: eigenvectors u of XX^T map to axes X^T u.
    Eigen::MatrixXd gram = X * X.transpose() / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
      throw Error("reduce_2d: eigendecomposition failed");
    const auto& vals = solver.eigenvalues();
    const auto& vecs = solver.eigenvectors();
    var1 = vals[static_cast<Eigen::Index>(n) - 1];
    var2 = vals[static_cast<Eigen::Index>(n) - 2];
    a1 = X.transpose() * vecs.col(static_cast<Eigen::Index>(n) - 1);
    a2 = X.transpose() * vecs.col(static_cast<Eigen::Index>(n) - 2);
    if (a1.norm() < 1e-18 || a2.norm() < 1e-18)
      throw ValidationError("reduce_2d: degenerate second axis");
    a1.normalize();
    a2.normalize();
    // Re-orthogonalize against numerical drift.
    a2 -= a1 * a1.dot(a2);
    a2.normalize();
  }
  projection_detail::fix_sign(a1);
  projection_detail::fix_sign(a2);

  Reduce2dResult result;
  result.projector.mean.assign(mean.data(), mean.data() + d);
  result.projector.axis1.assign(a1.data(), a1.data() + d);
  result.projector.axis2.assign(a2.data(), a2.data() + d);
  result.projector.var1 = var1;
  result.projector.var2 = var2;
  result.projector.total_variance = total_variance;

  result.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd row = X.row(static_cast<Eigen::Index>(i));
    result.points.push_back({row.dot(a1), row.dot(a2)});
  }
  return result;
}

}  // namespace ugcs
