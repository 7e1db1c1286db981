#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "abloc/types.hpp"

namespace abloc {

/// Mean squared error over all T*d entries.
inline double mse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw config_error("mse: shape mismatch");
  return (estimate - truth).squaredNorm() /
         (static_cast<double>(estimate.rows()) * estimate.cols());
}

/// Per-dimension MSE; its mean equals mse().
inline Eigen::VectorXd mse_by_component(const Eigen::MatrixXd& estimate,
                                        const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw config_error("mse_by_component: shape mismatch");
  return (estimate - truth).colwise().squaredNorm().transpose() /
         static_cast<double>(estimate.rows());
}

/// Relative MSE improvement over the baseline; negative when the method
/// underperforms.
inline double efficiency(double baseline, double achieved) {
  if (!(baseline > 0.0)) throw numeric_error("efficiency: baseline MSE must be > 0");
  return (baseline - achieved) / baseline;
}

/// Achieved efficiency as a fraction of the theoretical bound.
inline double achievement_ratio(double eta_achieved, double eta_bound) {
  if (!(eta_bound > 0.0))
    throw numeric_error("achievement_ratio: bound must be > 0");
  return eta_achieved / eta_bound;
}

struct WeightComparison {
  Eigen::VectorXd relative_error;  // (learned - oracle) / oracle, signed
  double pearson = 0.0;            // correlation across agents
};

inline WeightComparison weight_comparison(const Weights& learned, const Weights& oracle) {
  if (learned.w.size() != oracle.w.size())
    throw config_error("weight_comparison: weight vectors differ in length");
  const int K = static_cast<int>(learned.w.size());
  if (K < 2) throw config_error("weight_comparison: correlation needs K >= 2");

  WeightComparison out;
  out.relative_error.resize(K);
  for (int i = 0; i < K; ++i) {
    if (oracle.w(i) == 0.0)
      throw numeric_error("weight_comparison: zero oracle weight");
    out.relative_error(i) = (learned.w(i) - oracle.w(i)) / oracle.w(i);
  }
  const Eigen::VectorXd a = learned.w.array() - learned.w.mean();
  const Eigen::VectorXd b = oracle.w.array() - oracle.w.mean();
  const double den = a.norm() * b.norm();
  if (den == 0.0) throw numeric_error("weight_comparison: degenerate (constant) weights");
  out.pearson = a.dot(b) / den;
  return out;
}

}  // namespace abloc
