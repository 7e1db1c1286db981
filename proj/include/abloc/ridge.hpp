#pragma once

#include <Eigen/Dense>
#include <string>

#include "abloc/types.hpp"

namespace abloc {

/// Closed-form ridge regression: solves (X'X + alpha I) c = X'y via Cholesky.
/// The intercept column, when present, is penalized like any other column.
inline Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 double alpha) {
  if (X.rows() < 1) throw config_error("ridge_fit: empty design matrix");
  if (X.rows() != y.size())
    throw config_error("ridge_fit: X has " + std::to_string(X.rows()) +
                       " rows but y has " + std::to_string(y.size()) + " entries");
  if (alpha < 0.0) throw config_error("ridge_fit: alpha must be >= 0");
  if (!X.allFinite() || !y.allFinite())
    throw numeric_error("ridge_fit: non-finite values in inputs");

  Eigen::MatrixXd gram = X.transpose() * X;
  gram.diagonal().array() += alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw numeric_error("ridge_fit: X'X + alpha*I is not positive definite "
                        "(singular system with alpha = " + std::to_string(alpha) + ")");
  Eigen::VectorXd coef = llt.solve(X.transpose() * y);
  if (!coef.allFinite())
    throw numeric_error("ridge_fit: solve produced non-finite coefficients");
  return coef;
}

inline Eigen::VectorXd ridge_predict(const Eigen::VectorXd& coef,
                                     const Eigen::MatrixXd& X) {
  if (X.cols() != coef.size())
    throw config_error("ridge_predict: X has " + std::to_string(X.cols()) +
                       " columns but coef has " + std::to_string(coef.size()) +
                       " entries");
  return X * coef;
}

}  // namespace abloc
