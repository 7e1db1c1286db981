#pragma once

#include <Eigen/Dense>
#include <vector>

#include "abloc/theory.hpp"
#include "abloc/types.hpp"

namespace abloc {

/// Uniform averaging across agents, no bias correction.
inline Eigen::MatrixXd uniform_average(const std::vector<Eigen::MatrixXd>& observations) {
  if (observations.empty()) throw config_error("uniform_average: no observations");
  Eigen::MatrixXd out = observations[0];
  for (std::size_t i = 1; i < observations.size(); ++i) out += observations[i];
  return out / static_cast<double>(observations.size());
}

/// kFullBias subtracts the entire realized bias f + nu, leaving pure
/// measurement noise (the reference combiner a deployed system cannot beat).
/// kLearnableOnly subtracts just the systematic part f, the best any
/// covariate-driven learner could do.
enum class OracleVariant { kFullBias, kLearnableOnly };

/// kNominal weights come from the configured variances; kEmpirical weights
/// from the realized residual variances against the true trajectory.
enum class OracleWeighting { kNominal, kEmpirical };

struct OracleResult {
  Eigen::MatrixXd estimate;  // T x d
  Weights weights;
};

inline OracleResult oracle_combine(const Dataset& ds, const std::vector<AgentSpec>& agents,
                                   OracleVariant variant = OracleVariant::kFullBias,
                                   OracleWeighting weighting = OracleWeighting::kNominal) {
  if (static_cast<int>(agents.size()) != ds.K())
    throw config_error("oracle_combine: agent list does not match dataset");
  const int K = ds.K();

  std::vector<Eigen::MatrixXd> corrected;
  corrected.reserve(K);
  for (int i = 0; i < K; ++i) {
    Eigen::MatrixXd c = ds.observations[i] - ds.learnable_bias[i];
    if (variant == OracleVariant::kFullBias) c -= ds.stochastic_bias[i];
    corrected.push_back(std::move(c));
  }

  Eigen::VectorXd variances(K);
  for (int i = 0; i < K; ++i) {
    if (weighting == OracleWeighting::kNominal) {
      variances(i) = variant == OracleVariant::kFullBias
                         ? agents[i].sigma * agents[i].sigma
                         : residual_variance(agents[i]);
    } else {
      // Realized per-time-point residual power against the true trajectory.
      variances(i) = (corrected[i] - ds.theta).squaredNorm() / ds.T();
    }
  }
  OracleResult out;
  out.weights = optimal_weights(variances);
  out.estimate = Eigen::MatrixXd::Zero(ds.T(), ds.d());
  for (int i = 0; i < K; ++i) out.estimate += out.weights.w(i) * corrected[i];
  return out;
}

}  // namespace abloc
