#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "abloc/rng.hpp"
#include "abloc/types.hpp"

namespace abloc {

inline constexpr int kCovariateCount = 10;
inline constexpr int kLearnableCovariates = 6;
inline constexpr double kCovariateNoiseStd = 0.1;  // xi ~ N(0, 0.01), variance convention

/// Time-varying ground truth. Time runs t = 1..T inclusive, so t/T reaches
/// exactly 1 in the last row. Components beyond the third are zero.
inline Eigen::MatrixXd generate_trajectory(int T, int d) {
  if (T < 1) throw config_error("generate_trajectory: T must be >= 1");
  if (d < 1) throw config_error("generate_trajectory: d must be >= 1");
  constexpr double pi = std::numbers::pi_v<double>;
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(T, d);
  for (int row = 0; row < T; ++row) {
    const double s = static_cast<double>(row + 1) / T;  // t/T
    if (d >= 1) theta(row, 0) = std::sin(4.0 * pi * s);
    if (d >= 2) theta(row, 1) = 0.5 * std::cos(8.0 * pi * s);
    if (d >= 3) theta(row, 2) = 0.3 * std::sin(4.0 * pi * s) + 0.1 * s;
  }
  return theta;
}

/// Per-agent covariate matrix, rows t = 1..T. Column layout:
///   0: sin(4*pi*t/T + 0.1*i)     4: t/T              8: xi_{i,t} ~ N(0, 0.01)
///   1: cos(4*pi*t/T + 0.1*i)     5: (t/T)^2          9: 1 (intercept)
///   2: sin(8*pi*t/T)             6: sin(12*pi*t/T)
///   3: cos(8*pi*t/T)             7: cos(12*pi*t/T)
/// The noise column consumes T draws, time-major, from the agent's
/// covariate_noise stream.
inline Eigen::MatrixXd generate_covariates(int T, int p, int agent_index,
                                           const RngPlan& rng) {
  if (T < 1) throw config_error("generate_covariates: T must be >= 1");
  if (p != kCovariateCount)
    throw config_error("generate_covariates: covariate dimension must be " +
                       std::to_string(kCovariateCount) + ", got " + std::to_string(p));
  constexpr double pi = std::numbers::pi_v<double>;
  const double phase = 0.1 * agent_index;
  GaussianStream xi = rng.stream(agent_index, StreamPurpose::kCovariateNoise);
  Eigen::MatrixXd X(T, p);
  for (int row = 0; row < T; ++row) {
    const double s = static_cast<double>(row + 1) / T;
    X(row, 0) = std::sin(4.0 * pi * s + phase);
    X(row, 1) = std::cos(4.0 * pi * s + phase);
    X(row, 2) = std::sin(8.0 * pi * s);
    X(row, 3) = std::cos(8.0 * pi * s);
    X(row, 4) = s;
    X(row, 5) = s * s;
    X(row, 6) = std::sin(12.0 * pi * s);
    X(row, 7) = std::cos(12.0 * pi * s);
    X(row, 8) = kCovariateNoiseStd * xi.next();
    X(row, 9) = 1.0;
  }
  return X;
}

struct BiasDraw {
  Eigen::MatrixXd coefficients;  // d x 6, row j holds a_{i,j}
  Eigen::MatrixXd learnable;     // T x d
  Eigen::MatrixXd stochastic;    // T x d
};

/// Draws the systematic and stochastic bias for one agent.
/// Coefficient draws are dimension-major (all 6 entries of a_{i,0}, then
/// a_{i,1}, ...); stochastic draws are time-major (t outer, dimension inner).
inline BiasDraw generate_bias(const AgentSpec& agent, const Eigen::MatrixXd& covariates,
                              int d, int agent_index, const RngPlan& rng) {
  if (covariates.cols() < kLearnableCovariates)
    throw config_error("generate_bias: covariates must have at least 6 columns");
  const int T = static_cast<int>(covariates.rows());
  const double coef_scale = std::sqrt(agent.lambda * agent.beta * agent.beta /
                                      kLearnableCovariates);
  const double tau = std::sqrt(agent.tau_sq());

  BiasDraw out;
  out.coefficients.resize(d, kLearnableCovariates);
  GaussianStream coef_stream = rng.stream(agent_index, StreamPurpose::kCoefficients);
  for (int j = 0; j < d; ++j)
    for (int c = 0; c < kLearnableCovariates; ++c)
      out.coefficients(j, c) = coef_scale * coef_stream.next();

  out.learnable = covariates.leftCols(kLearnableCovariates) * out.coefficients.transpose();

  out.stochastic.resize(T, d);
  GaussianStream nu_stream = rng.stream(agent_index, StreamPurpose::kStochasticBias);
  for (int row = 0; row < T; ++row)
    for (int j = 0; j < d; ++j)
      out.stochastic(row, j) = tau * nu_stream.next();
  return out;
}

/// Deterministic end-to-end generation of the synthetic benchmark. Pure
/// function of the config (including its seed): the same config always
/// yields a bit-identical Dataset. Measurement-noise draws are time-major.
inline Dataset generate_dataset(const ExperimentConfig& config) {
  config.validate();
  const RngPlan rng{config.seed};
  const int T = config.T;
  const int d = config.d;
  const int K = config.K();

  Dataset ds;
  ds.theta = generate_trajectory(T, d);
  ds.covariates.reserve(K);
  ds.learnable_bias.reserve(K);
  ds.stochastic_bias.reserve(K);
  ds.noise.reserve(K);
  ds.observations.reserve(K);
  ds.coefficients.reserve(K);

  for (int i = 0; i < K; ++i) {
    const AgentSpec& agent = config.agents[i];
    Eigen::MatrixXd X = generate_covariates(T, agent.p, i, rng);
    BiasDraw bias = generate_bias(agent, X, d, i, rng);

    Eigen::MatrixXd eps(T, d);
    GaussianStream noise_stream = rng.stream(i, StreamPurpose::kMeasurementNoise);
    for (int row = 0; row < T; ++row)
      for (int j = 0; j < d; ++j)
        eps(row, j) = agent.sigma * noise_stream.next();

    ds.observations.push_back(ds.theta + bias.learnable + bias.stochastic + eps);
    ds.covariates.push_back(std::move(X));
    ds.learnable_bias.push_back(std::move(bias.learnable));
    ds.stochastic_bias.push_back(std::move(bias.stochastic));
    ds.noise.push_back(std::move(eps));
    ds.coefficients.push_back(std::move(bias.coefficients));
  }
  return ds;
}

/// Realized second moments of one agent's generated arrays. lambda_hat can
/// differ from the nominal ratio because the sinusoidal covariates do not
/// have unit power, so the generator reports both.
struct AgentMoments {
  double var_learnable = 0.0;
  double var_stochastic = 0.0;
  double var_noise = 0.0;
  double lambda_hat = 0.0;
  double beta_sq_hat = 0.0;
  double sigma_sq_hat = 0.0;
};

struct DatasetMoments {
  std::vector<AgentMoments> agents;

  /// Empirical counterparts of the nominal AgentSpec list, usable with the
  /// theory calculators.
  std::vector<AgentSpec> as_agent_specs(int p = kCovariateCount) const {
    std::vector<AgentSpec> specs;
    specs.reserve(agents.size());
    for (const AgentMoments& m : agents)
      specs.push_back(AgentSpec{m.lambda_hat, std::sqrt(m.beta_sq_hat),
                                std::sqrt(m.sigma_sq_hat), p});
    return specs;
  }
};

namespace detail {
// Population variance per column, averaged across columns.
inline double mean_column_variance(const Eigen::MatrixXd& a) {
  const double T = static_cast<double>(a.rows());
  const Eigen::RowVectorXd mean = a.colwise().mean();
  return (a.rowwise() - mean).squaredNorm() / (T * a.cols());
}
}  // namespace detail

inline DatasetMoments empirical_moments(const Dataset& ds) {
  DatasetMoments out;
  out.agents.reserve(ds.K());
  for (int i = 0; i < ds.K(); ++i) {
    AgentMoments m;
    m.var_learnable = detail::mean_column_variance(ds.learnable_bias[i]);
    m.var_stochastic = detail::mean_column_variance(ds.stochastic_bias[i]);
    m.var_noise = detail::mean_column_variance(ds.noise[i]);
    m.beta_sq_hat = m.var_learnable + m.var_stochastic;
    m.sigma_sq_hat = m.var_noise;
    m.lambda_hat = m.beta_sq_hat > 0.0 ? m.var_learnable / m.beta_sq_hat : 0.0;
    out.agents.push_back(m);
  }
  return out;
}

}  // namespace abloc
