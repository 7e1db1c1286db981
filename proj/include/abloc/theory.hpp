#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "abloc/types.hpp"

namespace abloc {

/// lambda = |f|^2 / (|f|^2 + tau^2).
inline double learnability_ratio(double f_sq_norm, double tau_sq) {
  if (f_sq_norm < 0.0 || tau_sq < 0.0)
    throw config_error("learnability_ratio: inputs must be nonnegative");
  const double total = f_sq_norm + tau_sq;
  if (total == 0.0)
    throw numeric_error("learnability_ratio: undefined for zero bias variance");
  return f_sq_norm / total;
}

/// Residual variance after perfect learnable-bias removal:
/// v* = (1 - lambda) beta^2 + sigma^2.
inline double residual_variance(const AgentSpec& agent) {
  return agent.tau_sq() + agent.sigma * agent.sigma;
}

/// Inverse-variance weights, normalized onto the simplex.
inline Weights optimal_weights(const Eigen::VectorXd& variances) {
  if (variances.size() < 1) throw config_error("optimal_weights: empty variance vector");
  if ((variances.array() <= 0.0).any())
    throw numeric_error("optimal_weights: all variances must be > 0");
  Weights out;
  out.w = variances.array().inverse();
  out.w /= out.w.sum();
  return out;
}

/// Uniform averaging with no bias correction: (1/K^2) sum(beta^2 + sigma^2).
inline double mse_baseline(const std::vector<AgentSpec>& agents) {
  if (agents.empty()) throw config_error("mse_baseline: no agents");
  double sum = 0.0;
  for (const AgentSpec& a : agents) sum += a.beta * a.beta + a.sigma * a.sigma;
  const double K = static_cast<double>(agents.size());
  return sum / (K * K);
}

/// Best achievable MSE with independent residuals: 1 / sum(1/v).
inline double mse_optimal(const Eigen::VectorXd& variances) {
  if (variances.size() < 1) throw config_error("mse_optimal: empty variance vector");
  if ((variances.array() <= 0.0).any())
    throw numeric_error("mse_optimal: all variances must be > 0");
  return 1.0 / variances.array().inverse().sum();
}

inline long long sample_requirement(double C, int d, const std::vector<int>& p_list,
                                    double eps, double lambda_bar, double delta, int K);

/// Full closed-form report for an agent population. eta_bound uses the exact
/// finite-K expression 1 - mse_optimal/mse_baseline; eta_ratio_bound is the
/// weighted-ratio upper-bound form, reported alongside for comparison.
inline TheoryReport efficiency_bound(const std::vector<AgentSpec>& agents) {
  if (agents.empty()) throw config_error("efficiency_bound: no agents");
  const int K = static_cast<int>(agents.size());

  TheoryReport report;
  report.v_star.resize(K);
  for (int i = 0; i < K; ++i) report.v_star(i) = residual_variance(agents[i]);
  report.w_star = optimal_weights(report.v_star);
  report.mse_baseline = mse_baseline(agents);
  report.mse_optimal = mse_optimal(report.v_star);
  report.eta_bound = (report.mse_baseline - report.mse_optimal) / report.mse_baseline;

  double num = 0.0, den = 0.0, inv_noise = 0.0;
  double lambda_bar = 0.0, beta_sq_bar = 0.0, sigma_sq_bar = 0.0;
  for (int i = 0; i < K; ++i) {
    const AgentSpec& a = agents[i];
    const double beta_sq = a.beta * a.beta;
    const double sigma_sq = a.sigma * a.sigma;
    num += report.w_star.w(i) * a.lambda * beta_sq;
    den += report.w_star.w(i) * (beta_sq + sigma_sq);
    if (sigma_sq > 0.0) inv_noise += 1.0 / sigma_sq;
    lambda_bar += a.lambda;
    beta_sq_bar += beta_sq;
    sigma_sq_bar += sigma_sq;
  }
  lambda_bar /= K;
  beta_sq_bar /= K;
  sigma_sq_bar /= K;
  report.eta_ratio_bound = den > 0.0 ? num / den : 0.0;
  report.eta_simplified =
      (beta_sq_bar + sigma_sq_bar) > 0.0
          ? lambda_bar * beta_sq_bar / (beta_sq_bar + sigma_sq_bar)
          : 0.0;
  report.oracle_mse_noise_only = inv_noise > 0.0 ? 1.0 / inv_noise : 0.0;

  std::vector<int> p_list;
  p_list.reserve(agents.size());
  for (const AgentSpec& a : agents) p_list.push_back(a.p);
  report.sample_size_estimate =
      lambda_bar > 0.0
          ? sample_requirement(1.0, 3, p_list, 0.1, lambda_bar, 0.05, K)
          : 0;
  return report;
}

/// Corollary form: eta <= lambda_bar * beta_bar^2 / (beta_bar^2 + sigma_bar^2).
inline double simplified_bound(double lambda_bar, double beta_bar_sq,
                               double sigma_bar_sq) {
  if (lambda_bar < 0.0 || beta_bar_sq < 0.0 || sigma_bar_sq < 0.0)
    throw config_error("simplified_bound: inputs must be nonnegative");
  const double den = beta_bar_sq + sigma_bar_sq;
  if (den <= 0.0) throw numeric_error("simplified_bound: zero denominator");
  return lambda_bar * beta_bar_sq / den;
}

/// Smallest N with N >= C (d + sum p_i) / (eps^2 lambda_bar^2) * ln(K/delta).
inline long long sample_requirement(double C, int d, const std::vector<int>& p_list,
                                    double eps, double lambda_bar, double delta,
                                    int K) {
  if (C <= 0.0) throw config_error("sample_requirement: C must be > 0");
  if (d < 1 || K < 1) throw config_error("sample_requirement: d and K must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw config_error("sample_requirement: eps must be in (0,1)");
  if (!(delta > 0.0 && delta < 1.0))
    throw config_error("sample_requirement: delta must be in (0,1)");
  if (lambda_bar <= 0.0)
    throw numeric_error("sample_requirement: infeasible with zero mean learnability "
                        "(bias learning impossible)");
  if (lambda_bar > 1.0) throw config_error("sample_requirement: lambda_bar must be <= 1");
  long long p_sum = 0;
  for (int p : p_list) p_sum += p;
  const double bound = C * (d + static_cast<double>(p_sum)) /
                       (eps * eps * lambda_bar * lambda_bar) *
                       std::log(static_cast<double>(K) / delta);
  return static_cast<long long>(std::ceil(bound));
}

enum class Recommendation { kLearnBias, kSimpleAverage };

struct DecisionCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct DecisionReport {
  Recommendation recommendation = Recommendation::kSimpleAverage;
  std::vector<DecisionCheck> checks;  // learnability, signal_to_noise, data_volume
};

/// Deployment decision rule: bias learning is recommended only when all three
/// checks pass (lambda_bar > 0.5, beta_bar^2/sigma_bar^2 > 0.5,
/// T > 10 (d + sum p_i)).
inline DecisionReport decision_rule(double lambda_bar, double beta_bar_sq,
                                    double sigma_bar_sq, int T, int d,
                                    const std::vector<int>& p_list) {
  if (sigma_bar_sq <= 0.0)
    throw config_error("decision_rule: sigma_bar_sq must be > 0");
  long long p_sum = 0;
  for (int p : p_list) p_sum += p;

  DecisionReport out;
  out.checks.push_back({"learnability", lambda_bar, 0.5, lambda_bar > 0.5});
  out.checks.push_back({"signal_to_noise", beta_bar_sq / sigma_bar_sq, 0.5,
                        beta_bar_sq / sigma_bar_sq > 0.5});
  const double data_threshold = 10.0 * (d + static_cast<double>(p_sum));
  out.checks.push_back({"data_volume", static_cast<double>(T), data_threshold,
                        T > data_threshold});
  bool all = true;
  for (const DecisionCheck& c : out.checks) all = all && c.pass;
  out.recommendation = all ? Recommendation::kLearnBias : Recommendation::kSimpleAverage;
  return out;
}

}  // namespace abloc
