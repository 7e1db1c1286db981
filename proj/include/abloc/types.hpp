#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace abloc {

/// Configuration / input validation failure (CLI exit code 2).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure: singular system, undefined ratio, non-finite input
/// (CLI exit code 3).
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem / serialization failure (CLI exit code 4).
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Nominal per-agent parameters. beta and sigma are per-dimension standard
/// deviations in the units of the estimated parameter.
struct AgentSpec {
  double lambda = 0.5;  // learnability ratio, fraction of bias variance that is systematic
  double beta = 0.0;    // total bias standard deviation
  double sigma = 0.1;   // measurement noise standard deviation
  int p = 10;           // covariate dimension

  /// Stochastic bias variance tau^2 = (1 - lambda) * beta^2. Derived, never
  /// stored, so lambda/beta/tau cannot drift inconsistent.
  double tau_sq() const { return (1.0 - lambda) * beta * beta; }

  void validate(const std::string& where) const {
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw config_error(where + ".lambda: must be in [0,1], got " + std::to_string(lambda));
    if (!(beta >= 0.0))
      throw config_error(where + ".beta: must be >= 0, got " + std::to_string(beta));
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
      throw config_error(where + ".sigma: must be >= 0 and finite, got " + std::to_string(sigma));
    if (p < 1)
      throw config_error(where + ".p: must be >= 1, got " + std::to_string(p));
  }
};

enum class ValidationMode { kProxy, kOracle };
enum class SplitMode { kContiguous, kRandom };

/// Engine knobs with the published defaults.
struct AblocParams {
  double alpha0 = 0.1;      // initial ridge regularization
  int max_iter = 30;        // iteration cap
  double tol = 1e-4;        // relative-change convergence tolerance
  double damping_new = 0.7; // weight on the freshly computed weights
  double shrink_base = 0.5;
  double shrink_step = 0.02;
  double shrink_cap = 0.9;
  ValidationMode validation_mode = ValidationMode::kProxy;
  SplitMode split_mode = SplitMode::kContiguous;

  void validate() const {
    if (!(alpha0 > 0.0)) throw config_error("abloc.alpha0: must be > 0");
    if (max_iter < 1) throw config_error("abloc.max_iter: must be >= 1");
    if (!(tol > 0.0)) throw config_error("abloc.tol: must be > 0");
    if (!(damping_new > 0.0 && damping_new <= 1.0))
      throw config_error("abloc.damping_new: must be in (0,1]");
    if (!(shrink_base > 0.0 && shrink_step > 0.0))
      throw config_error("abloc.shrink_base/shrink_step: must be > 0");
    if (!(shrink_base <= shrink_cap && shrink_cap <= 1.0))
      throw config_error("abloc.shrink_cap: need shrink_base <= shrink_cap <= 1");
  }
};

/// Full experiment description: dimensions, agents, seed, engine knobs.
struct ExperimentConfig {
  int d = 3;
  int T = 2000;
  std::vector<AgentSpec> agents;
  std::uint64_t seed = 42;
  AblocParams abloc;
  double split_fraction = 0.8;

  int K() const { return static_cast<int>(agents.size()); }

  void validate() const {
    if (d < 1) throw config_error("d: must be >= 1");
    if (T < 10) throw config_error("T: must be >= 10");
    if (agents.empty()) throw config_error("agents: at least one agent required");
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
      throw config_error("split_fraction: must be in (0,1)");
    for (std::size_t i = 0; i < agents.size(); ++i)
      agents[i].validate("agents[" + std::to_string(i) + "]");
    abloc.validate();
  }
};

/// Convex combination weights over the K agents.
struct Weights {
  Eigen::VectorXd w;

  static Weights uniform(int k) {
    Weights out;
    out.w = Eigen::VectorXd::Constant(k, 1.0 / k);
    return out;
  }

  bool on_simplex(double tol = 1e-12) const {
    if (w.size() == 0) return false;
    if ((w.array() < 0.0).any()) return false;
    return std::abs(w.sum() - 1.0) <= tol;
  }
};

/// Per-agent ridge coefficients, one length-p column per parameter dimension.
struct BiasModel {
  Eigen::MatrixXd coef;    // p x d
  double alpha_used = 0.0; // regularization at fit time
};

/// Fully decomposed synthetic dataset. observations[i] reconstructs exactly
/// as theta + learnable_bias[i] + stochastic_bias[i] + noise[i].
struct Dataset {
  Eigen::MatrixXd theta;                        // T x d
  std::vector<Eigen::MatrixXd> covariates;      // K of T x p
  std::vector<Eigen::MatrixXd> learnable_bias;  // K of T x d
  std::vector<Eigen::MatrixXd> stochastic_bias; // K of T x d
  std::vector<Eigen::MatrixXd> noise;           // K of T x d
  std::vector<Eigen::MatrixXd> observations;    // K of T x d
  std::vector<Eigen::MatrixXd> coefficients;    // K of d x 6

  int T() const { return static_cast<int>(theta.rows()); }
  int d() const { return static_cast<int>(theta.cols()); }
  int K() const { return static_cast<int>(observations.size()); }

  /// Max-abs deviation of Y - (theta + f + nu + eps) over all entries.
  double reconstruction_error() const {
    double err = 0.0;
    for (int i = 0; i < K(); ++i) {
      const Eigen::MatrixXd resid =
          observations[i] - (theta + learnable_bias[i] + stochastic_bias[i] + noise[i]);
      err = std::max(err, resid.cwiseAbs().maxCoeff());
    }
    return err;
  }
};

/// Closed-form quantities for a given agent population.
struct TheoryReport {
  Eigen::VectorXd v_star;          // residual variances after perfect learnable-bias removal
  Weights w_star;                  // inverse-variance weights on v_star
  double mse_baseline = 0.0;       // uniform averaging, no correction
  double mse_optimal = 0.0;        // 1 / sum(1/v_star)
  double eta_bound = 0.0;          // 1 - mse_optimal / mse_baseline
  double eta_ratio_bound = 0.0;    // weighted-ratio form: sum(w* l b^2) / sum(w* (b^2 + s^2))
  double eta_simplified = 0.0;     // population-average corollary form
  double oracle_mse_noise_only = 0.0;  // 1 / sum(1/sigma^2)
  long long sample_size_estimate = 0;  // with default constants (C=1, eps=0.1, delta=0.05)
};

/// Mutable state of one ABLOC run plus the best-validation snapshot.
struct AblocState {
  Eigen::MatrixXd theta_hat;  // T x d
  Weights weights;
  std::vector<BiasModel> bias_models;
  int iter = 0;
  bool converged = false;

  struct Snapshot {
    Eigen::MatrixXd theta_hat;
    Weights weights;
    std::vector<BiasModel> bias_models;
    double validation_score = std::numeric_limits<double>::infinity();
    int iteration = 0;
  };
  Snapshot best;

  struct HistoryRow {
    int iteration = 0;
    double validation_score = 0.0;
    double relative_change = 0.0;
    Eigen::VectorXd weights;
  };
  std::vector<HistoryRow> history;
};

}  // namespace abloc
