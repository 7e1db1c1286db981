#pragma once

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "abloc/baselines.hpp"
#include "abloc/config.hpp"
#include "abloc/engine.hpp"
#include "abloc/metrics.hpp"
#include "abloc/synth.hpp"
#include "abloc/theory.hpp"

namespace abloc {

inline constexpr const char* kReportSchemaVersion = "1";

/// One experiment's full outcome, mirroring the result/weight/component
/// tables plus the iteration history. Contains no timestamps, so identical
/// configs serialize to identical bytes.
struct RunReport {
  std::string schema_version = kReportSchemaVersion;
  ExperimentConfig config;

  TheoryReport theory_nominal;    // from the configured agent parameters
  TheoryReport theory_empirical;  // from realized dataset moments

  struct Results {
    double mse_baseline = 0.0;
    double mse_abloc = 0.0;
    double mse_oracle = 0.0;                 // full-bias oracle
    double mse_oracle_learnable_only = 0.0;  // learnable-only oracle
    double efficiency = 0.0;
    double achievement_nominal = std::numeric_limits<double>::quiet_NaN();
    double achievement_empirical = std::numeric_limits<double>::quiet_NaN();
    int iterations_used = 0;
    int early_stop_iteration = 0;
    bool converged = false;
  };
  Results results;

  Weights weights_abloc;
  Weights weights_oracle;  // full-bias oracle, nominal variances
  Eigen::VectorXd weight_relative_error;
  double weight_pearson = 0.0;

  struct ComponentRow {
    double baseline_mse = 0.0;
    double abloc_mse = 0.0;
    double reduction = 0.0;  // fraction of baseline MSE removed
  };
  std::vector<ComponentRow> components;

  std::vector<AblocState::HistoryRow> history;
};

/// Generates the dataset, computes nominal and empirical bounds, and runs the
/// baseline, ABLOC and both oracle combiners. Deterministic in the config.
inline RunReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  RunReport report;
  report.config = config;

  const Dataset ds = generate_dataset(config);
  const DatasetMoments moments = empirical_moments(ds);
  report.theory_nominal = efficiency_bound(config.agents);
  report.theory_empirical = efficiency_bound(moments.as_agent_specs());

  const Eigen::MatrixXd baseline_est = uniform_average(ds.observations);
  const AblocState state = run_abloc(ds, config);
  const OracleResult oracle_full =
      oracle_combine(ds, config.agents, OracleVariant::kFullBias);
  const OracleResult oracle_learnable =
      oracle_combine(ds, config.agents, OracleVariant::kLearnableOnly);

  RunReport::Results& r = report.results;
  r.mse_baseline = mse(baseline_est, ds.theta);
  r.mse_abloc = mse(state.theta_hat, ds.theta);
  r.mse_oracle = mse(oracle_full.estimate, ds.theta);
  r.mse_oracle_learnable_only = mse(oracle_learnable.estimate, ds.theta);
  r.efficiency = efficiency(r.mse_baseline, r.mse_abloc);
  if (report.theory_nominal.eta_bound > 0.0)
    r.achievement_nominal = achievement_ratio(r.efficiency, report.theory_nominal.eta_bound);
  if (report.theory_empirical.eta_bound > 0.0)
    r.achievement_empirical =
        achievement_ratio(r.efficiency, report.theory_empirical.eta_bound);
  r.iterations_used = state.iter;
  r.early_stop_iteration = state.best.iteration;
  r.converged = state.converged;

  report.weights_abloc = state.weights;
  report.weights_oracle = oracle_full.weights;
  const WeightComparison wc = weight_comparison(state.weights, oracle_full.weights);
  report.weight_relative_error = wc.relative_error;
  report.weight_pearson = wc.pearson;

  const Eigen::VectorXd base_comp = mse_by_component(baseline_est, ds.theta);
  const Eigen::VectorXd abloc_comp = mse_by_component(state.theta_hat, ds.theta);
  for (int j = 0; j < config.d; ++j)
    report.components.push_back(
        {base_comp(j), abloc_comp(j), (base_comp(j) - abloc_comp(j)) / base_comp(j)});

  report.history = state.history;
  return report;
}

namespace detail {

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(i) = arr[i].get<double>();
  return v;
}

inline nlohmann::json theory_to_json(const TheoryReport& t) {
  return {
      {"v_star", vector_to_json(t.v_star)},
      {"w_star", vector_to_json(t.w_star.w)},
      {"mse_baseline", t.mse_baseline},
      {"mse_optimal", t.mse_optimal},
      {"eta_bound", t.eta_bound},
      {"eta_ratio_bound", t.eta_ratio_bound},
      {"eta_simplified", t.eta_simplified},
      {"oracle_mse_noise_only", t.oracle_mse_noise_only},
      {"sample_size_estimate", t.sample_size_estimate},
  };
}

inline TheoryReport theory_from_json(const nlohmann::json& j) {
  TheoryReport t;
  t.v_star = vector_from_json(j.at("v_star"));
  t.w_star.w = vector_from_json(j.at("w_star"));
  t.mse_baseline = j.at("mse_baseline").get<double>();
  t.mse_optimal = j.at("mse_optimal").get<double>();
  t.eta_bound = j.at("eta_bound").get<double>();
  t.eta_ratio_bound = j.at("eta_ratio_bound").get<double>();
  t.eta_simplified = j.at("eta_simplified").get<double>();
  t.oracle_mse_noise_only = j.at("oracle_mse_noise_only").get<double>();
  t.sample_size_estimate = j.at("sample_size_estimate").get<long long>();
  return t;
}

}  // namespace detail

inline nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json j;
  j["schema_version"] = report.schema_version;
  j["config"] = config_to_json(report.config);
  j["theory"] = {{"nominal", detail::theory_to_json(report.theory_nominal)},
                 {"empirical", detail::theory_to_json(report.theory_empirical)}};

  nlohmann::json res;
  res["mse_baseline"] = report.results.mse_baseline;
  res["mse_abloc"] = report.results.mse_abloc;
  res["mse_oracle"] = report.results.mse_oracle;
  res["mse_oracle_learnable_only"] = report.results.mse_oracle_learnable_only;
  res["efficiency"] = report.results.efficiency;
  // Achievement ratios are undefined when the corresponding bound is zero;
  // undefined entries are omitted so every emitted number is finite.
  if (std::isfinite(report.results.achievement_nominal))
    res["achievement_nominal"] = report.results.achievement_nominal;
  if (std::isfinite(report.results.achievement_empirical))
    res["achievement_empirical"] = report.results.achievement_empirical;
  res["iterations_used"] = report.results.iterations_used;
  res["early_stop_iteration"] = report.results.early_stop_iteration;
  res["converged"] = report.results.converged;
  j["results"] = res;

  j["weights"] = {{"abloc", detail::vector_to_json(report.weights_abloc.w)},
                  {"oracle", detail::vector_to_json(report.weights_oracle.w)},
                  {"relative_error", detail::vector_to_json(report.weight_relative_error)},
                  {"pearson_correlation", report.weight_pearson}};

  j["components"] = nlohmann::json::array();
  for (const RunReport::ComponentRow& c : report.components)
    j["components"].push_back({{"baseline_mse", c.baseline_mse},
                               {"abloc_mse", c.abloc_mse},
                               {"reduction", c.reduction}});

  j["history"] = nlohmann::json::array();
  for (const AblocState::HistoryRow& h : report.history)
    j["history"].push_back({{"iteration", h.iteration},
                            {"validation_score", h.validation_score},
                            {"relative_change", h.relative_change},
                            {"weights", detail::vector_to_json(h.weights)}});
  return j;
}

inline RunReport report_from_json(const nlohmann::json& j) {
  RunReport report;
  report.schema_version = j.at("schema_version").get<std::string>();
  report.config = config_from_json(j.at("config"));
  report.theory_nominal = detail::theory_from_json(j.at("theory").at("nominal"));
  report.theory_empirical = detail::theory_from_json(j.at("theory").at("empirical"));

  const nlohmann::json& res = j.at("results");
  report.results.mse_baseline = res.at("mse_baseline").get<double>();
  report.results.mse_abloc = res.at("mse_abloc").get<double>();
  report.results.mse_oracle = res.at("mse_oracle").get<double>();
  report.results.mse_oracle_learnable_only =
      res.at("mse_oracle_learnable_only").get<double>();
  report.results.efficiency = res.at("efficiency").get<double>();
  if (res.contains("achievement_nominal"))
    report.results.achievement_nominal = res.at("achievement_nominal").get<double>();
  if (res.contains("achievement_empirical"))
    report.results.achievement_empirical = res.at("achievement_empirical").get<double>();
  report.results.iterations_used = res.at("iterations_used").get<int>();
  report.results.early_stop_iteration = res.at("early_stop_iteration").get<int>();
  report.results.converged = res.at("converged").get<bool>();

  report.weights_abloc.w = detail::vector_from_json(j.at("weights").at("abloc"));
  report.weights_oracle.w = detail::vector_from_json(j.at("weights").at("oracle"));
  report.weight_relative_error =
      detail::vector_from_json(j.at("weights").at("relative_error"));
  report.weight_pearson = j.at("weights").at("pearson_correlation").get<double>();

  for (const nlohmann::json& c : j.at("components"))
    report.components.push_back({c.at("baseline_mse").get<double>(),
                                 c.at("abloc_mse").get<double>(),
                                 c.at("reduction").get<double>()});
  for (const nlohmann::json& h : j.at("history")) {
    AblocState::HistoryRow row;
    row.iteration = h.at("iteration").get<int>();
    row.validation_score = h.at("validation_score").get<double>();
    row.relative_change = h.at("relative_change").get<double>();
    row.weights = detail::vector_from_json(h.at("weights"));
    report.history.push_back(std::move(row));
  }
  return report;
}

enum class SweepAxis { kSeed, kLambda, kT };

struct SweepRun {
  double value = 0.0;
  std::uint64_t seed = 0;
  RunReport report;
};

struct SweepAggregate {
  double value = 0.0;
  int runs = 0;
  double efficiency_mean = 0.0, efficiency_min = 0.0, efficiency_max = 0.0;
  double achievement_mean = 0.0, achievement_min = 0.0, achievement_max = 0.0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::kSeed;
  std::vector<SweepRun> runs;             // ordered by sweep value, then seed
  std::vector<SweepAggregate> aggregates; // one row per sweep value
};

namespace detail {

template <class Fn>
void parallel_for(int n, Fn&& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(n));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis,
                                   double value, std::uint64_t seed) {
  ExperimentConfig cfg = base;
  cfg.seed = seed;
  switch (axis) {
    case SweepAxis::kSeed:
      break;
    case SweepAxis::kLambda:
      for (AgentSpec& a : cfg.agents) a.lambda = value;
      break;
    case SweepAxis::kT:
      cfg.T = static_cast<int>(value);
      break;
  }
  return cfg;
}

}  // namespace detail

/// Axis study: one run per (value, seed) pair, fanned out across a worker
/// pool, reduced in deterministic (value, seed) order. For the seed axis the
/// values themselves are the seeds.
inline SweepResult sweep(const ExperimentConfig& base, SweepAxis axis,
                         const std::vector<double>& values,
                         std::vector<std::uint64_t> seeds = {}) {
  if (values.size() < 2) throw config_error("sweep: need at least 2 axis values");
  if (axis == SweepAxis::kSeed) {
    if (!seeds.empty())
      throw config_error("sweep: seed axis takes its seeds from the values list");
    seeds = {0};  // placeholder; the value itself is the seed
  } else if (seeds.empty()) {
    seeds = {base.seed};
  }

  SweepResult result;
  result.axis = axis;
  result.runs.resize(values.size() * seeds.size());
  const int n = static_cast<int>(result.runs.size());
  const int per_value = static_cast<int>(seeds.size());

  detail::parallel_for(n, [&](int i) {
    const double value = values[i / per_value];
    std::uint64_t seed = seeds[i % per_value];
    if (axis == SweepAxis::kSeed) {
      if (value < 0.0 || value != std::floor(value))
        throw config_error("sweep: seed values must be nonnegative integers");
      seed = static_cast<std::uint64_t>(value);
    }
    SweepRun& run = result.runs[i];
    run.value = value;
    run.seed = seed;
    run.report = run_experiment(detail::apply_axis(base, axis, value, seed));
  });

  for (std::size_t v = 0; v < values.size(); ++v) {
    SweepAggregate agg;
    agg.value = values[v];
    agg.efficiency_min = agg.achievement_min = std::numeric_limits<double>::infinity();
    agg.efficiency_max = agg.achievement_max = -std::numeric_limits<double>::infinity();
    double eff_sum = 0.0, ach_sum = 0.0;
    int ach_n = 0;
    for (int s = 0; s < per_value; ++s) {
      const RunReport& rep = result.runs[v * per_value + s].report;
      const double eff = rep.results.efficiency;
      eff_sum += eff;
      agg.efficiency_min = std::min(agg.efficiency_min, eff);
      agg.efficiency_max = std::max(agg.efficiency_max, eff);
      const double ach = rep.results.achievement_nominal;
      if (std::isfinite(ach)) {
        ach_sum += ach;
        agg.achievement_min = std::min(agg.achievement_min, ach);
        agg.achievement_max = std::max(agg.achievement_max, ach);
        ++ach_n;
      }
      ++agg.runs;
    }
    agg.efficiency_mean = eff_sum / agg.runs;
    agg.achievement_mean = ach_n > 0 ? ach_sum / ach_n
                                     : std::numeric_limits<double>::quiet_NaN();
    if (ach_n == 0) {
      agg.achievement_min = agg.achievement_max =
          std::numeric_limits<double>::quiet_NaN();
    }
    result.aggregates.push_back(agg);
  }
  return result;
}

inline nlohmann::json sweep_to_json(const SweepResult& result) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  switch (result.axis) {
    case SweepAxis::kSeed: j["axis"] = "seed"; break;
    case SweepAxis::kLambda: j["axis"] = "lambda"; break;
    case SweepAxis::kT: j["axis"] = "T"; break;
  }
  j["aggregates"] = nlohmann::json::array();
  for (const SweepAggregate& a : result.aggregates) {
    nlohmann::json row = {{"value", a.value},
                          {"runs", a.runs},
                          {"efficiency_mean", a.efficiency_mean},
                          {"efficiency_min", a.efficiency_min},
                          {"efficiency_max", a.efficiency_max}};
    if (std::isfinite(a.achievement_mean)) {
      row["achievement_mean"] = a.achievement_mean;
      row["achievement_min"] = a.achievement_min;
      row["achievement_max"] = a.achievement_max;
    }
    j["aggregates"].push_back(row);
  }
  j["runs"] = nlohmann::json::array();
  for (const SweepRun& run : result.runs)
    j["runs"].push_back({{"value", run.value},
                         {"seed", run.seed},
                         {"report", report_to_json(run.report)}});
  return j;
}

}  // namespace abloc
