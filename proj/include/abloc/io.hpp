#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "abloc/config.hpp"
#include "abloc/report.hpp"
#include "abloc/synth.hpp"

namespace abloc {

namespace detail {

/// Shortest-precision-preserving text form; CSV round trips are bit exact.
inline std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write file: " + path.string());
  return out;
}

inline void write_matrix_csv(const std::filesystem::path& path,
                             const Eigen::MatrixXd& m, const std::string& index_name,
                             const std::string& col_prefix, int index_base = 1) {
  std::ofstream out = open_out(path);
  out << index_name;
  for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << col_prefix << c;
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << (r + index_base);
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << fmt_double(m(r, c));
    out << '\n';
  }
  if (!out) throw io_error("write failed: " + path.string());
}

inline Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw io_error("empty file: " + path.string());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (first) { first = false; continue; }  // index column
      row.push_back(std::stod(cell));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error("no data rows: " + path.string());
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw io_error("ragged rows in " + path.string());
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

}  // namespace detail

/// Writes the dataset as one CSV per array (time-major, headers) plus a
/// manifest carrying the generating config and the RNG conventions.
inline void write_dataset_csv(const Dataset& ds, const ExperimentConfig& config,
                              const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory: " + dir.string());

  nlohmann::json manifest;
  manifest["schema_version"] = kReportSchemaVersion;
  manifest["config"] = config_to_json(config);
  manifest["rng"] = {
      {"generator", "mt19937_64"},
      {"normal_transform", "box-muller, top-53-bit uniforms"},
      {"child_seed_rule",
       "splitmix64(splitmix64(master ^ 0x9E3779B97F4A7C15*(agent+1)) ^ "
       "0xD1B54A32D192ED03*purpose)"},
      {"draw_order",
       "per agent: coefficients (d x 6, dimension-major), covariate noise (T), "
       "stochastic bias (T x d, time-major), measurement noise (T x d, time-major)"},
  };
  detail::open_out(dir / "manifest.json") << manifest.dump(2) << '\n';

  detail::write_matrix_csv(dir / "theta.csv", ds.theta, "t", "theta");
  for (int i = 0; i < ds.K(); ++i) {
    const std::string tag = "agent" + std::to_string(i);
    detail::write_matrix_csv(dir / (tag + "_covariates.csv"), ds.covariates[i], "t", "x");
    detail::write_matrix_csv(dir / (tag + "_learnable_bias.csv"), ds.learnable_bias[i],
                             "t", "f");
    detail::write_matrix_csv(dir / (tag + "_stochastic_bias.csv"), ds.stochastic_bias[i],
                             "t", "nu");
    detail::write_matrix_csv(dir / (tag + "_noise.csv"), ds.noise[i], "t", "eps");
    detail::write_matrix_csv(dir / (tag + "_observations.csv"), ds.observations[i], "t",
                             "y");
    detail::write_matrix_csv(dir / (tag + "_coefficients.csv"), ds.coefficients[i],
                             "dimension", "a", 0);
  }
}

struct LoadedDataset {
  Dataset dataset;
  ExperimentConfig config;
};

/// Reads a dataset directory back; verifies the reconstruction identity.
inline LoadedDataset read_dataset_csv(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw io_error("cannot open manifest: " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mf);
  } catch (const nlohmann::json::parse_error& e) {
    throw io_error("bad manifest in " + dir.string() + ": " + e.what());
  }

  LoadedDataset out;
  out.config = config_from_json(manifest.at("config"));
  out.dataset.theta = detail::read_matrix_csv(dir / "theta.csv");
  for (int i = 0; i < out.config.K(); ++i) {
    const std::string tag = "agent" + std::to_string(i);
    out.dataset.covariates.push_back(detail::read_matrix_csv(dir / (tag + "_covariates.csv")));
    out.dataset.learnable_bias.push_back(
        detail::read_matrix_csv(dir / (tag + "_learnable_bias.csv")));
    out.dataset.stochastic_bias.push_back(
        detail::read_matrix_csv(dir / (tag + "_stochastic_bias.csv")));
    out.dataset.noise.push_back(detail::read_matrix_csv(dir / (tag + "_noise.csv")));
    out.dataset.observations.push_back(
        detail::read_matrix_csv(dir / (tag + "_observations.csv")));
    out.dataset.coefficients.push_back(
        detail::read_matrix_csv(dir / (tag + "_coefficients.csv")));
  }
  if (out.dataset.reconstruction_error() > 1e-12)
    throw numeric_error("dataset in " + dir.string() +
                        " violates the reconstruction identity");
  return out;
}

/// Per-iteration history: iteration, validation score, relative change and
/// one column per agent weight.
inline void write_history_csv(const std::vector<AblocState::HistoryRow>& history,
                              const std::filesystem::path& path) {
  std::ofstream out = detail::open_out(path);
  out << "iteration,validation_score,relative_change";
  const int K = history.empty() ? 0 : static_cast<int>(history[0].weights.size());
  for (int i = 0; i < K; ++i) out << ",w" << i;
  out << '\n';
  for (const AblocState::HistoryRow& row : history) {
    out << row.iteration << ',' << detail::fmt_double(row.validation_score) << ','
        << detail::fmt_double(row.relative_change);
    for (int i = 0; i < K; ++i) out << ',' << detail::fmt_double(row.weights(i));
    out << '\n';
  }
}

enum class OutputFormat { kJson, kCsv, kPlotData };

/// Writes the selected artifact families into out_dir and returns the files
/// created. json: the full report. csv: summary/weights/components/history
/// tables. plotdata: tidy inputs for MSE bars, weight comparison and the
/// learnability-vs-weight scatter.
inline std::vector<std::filesystem::path> emit_outputs(
    const RunReport& report, const std::filesystem::path& out_dir,
    const std::set<OutputFormat>& formats) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw io_error("cannot create directory: " + out_dir.string());
  std::vector<std::filesystem::path> files;

  if (formats.count(OutputFormat::kJson)) {
    const auto path = out_dir / "report.json";
    detail::open_out(path) << report_to_json(report).dump(2) << '\n';
    files.push_back(path);
  }

  if (formats.count(OutputFormat::kCsv)) {
    {
      const auto path = out_dir / "results_summary.csv";
      std::ofstream out = detail::open_out(path);
      out << "metric,value\n";
      const RunReport::Results& r = report.results;
      out << "baseline_mse," << detail::fmt_double(r.mse_baseline) << '\n'
          << "abloc_mse," << detail::fmt_double(r.mse_abloc) << '\n'
          << "oracle_mse," << detail::fmt_double(r.mse_oracle) << '\n'
          << "oracle_learnable_only_mse,"
          << detail::fmt_double(r.mse_oracle_learnable_only) << '\n'
          << "efficiency," << detail::fmt_double(r.efficiency) << '\n'
          << "theoretical_bound_nominal,"
          << detail::fmt_double(report.theory_nominal.eta_bound) << '\n'
          << "theoretical_bound_empirical,"
          << detail::fmt_double(report.theory_empirical.eta_bound) << '\n';
      if (std::isfinite(r.achievement_nominal))
        out << "achievement_ratio_nominal," << detail::fmt_double(r.achievement_nominal)
            << '\n';
      if (std::isfinite(r.achievement_empirical))
        out << "achievement_ratio_empirical,"
            << detail::fmt_double(r.achievement_empirical) << '\n';
      out << "iterations_used," << r.iterations_used << '\n'
          << "early_stop_iteration," << r.early_stop_iteration << '\n'
          << "converged," << (r.converged ? 1 : 0) << '\n';
      files.push_back(path);
    }
    {
      const auto path = out_dir / "weights.csv";
      std::ofstream out = detail::open_out(path);
      out << "agent,abloc_weight,oracle_weight,relative_error\n";
      for (Eigen::Index i = 0; i < report.weights_abloc.w.size(); ++i)
        out << i << ',' << detail::fmt_double(report.weights_abloc.w(i)) << ','
            << detail::fmt_double(report.weights_oracle.w(i)) << ','
            << detail::fmt_double(report.weight_relative_error(i)) << '\n';
      files.push_back(path);
    }
    {
      const auto path = out_dir / "components.csv";
      std::ofstream out = detail::open_out(path);
      out << "component,baseline_mse,abloc_mse,reduction\n";
      for (std::size_t j = 0; j < report.components.size(); ++j)
        out << j << ',' << detail::fmt_double(report.components[j].baseline_mse) << ','
            << detail::fmt_double(report.components[j].abloc_mse) << ','
            << detail::fmt_double(report.components[j].reduction) << '\n';
      files.push_back(path);
    }
    {
      const auto path = out_dir / "history.csv";
      write_history_csv(report.history, path);
      files.push_back(path);
    }
  }

  if (formats.count(OutputFormat::kPlotData)) {
    {
      const auto path = out_dir / "plot_mse_bars.csv";
      std::ofstream out = detail::open_out(path);
      out << "method,mse\n"
          << "baseline," << detail::fmt_double(report.results.mse_baseline) << '\n'
          << "abloc," << detail::fmt_double(report.results.mse_abloc) << '\n'
          << "oracle," << detail::fmt_double(report.results.mse_oracle) << '\n';
      files.push_back(path);
    }
    {
      const auto path = out_dir / "plot_weights.csv";
      std::ofstream out = detail::open_out(path);
      out << "agent,abloc_weight,oracle_weight\n";
      for (Eigen::Index i = 0; i < report.weights_abloc.w.size(); ++i)
        out << i << ',' << detail::fmt_double(report.weights_abloc.w(i)) << ','
            << detail::fmt_double(report.weights_oracle.w(i)) << '\n';
      files.push_back(path);
    }
    {
      const auto path = out_dir / "plot_lambda_weight.csv";
      std::ofstream out = detail::open_out(path);
      out << "agent,lambda,abloc_weight,beta,sigma\n";
      for (int i = 0; i < report.config.K(); ++i)
        out << i << ',' << detail::fmt_double(report.config.agents[i].lambda) << ','
            << detail::fmt_double(report.weights_abloc.w(i)) << ','
            << detail::fmt_double(report.config.agents[i].beta) << ','
            << detail::fmt_double(report.config.agents[i].sigma) << '\n';
      files.push_back(path);
    }
  }
  return files;
}

}  // namespace abloc
