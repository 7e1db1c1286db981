// abloc: experiment harness for multi-agent estimation with adaptive bias
// learning. Subcommands: generate, theory, run, sweep, recommend.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "abloc/abloc.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericError = 3;
constexpr int kExitIoError = 4;

std::set<abloc::OutputFormat> parse_formats(const std::string& spec) {
  std::set<abloc::OutputFormat> formats;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "json") formats.insert(abloc::OutputFormat::kJson);
    else if (item == "csv") formats.insert(abloc::OutputFormat::kCsv);
    else if (item == "plotdata") formats.insert(abloc::OutputFormat::kPlotData);
    else throw abloc::config_error("unknown format \"" + item + "\" (json, csv, plotdata)");
  }
  if (formats.empty()) throw abloc::config_error("no output formats selected");
  return formats;
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw abloc::config_error("cannot parse number \"" + item + "\"");
    }
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> out;
  for (double v : parse_doubles(csv)) {
    if (v < 0.0 || v != std::floor(v))
      throw abloc::config_error("seeds must be nonnegative integers");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

void write_json(const nlohmann::json& j, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  const std::filesystem::path path(out_path);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw abloc::io_error("cannot create directory: " + path.parent_path().string());
  }
  std::ofstream out(path);
  if (!out) throw abloc::io_error("cannot write file: " + out_path);
  out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent estimation with adaptive bias learning and optimal combining"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string format_spec = "json";
  std::string axis_name;
  std::string values_spec;
  std::string seeds_spec;
  long long seed_override = -1;

  auto add_common = [&](CLI::App* cmd, bool needs_out) {
    cmd->add_option("--config", config_path, "experiment config file (JSON)")
        ->required();
    cmd->add_option("--seed", seed_override, "override the config seed");
    if (needs_out)
      cmd->add_option("--out", out_path, "output location");
    return cmd;
  };

  CLI::App* generate = add_common(
      app.add_subcommand("generate", "write the synthetic dataset as a CSV directory"),
      true);
  generate->get_option("--out")->required();

  CLI::App* theory = add_common(
      app.add_subcommand("theory", "closed-form bounds only, no simulation"), true);

  CLI::App* run = add_common(
      app.add_subcommand("run", "full experiment: baseline, engine, oracles, report"),
      true);
  run->get_option("--out")->required();
  run->add_option("--format", format_spec, "comma list of json,csv,plotdata");

  CLI::App* sweep_cmd = add_common(
      app.add_subcommand("sweep", "axis study across seeds, learnability or T"), true);
  sweep_cmd->get_option("--out")->required();
  sweep_cmd->add_option("--axis", axis_name, "sweep axis: seed, lambda or T")->required();
  sweep_cmd->add_option("--values", values_spec, "comma list of axis values")->required();
  sweep_cmd->add_option("--seeds", seeds_spec, "comma list of seeds per axis value");

  CLI::App* recommend = add_common(
      app.add_subcommand("recommend", "deployment decision rule for this config"), false);

  CLI11_PARSE(app, argc, argv);

  try {
    abloc::ExperimentConfig config = abloc::load_config(config_path);
    if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);

    if (generate->parsed()) {
      const abloc::Dataset ds = abloc::generate_dataset(config);
      abloc::write_dataset_csv(ds, config, out_path);
      std::cout << "dataset written to " << out_path << '\n';
    } else if (theory->parsed()) {
      const abloc::TheoryReport rep = abloc::efficiency_bound(config.agents);
      nlohmann::json j;
      j["schema_version"] = abloc::kReportSchemaVersion;
      j["nominal"] = abloc::detail::theory_to_json(rep);
      write_json(j, out_path);
    } else if (run->parsed()) {
      const abloc::RunReport report = abloc::run_experiment(config);
      const auto files =
          abloc::emit_outputs(report, out_path, parse_formats(format_spec));
      for (const auto& f : files) std::cout << f.string() << '\n';
    } else if (sweep_cmd->parsed()) {
      abloc::SweepAxis axis;
      if (axis_name == "seed") axis = abloc::SweepAxis::kSeed;
      else if (axis_name == "lambda") axis = abloc::SweepAxis::kLambda;
      else if (axis_name == "T") axis = abloc::SweepAxis::kT;
      else throw abloc::config_error("unknown axis \"" + axis_name + "\"");
      const std::vector<double> values = parse_doubles(values_spec);
      std::vector<std::uint64_t> seeds;
      if (!seeds_spec.empty()) seeds = parse_seeds(seeds_spec);
      const abloc::SweepResult result = abloc::sweep(config, axis, values, seeds);
      write_json(abloc::sweep_to_json(result), out_path);
    } else if (recommend->parsed()) {
      double lambda_bar = 0.0, beta_sq_bar = 0.0, sigma_sq_bar = 0.0;
      std::vector<int> p_list;
      for (const abloc::AgentSpec& a : config.agents) {
        lambda_bar += a.lambda;
        beta_sq_bar += a.beta * a.beta;
        sigma_sq_bar += a.sigma * a.sigma;
        p_list.push_back(a.p);
      }
      const int K = config.K();
      lambda_bar /= K;
      beta_sq_bar /= K;
      sigma_sq_bar /= K;
      const abloc::DecisionReport decision = abloc::decision_rule(
          lambda_bar, beta_sq_bar, sigma_sq_bar, config.T, config.d, p_list);
      nlohmann::json j;
      j["schema_version"] = abloc::kReportSchemaVersion;
      j["recommendation"] =
          decision.recommendation == abloc::Recommendation::kLearnBias
              ? "learn_bias"
              : "simple_average";
      j["checks"] = nlohmann::json::array();
      for (const abloc::DecisionCheck& c : decision.checks)
        j["checks"].push_back({{"name", c.name},
                               {"value", c.value},
                               {"threshold", c.threshold},
                               {"pass", c.pass}});
      write_json(j, out_path);
    }
  } catch (const abloc::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const abloc::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumericError;
  } catch (const abloc::io_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumericError;
  }
  return kExitOk;
}
