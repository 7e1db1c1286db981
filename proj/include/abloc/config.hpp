#pragma once

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "abloc/types.hpp"

namespace abloc {

namespace detail {

inline void expect_keys(const nlohmann::json& j,
                        std::initializer_list<const char*> allowed,
                        const std::string& where) {
  if (!j.is_object()) throw config_error(where + ": expected an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) { known = true; break; }
    if (!known) throw config_error(where + ": unknown key \"" + item.key() + "\"");
  }
}

inline double get_number(const nlohmann::json& j, const char* key, double fallback,
                         const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    throw config_error(where + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

inline long long get_integer(const nlohmann::json& j, const char* key, long long fallback,
                             const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer())
    throw config_error(where + "." + key + ": expected an integer");
  return j.at(key).get<long long>();
}

inline std::string get_string(const nlohmann::json& j, const char* key,
                              const std::string& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string())
    throw config_error(where + "." + key + ": expected a string");
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  detail::expect_keys(j, {"d", "T", "K", "seed", "split_fraction", "agents", "abloc"},
                      "config");
  ExperimentConfig cfg;
  cfg.d = static_cast<int>(detail::get_integer(j, "d", 3, "config"));
  cfg.T = static_cast<int>(detail::get_integer(j, "T", 2000, "config"));
  const long long seed = detail::get_integer(j, "seed", 42, "config");
  if (seed < 0) throw config_error("config.seed: must be nonnegative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.split_fraction = detail::get_number(j, "split_fraction", 0.8, "config");

  if (!j.contains("agents") || !j.at("agents").is_array() || j.at("agents").empty())
    throw config_error("config.agents: expected a nonempty array");
  for (std::size_t i = 0; i < j.at("agents").size(); ++i) {
    const nlohmann::json& ja = j.at("agents")[i];
    const std::string where = "agents[" + std::to_string(i) + "]";
    detail::expect_keys(ja, {"lambda", "beta", "sigma", "p"}, where);
    AgentSpec a;
    if (!ja.contains("lambda")) throw config_error(where + ".lambda: required");
    if (!ja.contains("beta")) throw config_error(where + ".beta: required");
    if (!ja.contains("sigma")) throw config_error(where + ".sigma: required");
    a.lambda = detail::get_number(ja, "lambda", 0.0, where);
    a.beta = detail::get_number(ja, "beta", 0.0, where);
    a.sigma = detail::get_number(ja, "sigma", 0.0, where);
    a.p = static_cast<int>(detail::get_integer(ja, "p", 10, where));
    cfg.agents.push_back(a);
  }

  if (j.contains("K")) {
    const long long k = detail::get_integer(j, "K", 0, "config");
    if (k != cfg.K())
      throw config_error("config.K: does not match agents length (" +
                         std::to_string(k) + " vs " + std::to_string(cfg.K()) + ")");
  }

  if (j.contains("abloc")) {
    const nlohmann::json& jp = j.at("abloc");
    detail::expect_keys(jp,
                        {"alpha0", "max_iter", "tol", "damping_new", "shrink_base",
                         "shrink_step", "shrink_cap", "validation_mode", "split_mode"},
                        "abloc");
    AblocParams& p = cfg.abloc;
    p.alpha0 = detail::get_number(jp, "alpha0", p.alpha0, "abloc");
    p.max_iter = static_cast<int>(detail::get_integer(jp, "max_iter", p.max_iter, "abloc"));
    p.tol = detail::get_number(jp, "tol", p.tol, "abloc");
    p.damping_new = detail::get_number(jp, "damping_new", p.damping_new, "abloc");
    p.shrink_base = detail::get_number(jp, "shrink_base", p.shrink_base, "abloc");
    p.shrink_step = detail::get_number(jp, "shrink_step", p.shrink_step, "abloc");
    p.shrink_cap = detail::get_number(jp, "shrink_cap", p.shrink_cap, "abloc");
    const std::string vm = detail::get_string(jp, "validation_mode", "proxy", "abloc");
    if (vm == "proxy") p.validation_mode = ValidationMode::kProxy;
    else if (vm == "oracle") p.validation_mode = ValidationMode::kOracle;
    else throw config_error("abloc.validation_mode: expected \"proxy\" or \"oracle\"");
    const std::string sm = detail::get_string(jp, "split_mode", "contiguous", "abloc");
    if (sm == "contiguous") p.split_mode = SplitMode::kContiguous;
    else if (sm == "random") p.split_mode = SplitMode::kRandom;
    else throw config_error("abloc.split_mode: expected \"contiguous\" or \"random\"");
  }

  cfg.validate();
  return cfg;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["d"] = cfg.d;
  j["T"] = cfg.T;
  j["K"] = cfg.K();
  j["seed"] = cfg.seed;
  j["split_fraction"] = cfg.split_fraction;
  j["agents"] = nlohmann::json::array();
  for (const AgentSpec& a : cfg.agents)
    j["agents"].push_back({{"lambda", a.lambda},
                           {"beta", a.beta},
                           {"sigma", a.sigma},
                           {"p", a.p}});
  j["abloc"] = {
      {"alpha0", cfg.abloc.alpha0},
      {"max_iter", cfg.abloc.max_iter},
      {"tol", cfg.abloc.tol},
      {"damping_new", cfg.abloc.damping_new},
      {"shrink_base", cfg.abloc.shrink_base},
      {"shrink_step", cfg.abloc.shrink_step},
      {"shrink_cap", cfg.abloc.shrink_cap},
      {"validation_mode",
       cfg.abloc.validation_mode == ValidationMode::kOracle ? "oracle" : "proxy"},
      {"split_mode",
       cfg.abloc.split_mode == SplitMode::kRandom ? "random" : "contiguous"},
  };
  return j;
}

/// Parses and validates a config file, applying defaults for missing keys.
/// Parse failures report the line of the offending byte.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw config_error(path + ":" + std::to_string(line) + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace abloc
