#include "gradplan/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "gradplan/errors.hpp"
#include "parse_util.hpp"

namespace gradplan::cli {

namespace {

bool parse_bool(std::string_view text, const std::string& key) {
  text = detail::trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("expected true or false, got '" + std::string(text) + "'", key);
}

std::size_t positive_count(std::string_view text, const std::string& key) {
  const std::size_t n = detail::parse_count(text, key);
  if (n == 0) throw ConfigError("must be at least 1", key);
  return n;
}

bool is_structural(std::string_view key) {
  return key.ends_with(".count") || key.ends_with(".floors") ||
         key.ends_with(".rooms_per_floor");
}

}  // namespace

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  KeyValues entries;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("expected key = value on line " + std::to_string(number),
                        path.string());
    }
    entries.emplace_back(std::string(detail::trim(text.substr(0, eq))),
                         std::string(detail::trim(text.substr(eq + 1))));
  }
  return entries;
}

std::size_t default_workers() {
  const char* env = std::getenv("GRADPLAN_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  return positive_count(env, "GRADPLAN_WORKERS");
}

RunConfig parse_config(const KeyValues& entries) {
  RunConfig c;
  c.workers = default_workers();
  for (const auto& [key, value] : entries) {
    if (key.find('.') != std::string::npos) {
      c.overrides.emplace_back(key, value);
    } else if (key == "domain") {
      c.domain = std::string(detail::trim(value));
    } else if (key == "batch") {
      c.batch = positive_count(value, key);
    } else if (key == "horizon") {
      c.horizon = positive_count(value, key);
    } else if (key == "epochs") {
      c.epochs = detail::parse_count(value, key);
    } else if (key == "optimizer") {
      c.optimizer = std::string(detail::trim(value));
    } else if (key == "rate") {
      c.rate = detail::parse_real(value, key);
    } else if (key == "epsilon") {
      c.epsilon = detail::parse_real(value, key);
    } else if (key == "seed") {
      c.seed = detail::parse_count(value, key);
    } else if (key == "tol") {
      c.tol = detail::parse_real(value, key);
    } else if (key == "patience") {
      c.patience = detail::parse_count(value, key);
    } else if (key == "workers") {
      c.workers = positive_count(value, key);
    } else if (key == "out") {
      c.out_dir = std::string(detail::trim(value));
    } else if (key == "heuristic") {
      c.heuristic = parse_bool(value, key);
    } else if (key == "optimizers") {
      c.optimizers.clear();
      for (auto part : detail::split(value, ',')) c.optimizers.emplace_back(part);
    } else if (key == "rates") {
      c.rates = detail::parse_reals(value, key);
    } else {
      throw ConfigError("unknown key", key);
    }
  }

  if (c.domain.empty()) throw ConfigError("required key is missing", "domain");
  if (!(c.rate > 0.0)) throw ConfigError("must be positive", "rate");
  if (c.epsilon && !(*c.epsilon >= 0.0)) {
    throw ConfigError("must be non-negative", "epsilon");
  }
  if (!(c.tol >= 0.0)) throw ConfigError("must be non-negative", "tol");
  for (double r : c.rates) {
    if (!(r > 0.0)) throw ConfigError("every rate must be positive", "rates");
  }
  planner::parse_algorithm(c.optimizer);
  for (const auto& name : c.optimizers) {
    try {
      planner::parse_algorithm(name);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), "optimizers");
    }
  }
  // Validates the domain name, every override, and the resulting parameters.
  domains::make_domain(resolve_params(c));
  return c;
}

domains::DomainParams resolve_params(const RunConfig& config) {
  domains::DomainParams params = domains::default_params(config.domain);
  // Layout changes reset per-element vectors, so they are applied first.
  KeyValues ordered = config.overrides;
  std::stable_partition(ordered.begin(), ordered.end(),
                        [](const auto& kv) { return is_structural(kv.first); });
  for (const auto& [key, value] : ordered) {
    domains::apply_override(params, key, value);
  }
  return params;
}

planner::PlannerConfig planner_config(const RunConfig& config,
                                      std::string_view optimizer, double rate) {
  planner::PlannerConfig p;
  p.instances = config.batch;
  p.horizon = config.horizon;
  p.epochs = config.epochs;
  p.optimizer = planner::parse_algorithm(optimizer);
  p.rate = rate;
  p.epsilon = config.epsilon;
  p.seed = config.seed;
  p.tol = config.tol;
  p.patience = config.patience;
  p.workers = config.workers;
  return p;
}

}  // namespace gradplan::cli
