#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gradplan/domains.hpp"
#include "gradplan/planner.hpp"

namespace gradplan::cli {

// Ordered (key, value) pairs; later entries override earlier ones.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct RunConfig {
  std::string domain;
  KeyValues overrides;  // dotted domain keys, e.g. reservoir.rain
  std::size_t batch = 100;
  std::size_t horizon = 0;  // 0: domain default
  std::size_t epochs = 1000;
  std::string optimizer = "rmsprop";
  double rate = 0.01;
  std::optional<double> epsilon;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  std::size_t patience = 200;
  std::size_t workers = 1;
  std::filesystem::path out_dir = "out";
  bool heuristic = false;
  std::vector<std::string> optimizers;  // compare subcommand
  std::vector<double> rates;            // sweep subcommand
};

// Reads a flat `key = value` file. Blank lines and lines starting with '#'
// are ignored. Throws ConfigError on malformed lines, IoError if unreadable.
KeyValues read_config_file(const std::filesystem::path& path);

// Worker default from GRADPLAN_WORKERS, or 1 when unset.
std::size_t default_workers();

// Builds a config from defaults followed by `entries` in order. Unknown keys
// and out-of-range values throw ConfigError naming the key. The domain and
// its overrides are validated by constructing the domain.
RunConfig parse_config(const KeyValues& entries);

// Domain parameters with the config's overrides applied.
domains::DomainParams resolve_params(const RunConfig& config);

planner::PlannerConfig planner_config(const RunConfig& config,
                                      std::string_view optimizer,
                                      double rate);

}  // namespace gradplan::cli
