#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradplan/config.hpp"
#include "gradplan/planner.hpp"

// Experiment harness: runs the planner from a RunConfig and writes
// machine-readable results.
//
//   curve.csv     epoch,loss,best_value,wall_ms           (one row per epoch)
//   plan.json     best instance, value and H x dim actions with metadata
//   summary.json  config echo, epochs run, final value, wall time
//   compare.csv   optimizer,epoch,loss,best_value,wall_ms
//   sweep.csv     rate,epoch,loss,best_value,wall_ms
namespace gradplan::cli {

struct RunOutputs {
  std::filesystem::path curve;
  std::filesystem::path plan;
  std::filesystem::path summary;
  planner::PlanResult result;
  std::optional<double> heuristic_value;
  double wall_ms = 0.0;
};

// Fails with IoError if the directory cannot be created or written.
void ensure_writable(const std::filesystem::path& dir);

RunOutputs run(const RunConfig& config);

struct CurveSet {
  std::filesystem::path csv;
  std::vector<std::string> labels;
  std::vector<planner::PlanResult> results;
};

// One planner run per optimizer from the same initial actions, written to
// compare.csv. Requires at least two optimizers.
CurveSet compare_optimizers(const RunConfig& config,
                            std::span<const std::string> optimizers);

// One run per rate with the configured optimizer, written to sweep.csv.
CurveSet sweep_rates(const RunConfig& config, std::span<const double> rates);

// Shortest round-trip decimal representation, independent of locale.
std::string format_real(double value);

}  // namespace gradplan::cli
