#include "gradplan/harness.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <system_error>

#include "gradplan/baselines.hpp"
#include "gradplan/errors.hpp"
#include "json.hpp"

namespace gradplan::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Writes to a sibling temporary and renames, so readers never observe a
// partially written file.
void write_atomically(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string curve_row(const planner::EpochRecord& r) {
  return std::to_string(r.epoch) + ',' + format_real(r.loss) + ',' +
         format_real(r.best_value) + ',' + format_real(r.wall_ms) + '\n';
}

json config_echo(const RunConfig& c, std::size_t horizon) {
  json overrides = json::object();
  for (const auto& [k, v] : c.overrides) overrides[k] = v;
  json j;
  j["domain"] = c.domain;
  j["overrides"] = overrides;
  j["batch"] = c.batch;
  j["horizon"] = horizon;
  j["epochs"] = c.epochs;
  j["optimizer"] = c.optimizer;
  j["rate"] = c.rate;
  j["epsilon"] = c.epsilon
                     ? *c.epsilon
                     : planner::default_epsilon(planner::parse_algorithm(c.optimizer));
  j["seed"] = c.seed;
  j["tol"] = c.tol;
  j["patience"] = c.patience;
  j["heuristic"] = c.heuristic;
  return j;
}

json plan_json(const domains::DomainSpec& spec, const planner::PlanResult& r) {
  const std::size_t dim = r.action_dim;
  json actions = json::array();
  for (std::size_t t = 0; t < r.horizon; ++t) {
    json row = json::array();
    for (std::size_t j = 0; j < dim; ++j) {
      const double a = r.best_actions[t * dim + j];
      if (!(spec.action_bounds.lower[j] <= a && a <= spec.action_bounds.upper[j])) {
        throw NumericalError("plan action at step " + std::to_string(t) +
                             " violates its bounds");
      }
      row.push_back(a);
    }
    actions.push_back(std::move(row));
  }
  json constants = json::object();
  for (const auto& [k, v] : spec.constants) constants[k] = v;
  json j;
  j["domain"] = spec.name;
  j["seed"] = r.seed;
  j["best_instance"] = r.best_instance;
  j["best_value"] = r.best_value;
  j["best_epoch"] = r.best_epoch;
  j["epochs_run"] = r.epochs_run;
  j["horizon"] = r.horizon;
  j["action_dim"] = dim;
  j["state_dim"] = spec.state_dim;
  j["initial_state"] = spec.initial_state;
  j["action_bounds"] = {{"lower", spec.action_bounds.lower},
                        {"upper", spec.action_bounds.upper}};
  j["constants"] = constants;
  j["actions"] = std::move(actions);
  return j;
}

void write_curves(const fs::path& path, const std::string& label_column,
                  const std::vector<std::string>& labels,
                  const std::vector<planner::PlanResult>& results) {
  std::string csv = label_column + ",epoch,loss,best_value,wall_ms\n";
  for (std::size_t k = 0; k < results.size(); ++k) {
    for (const auto& r : results[k].history) csv += labels[k] + ',' + curve_row(r);
  }
  write_atomically(path, csv);
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

void ensure_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
  const fs::path probe = dir / ".gradplan_probe";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

RunOutputs run(const RunConfig& config) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  ensure_writable(config.out_dir);

  const domains::DomainParams params = resolve_params(config);
  const domains::DomainSpec spec = domains::make_domain(params);
  const planner::PlannerConfig pc =
      planner_config(config, config.optimizer, config.rate);
  const std::size_t horizon = pc.horizon == 0 ? spec.default_horizon : pc.horizon;

  RunOutputs out;
  out.curve = config.out_dir / "curve.csv";
  out.plan = config.out_dir / "plan.json";
  out.summary = config.out_dir / "summary.json";

  std::ofstream curve(out.curve, std::ios::binary | std::ios::trunc);
  if (!curve) throw IoError("cannot write " + out.curve.string());
  curve << "epoch,loss,best_value,wall_ms\n";

  json summary;
  summary["config"] = config_echo(config, horizon);
  summary["action_variables"] = pc.instances * horizon * spec.action_dim;
  try {
    out.result = planner::plan(spec, pc, [&curve](const planner::EpochRecord& r) {
      curve << curve_row(r);
      curve.flush();
    });
  } catch (const NumericalError& e) {
    summary["status"] = "numerical_failure";
    summary["error"] = e.what();
    summary["wall_ms"] =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    write_atomically(out.summary, summary.dump(2) + "\n");
    throw;
  }
  curve.close();

  if (config.heuristic) {
    out.heuristic_value =
        baselines::rollout_heuristic(spec, baselines::make_heuristic(params), horizon)
            .value;
  }
  write_atomically(out.plan, plan_json(spec, out.result).dump(2) + "\n");

  out.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  summary["status"] = "ok";
  summary["epochs_run"] = out.result.epochs_run;
  summary["best_epoch"] = out.result.best_epoch;
  summary["final_best_value"] = out.result.best_value;
  if (out.heuristic_value) summary["heuristic_value"] = *out.heuristic_value;
  summary["wall_ms"] = out.wall_ms;
  write_atomically(out.summary, summary.dump(2) + "\n");
  return out;
}

CurveSet compare_optimizers(const RunConfig& config,
                            std::span<const std::string> optimizers) {
  if (optimizers.size() < 2) {
    throw ConfigError("need at least two optimizers to compare", "optimizers");
  }
  for (const auto& name : optimizers) planner::parse_algorithm(name);
  ensure_writable(config.out_dir);
  const domains::DomainSpec spec = domains::make_domain(resolve_params(config));
  const std::size_t horizon = config.horizon == 0 ? spec.default_horizon : config.horizon;
  const planner::ActionTensor initial =
      planner::init_actions(spec, config.batch, horizon, config.seed);

  CurveSet set;
  set.csv = config.out_dir / "compare.csv";
  json finals = json::object();
  for (const auto& name : optimizers) {
    set.labels.push_back(name);
    set.results.push_back(
        planner::plan(spec, planner_config(config, name, config.rate), initial));
    finals[name] = set.results.back().best_value;
  }
  write_curves(set.csv, "optimizer", set.labels, set.results);
  json summary;
  summary["config"] = config_echo(config, horizon);
  summary["final_best_value"] = finals;
  write_atomically(config.out_dir / "compare_summary.json", summary.dump(2) + "\n");
  return set;
}

CurveSet sweep_rates(const RunConfig& config, std::span<const double> rates) {
  if (rates.empty()) throw ConfigError("need at least one rate", "rates");
  ensure_writable(config.out_dir);
  const domains::DomainSpec spec = domains::make_domain(resolve_params(config));
  const std::size_t horizon = config.horizon == 0 ? spec.default_horizon : config.horizon;
  const planner::ActionTensor initial =
      planner::init_actions(spec, config.batch, horizon, config.seed);

  CurveSet set;
  set.csv = config.out_dir / "sweep.csv";
  json finals = json::object();
  for (double rate : rates) {
    set.labels.push_back(format_real(rate));
    set.results.push_back(
        planner::plan(spec, planner_config(config, config.optimizer, rate), initial));
    finals[set.labels.back()] = set.results.back().best_value;
  }
  write_curves(set.csv, "rate", set.labels, set.results);
  json summary;
  summary["config"] = config_echo(config, horizon);
  summary["final_best_value"] = finals;
  write_atomically(config.out_dir / "sweep_summary.json", summary.dump(2) + "\n");
  return set;
}

}  // namespace gradplan::cli
