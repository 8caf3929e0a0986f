#include "gradplan/planner.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <limits>
#include <random>
#include <thread>

#include "gradplan/errors.hpp"

namespace gradplan::planner {

namespace {

// Builds one instance over `horizon` steps on `tape`, reading actions from
// `actions` in (step, dimension) order.
struct Unrolled {
  std::vector<NodeId> states;
  std::vector<NodeId> rewards;
  std::vector<std::uint32_t> step_end;
  NodeId value;
};

Unrolled unroll(autodiff::Tape& tape, const DomainSpec& spec,
                std::span<const NodeId> actions, std::size_t horizon) {
  Unrolled out;
  const std::size_t sd = spec.state_dim;
  const std::size_t ad = spec.action_dim;
  if (spec.initial_state.size() != sd) {
    throw ConfigError("initial state has the wrong dimension", spec.name);
  }
  out.states.reserve((horizon + 1) * sd);
  for (double s0 : spec.initial_state) out.states.push_back(tape.constant(s0));
  for (std::size_t t = 0; t < horizon; ++t) {
    const std::span<const NodeId> s(out.states.data() + t * sd, sd);
    const auto a = actions.subspan(t * ad, ad);
    out.rewards.push_back(spec.reward(tape, s, a));
    auto next = spec.transition(tape, s, a);
    if (next.size() != sd) {
      throw ConfigError("transition output dimension does not match state_dim",
                        spec.name);
    }
    out.states.insert(out.states.end(), next.begin(), next.end());
    out.step_end.push_back(static_cast<std::uint32_t>(tape.size()));
  }
  out.value = tape.sum(out.rewards);
  return out;
}

std::size_t resolve_workers(std::size_t requested, std::size_t instances) {
  return std::clamp<std::size_t>(requested, 1, std::max<std::size_t>(instances, 1));
}

// Uniform double in [0, 1) from the top 53 bits; portable across standard
// libraries, unlike std::uniform_real_distribution.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

bool ActionTensor::within_bounds() const {
  for (std::size_t i = 0; i < instances; ++i) {
    for (std::size_t t = 0; t < horizon; ++t) {
      for (std::size_t j = 0; j < dim; ++j) {
        const double a = at(i, t, j);
        if (!(bounds.lower[j] <= a && a <= bounds.upper[j])) return false;
      }
    }
  }
  return true;
}

UnrolledProgram::UnrolledProgram(const DomainSpec& spec, std::size_t horizon)
    : horizon_(horizon), state_dim_(spec.state_dim) {
  if (horizon == 0) throw ConfigError("must be at least 1", "horizon");
  std::vector<NodeId> actions(horizon * spec.action_dim);
  for (auto& a : actions) a = tape_.input();
  Unrolled u = unroll(tape_, spec, actions, horizon);
  states_ = std::move(u.states);
  rewards_ = std::move(u.rewards);
  step_end_ = std::move(u.step_end);
  value_ = u.value;
}

std::size_t UnrolledProgram::step_of(std::uint32_t node) const {
  const auto it = std::upper_bound(step_end_.begin(), step_end_.end(), node);
  return std::min<std::size_t>(it - step_end_.begin(), horizon_ - 1);
}

BatchEvaluator::BatchEvaluator(const DomainSpec& spec, std::size_t horizon,
                               std::size_t workers)
    : program_(spec, horizon),
      workers_(std::max<std::size_t>(workers, 1)),
      workspaces_(workers_) {}

double BatchEvaluator::evaluate(const ActionTensor& actions,
                                std::span<double> values,
                                std::span<double> loss_grads) {
  const std::size_t n = actions.instances;
  const std::size_t per = program_.action_count();
  if (actions.horizon * actions.dim != per || values.size() != n) {
    throw ConfigError("action tensor does not match the unrolled program",
                      "actions");
  }
  const bool want_grads = !loss_grads.empty();
  if (want_grads && loss_grads.size() != actions.data.size()) {
    throw ConfigError("gradient buffer has the wrong size", "actions");
  }
  const auto& tape = program_.tape();
  const NodeId out = program_.value();
  const double scale = 2.0 / static_cast<double>(n);

  const std::size_t workers = resolve_workers(workers_, n);
  std::vector<std::exception_ptr> errors(workers);
  auto run_chunk = [&](std::size_t w) {
    const std::size_t begin = w * n / workers;
    const std::size_t end = (w + 1) * n / workers;
    auto& ws = workspaces_[w];
    for (std::size_t i = begin; i < end; ++i) {
      try {
        ws.forward(tape, actions.instance(i));
      } catch (const NonFiniteError& e) {
        errors[w] = std::make_exception_ptr(
            RolloutError(i, program_.step_of(e.node())));
        return;
      }
      values[i] = ws.value(out);
      if (want_grads) {
        ws.backward(tape, out, scale * values[i]);
        ws.input_adjoints(tape, loss_grads.subspan(i * per, per));
      }
    }
  };
  if (workers == 1) {
    run_chunk(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run_chunk, w);
    run_chunk(0);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return batch_loss(values);
}

double BatchEvaluator::instance_gradient(std::span<const double> instance_actions,
                                         std::span<double> value_grads) {
  const auto& tape = program_.tape();
  auto& ws = workspaces_.front();
  try {
    ws.forward(tape, instance_actions);
  } catch (const NonFiniteError& e) {
    throw RolloutError(0, program_.step_of(e.node()));
  }
  ws.backward(tape, program_.value());
  ws.input_adjoints(tape, value_grads);
  return ws.value(program_.value());
}

Trajectory BatchEvaluator::trajectory(const ActionTensor& actions) {
  const std::size_t n = actions.instances;
  const std::size_t h = program_.horizon();
  const std::size_t sd = program_.state_dim();
  Trajectory traj;
  traj.instances = n;
  traj.horizon = h;
  traj.state_dim = sd;
  traj.states.resize(n * (h + 1) * sd);
  traj.rewards.resize(n * h);
  traj.values.resize(n);
  const auto& tape = program_.tape();
  auto& ws = workspaces_.front();
  for (std::size_t i = 0; i < n; ++i) {
    try {
      ws.forward(tape, actions.instance(i));
    } catch (const NonFiniteError& e) {
      throw RolloutError(i, program_.step_of(e.node()));
    }
    for (std::size_t t = 0; t <= h; ++t) {
      for (std::size_t j = 0; j < sd; ++j) {
        traj.states[(i * (h + 1) + t) * sd + j] = ws.value(program_.state(t, j));
      }
    }
    for (std::size_t t = 1; t <= h; ++t) {
      traj.rewards[i * h + t - 1] = ws.value(program_.reward(t));
    }
    traj.values[i] = ws.value(program_.value());
  }
  return traj;
}

BatchTape build_batch_tape(const DomainSpec& spec, std::size_t instances,
                           std::size_t horizon) {
  if (instances == 0) throw ConfigError("must be at least 1", "batch");
  if (horizon == 0) throw ConfigError("must be at least 1", "horizon");
  BatchTape batch;
  const std::size_t per = horizon * spec.action_dim;
  std::vector<NodeId> actions(instances * per);
  for (auto& a : actions) a = batch.tape.input();
  std::vector<NodeId> squares;
  for (std::size_t i = 0; i < instances; ++i) {
    const Unrolled u = unroll(batch.tape, spec,
                              std::span(actions).subspan(i * per, per), horizon);
    batch.values.push_back(u.value);
    squares.push_back(batch.tape.mul(u.value, u.value));
  }
  const std::vector<double> weights(instances, 1.0 / static_cast<double>(instances));
  batch.loss = batch.tape.dot(squares, weights);
  return batch;
}

ActionTensor init_actions(const DomainSpec& spec, std::size_t instances,
                          std::size_t horizon, std::uint64_t seed) {
  if (instances == 0) throw ConfigError("must be at least 1", "batch");
  if (horizon == 0) throw ConfigError("must be at least 1", "horizon");
  const Box& b = spec.action_bounds;
  if (b.lower.size() != spec.action_dim || b.upper.size() != spec.action_dim) {
    throw ConfigError("action bounds have the wrong dimension", spec.name);
  }
  for (std::size_t j = 0; j < spec.action_dim; ++j) {
    if (!(b.lower[j] <= b.upper[j])) {
      throw ConfigError("empty action interval in dimension " + std::to_string(j),
                        "action_bounds");
    }
  }
  ActionTensor a;
  a.instances = instances;
  a.horizon = horizon;
  a.dim = spec.action_dim;
  a.bounds = b;
  a.data.resize(instances * horizon * a.dim);
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < a.data.size(); ++k) {
    const std::size_t j = k % a.dim;
    const double lo = b.lower[j], hi = b.upper[j];
    a.data[k] = lo == hi ? lo : std::min(lo + (hi - lo) * unit_uniform(rng), hi);
  }
  return a;
}

Trajectory rollout(const DomainSpec& spec, const ActionTensor& actions,
                   std::size_t workers) {
  if (!actions.within_bounds()) {
    throw ConfigError("actions violate their bounds", "actions");
  }
  BatchEvaluator evaluator(spec, actions.horizon, workers);
  return evaluator.trajectory(actions);
}

double batch_loss(std::span<const double> values) {
  if (values.empty()) throw ConfigError("must be at least 1", "batch");
  double total = 0.0;
  for (double v : values) total += v * v;
  return total / static_cast<double>(values.size());
}

void project(ActionTensor& actions) {
  const std::size_t dim = actions.dim;
  for (std::size_t k = 0; k < actions.data.size(); ++k) {
    const std::size_t j = k % dim;
    actions.data[k] =
        std::clamp(actions.data[k], actions.bounds.lower[j], actions.bounds.upper[j]);
  }
}

ActionTensor projected(ActionTensor actions) {
  project(actions);
  return actions;
}

std::vector<double> project_discrete(std::span<const double> logits) {
  if (logits.empty()) throw ConfigError("need at least one choice", "logits");
  std::vector<double> one_hot(logits.size(), 0.0);
  one_hot[select_best(logits)] = 1.0;
  return one_hot;
}

std::size_t select_best(std::span<const double> values) {
  if (values.empty()) throw ConfigError("must be at least 1", "batch");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

PlanResult plan(const DomainSpec& spec, const PlannerConfig& config,
                const EpochObserver& observer) {
  const std::size_t horizon =
      config.horizon == 0 ? spec.default_horizon : config.horizon;
  return plan(spec, config,
              init_actions(spec, config.instances, horizon, config.seed),
              observer);
}

PlanResult plan(const DomainSpec& spec, const PlannerConfig& config,
                ActionTensor actions, const EpochObserver& observer) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  if (actions.instances == 0) throw ConfigError("must be at least 1", "batch");
  if (!actions.within_bounds()) {
    throw ConfigError("initial actions violate their bounds", "actions");
  }

  BatchEvaluator evaluator(spec, actions.horizon, config.workers);
  OptimizerState optimizer(config.optimizer, config.rate, actions.data.size(),
                           config.epsilon);
  std::vector<double> values(actions.instances);
  std::vector<double> grads(actions.data.size());

  PlanResult result;
  result.seed = config.seed;
  result.horizon = actions.horizon;
  result.action_dim = actions.dim;
  result.best_value = -std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  for (std::size_t epoch = 0;; ++epoch) {
    const bool last = epoch == config.epochs;
    const double loss = evaluator.evaluate(
        actions, values, last ? std::span<double>{} : std::span<double>(grads));

    const std::size_t best = select_best(values);
    const bool improved = values[best] > result.best_value + config.tol;
    if (values[best] > result.best_value) {
      result.best_value = values[best];
      result.best_instance = best;
      result.best_epoch = epoch;
      const auto src = actions.instance(best);
      result.best_actions.assign(src.begin(), src.end());
    }
    stale = improved ? 0 : stale + 1;

    const double wall =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    result.history.push_back({epoch, loss, result.best_value, wall});
    if (observer) observer(result.history.back());

    if (last || (config.patience > 0 && stale >= config.patience)) break;

    optimizer.step(actions.data, grads);
    project(actions);
    ++result.epochs_run;
  }
  return result;
}

}  // namespace gradplan::planner
