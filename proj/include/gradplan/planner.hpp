#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gradplan/autodiff.hpp"
#include "gradplan/domains.hpp"
#include "gradplan/optimizer.hpp"

// Planning by backpropagation: the domain is unrolled over the horizon into a
// tape, each of N independent instances carries its own action sequence, and
// all of them are optimized together by projected gradient descent on
// L = (1/N) sum_i V_i^2.
namespace gradplan::planner {

using autodiff::NodeId;
using domains::Box;
using domains::DomainSpec;

// Actions indexed (instance, step, dimension), row-major in that order.
struct ActionTensor {
  std::size_t instances = 0;
  std::size_t horizon = 0;
  std::size_t dim = 0;
  std::vector<double> data;
  Box bounds;

  std::size_t index(std::size_t i, std::size_t t, std::size_t j) const {
    return (i * horizon + t) * dim + j;
  }
  double& at(std::size_t i, std::size_t t, std::size_t j) { return data[index(i, t, j)]; }
  double at(std::size_t i, std::size_t t, std::size_t j) const { return data[index(i, t, j)]; }
  std::span<double> instance(std::size_t i) {
    return std::span(data).subspan(i * horizon * dim, horizon * dim);
  }
  std::span<const double> instance(std::size_t i) const {
    return std::span(data).subspan(i * horizon * dim, horizon * dim);
  }
  bool within_bounds() const;
};

struct Trajectory {
  std::size_t instances = 0;
  std::size_t horizon = 0;
  std::size_t state_dim = 0;
  std::vector<double> states;   // (i, t in 0..H, j)
  std::vector<double> rewards;  // (i, t in 1..H) stored at t-1
  std::vector<double> values;   // V_i

  double state(std::size_t i, std::size_t t, std::size_t j) const {
    return states[(i * (horizon + 1) + t) * state_dim + j];
  }
  double reward(std::size_t i, std::size_t t) const {
    return rewards[i * horizon + (t - 1)];
  }
};

// One instance of the domain unrolled over `horizon` steps. Inputs are the
// actions in (step, dimension) order; the output is V.
class UnrolledProgram {
 public:
  UnrolledProgram(const DomainSpec& spec, std::size_t horizon);

  const autodiff::Tape& tape() const noexcept { return tape_; }
  std::size_t horizon() const noexcept { return horizon_; }
  std::size_t state_dim() const noexcept { return state_dim_; }
  std::size_t action_count() const noexcept { return tape_.input_count(); }
  NodeId value() const noexcept { return value_; }
  NodeId state(std::size_t t, std::size_t j) const {
    return states_[t * state_dim_ + j];
  }
  NodeId reward(std::size_t t) const { return rewards_[t - 1]; }

  // Decision step (0-based) whose transition or reward produced `node`.
  std::size_t step_of(std::uint32_t node) const;

 private:
  autodiff::Tape tape_;
  std::size_t horizon_;
  std::size_t state_dim_;
  std::vector<NodeId> states_;
  std::vector<NodeId> rewards_;
  std::vector<std::uint32_t> step_end_;
  NodeId value_;
};

// Evaluates V_i and dL/da for every instance of an ActionTensor, fanning the
// instances out over `workers` threads. Each worker owns its own workspace;
// results do not depend on the worker count.
class BatchEvaluator {
 public:
  BatchEvaluator(const DomainSpec& spec, std::size_t horizon,
                 std::size_t workers = 1);

  // Fills `values` (size N) and returns L. When `loss_grads` is non-empty it
  // receives dL/da with the layout of `actions.data`. Throws RolloutError for
  // the lowest instance whose rollout hits a non-finite value.
  double evaluate(const ActionTensor& actions, std::span<double> values,
                  std::span<double> loss_grads = {});

  // V_i and dV_i/da for a single instance.
  double instance_gradient(std::span<const double> instance_actions,
                           std::span<double> value_grads);

  Trajectory trajectory(const ActionTensor& actions);

  const UnrolledProgram& program() const noexcept { return program_; }
  std::size_t workers() const noexcept { return workers_; }

 private:
  UnrolledProgram program_;
  std::size_t workers_;
  std::vector<autodiff::Workspace> workspaces_;
};

// All N instances and the loss on one tape. Inputs follow ActionTensor
// layout. Used as the reference for the per-instance gradient factorization.
struct BatchTape {
  autodiff::Tape tape;
  std::vector<NodeId> values;
  NodeId loss;
};
BatchTape build_batch_tape(const DomainSpec& spec, std::size_t instances,
                           std::size_t horizon);

// Uniform in the action bounds, deterministic given the seed.
ActionTensor init_actions(const DomainSpec& spec, std::size_t instances,
                          std::size_t horizon, std::uint64_t seed);

Trajectory rollout(const DomainSpec& spec, const ActionTensor& actions,
                   std::size_t workers = 1);

// (1/N) sum_i V_i^2.
double batch_loss(std::span<const double> values);

// Clamps every coordinate to its dimension's bounds.
void project(ActionTensor& actions);
ActionTensor projected(ActionTensor actions);

// One-hot vector at the argmax; ties go to the lowest index.
std::vector<double> project_discrete(std::span<const double> logits);

// argmax_i V_i; ties go to the lowest index.
std::size_t select_best(std::span<const double> values);

struct PlannerConfig {
  std::size_t instances = 100;
  std::size_t horizon = 0;  // 0 selects the domain's default horizon
  std::size_t epochs = 1000;
  Algorithm optimizer = Algorithm::kRmsProp;
  double rate = 0.01;
  std::optional<double> epsilon;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  std::size_t patience = 200;
  std::size_t workers = 1;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double best_value = 0.0;  // best-so-far over projected actions
  double wall_ms = 0.0;
};

struct PlanResult {
  std::size_t best_instance = 0;
  std::vector<double> best_actions;  // (step, dimension)
  double best_value = 0.0;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;  // entry 0 is the initialization
  std::size_t epochs_run = 0;
  std::uint64_t seed = 0;
  std::size_t horizon = 0;
  std::size_t action_dim = 0;
};

// Called once per history entry, as soon as it is recorded.
using EpochObserver = std::function<void(const EpochRecord&)>;

// Runs rollout, loss, backward, optimizer step and projection for up to
// `config.epochs` epochs, stopping early once the best-so-far value has not
// improved by more than `config.tol` for `config.patience` epochs in a row.
PlanResult plan(const DomainSpec& spec, const PlannerConfig& config,
                const EpochObserver& observer = {});
PlanResult plan(const DomainSpec& spec, const PlannerConfig& config,
                ActionTensor initial, const EpochObserver& observer = {});

}  // namespace gradplan::planner
