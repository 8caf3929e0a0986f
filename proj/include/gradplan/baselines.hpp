#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gradplan/domains.hpp"

// Hand-designed closed-loop policies used as comparators for the planner.
// They map the current state to an action and are evaluated by forward
// simulation only.
namespace gradplan::baselines {

struct HeuristicPolicy {
  std::string domain;
  std::function<std::vector<double>(std::span<const double> state)> rule;
};

// Greedy step toward the goal: clamp(g - s) to the action bounds.
std::vector<double> nav_heuristic(std::span<const double> s,
                                  const domains::NavigationParams& params);

// Releases the excess above the middle of the level bounds, never more than
// the current level.
std::vector<double> reservoir_heuristic(std::span<const double> s,
                                        const domains::ReservoirParams& params);

// Proportional heating toward the comfort-band center, gain `gain`.
std::vector<double> hvac_heuristic(std::span<const double> s,
                                   const domains::HvacParams& params,
                                   double gain = 1.0);

HeuristicPolicy make_heuristic(const domains::DomainParams& params);

struct HeuristicRollout {
  std::vector<double> states;   // (t in 0..H, j)
  std::vector<double> actions;  // (t in 0..H-1, j)
  std::vector<double> rewards;  // (t in 1..H) stored at t-1
  double value = 0.0;
};

// Simulates the policy in closed loop for `horizon` steps from the domain's
// initial state.
HeuristicRollout rollout_heuristic(const domains::DomainSpec& spec,
                                   const HeuristicPolicy& policy,
                                   std::size_t horizon);

}  // namespace gradplan::baselines
