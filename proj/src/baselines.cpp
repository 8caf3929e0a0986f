#include "gradplan/baselines.hpp"

#include <algorithm>

#include "gradplan/errors.hpp"

namespace gradplan::baselines {

std::vector<double> nav_heuristic(std::span<const double> s,
                                  const domains::NavigationParams& p) {
  std::vector<double> a(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    a[j] = std::clamp(p.goal[j] - s[j], p.action_lower[j], p.action_upper[j]);
  }
  return a;
}

std::vector<double> reservoir_heuristic(std::span<const double> s,
                                        const domains::ReservoirParams& p) {
  std::vector<double> a(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double half = 0.5 * (p.upper[j] - p.lower[j]);
    const double excess = std::max(0.0, s[j] - half);
    a[j] = std::clamp(std::min(excess, s[j]), 0.0, p.max_flow[j]);
  }
  return a;
}

std::vector<double> hvac_heuristic(std::span<const double> s,
                                   const domains::HvacParams& p, double gain) {
  std::vector<double> a(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double center = 0.5 * (p.comfort_upper[j] + p.comfort_lower[j]);
    a[j] = std::clamp(gain * (center - s[j]), 0.0, p.max_air);
  }
  return a;
}

HeuristicPolicy make_heuristic(const domains::DomainParams& params) {
  HeuristicPolicy policy;
  policy.domain = domains::domain_name(params);
  if (const auto* nav = std::get_if<domains::NavigationParams>(&params)) {
    policy.rule = [p = *nav](std::span<const double> s) { return nav_heuristic(s, p); };
  } else if (const auto* res = std::get_if<domains::ReservoirParams>(&params)) {
    policy.rule = [p = *res](std::span<const double> s) {
      return reservoir_heuristic(s, p);
    };
  } else {
    policy.rule = [p = std::get<domains::HvacParams>(params)](
                      std::span<const double> s) { return hvac_heuristic(s, p); };
  }
  return policy;
}

HeuristicRollout rollout_heuristic(const domains::DomainSpec& spec,
                                   const HeuristicPolicy& policy,
                                   std::size_t horizon) {
  if (horizon == 0) throw ConfigError("must be at least 1", "horizon");
  domains::StepSimulator sim(spec);
  HeuristicRollout out;
  std::vector<double> s = spec.initial_state;
  out.states = s;
  for (std::size_t t = 0; t < horizon; ++t) {
    const std::vector<double> a = policy.rule(s);
    if (!spec.action_bounds.contains(a)) {
      throw NumericalError("heuristic emitted an out-of-bounds action at step " +
                           std::to_string(t));
    }
    auto step = sim.step(s, a);
    out.actions.insert(out.actions.end(), a.begin(), a.end());
    out.rewards.push_back(step.reward);
    out.value += step.reward;
    s = std::move(step.next_state);
    out.states.insert(out.states.end(), s.begin(), s.end());
  }
  return out;
}

}  // namespace gradplan::baselines
