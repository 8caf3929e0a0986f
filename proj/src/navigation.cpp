#include <cmath>
#include <string>

#include "gradplan/domains.hpp"
#include "gradplan/errors.hpp"

namespace gradplan::domains {

namespace {

struct LinearStep {
  double threshold;
  double lambda;
};

// Piecewise-constant discretization of the bilinear factor; entries are
// checked in order, the first threshold d falls under wins.
constexpr LinearStep kLinearTable[] = {
    {0.8, 0.05}, {1.6, 0.2}, {2.4, 0.4}, {3.6, 0.6}, {4.0, 0.8}};
constexpr double kLinearFar = 1.0;

constexpr double kBilinearRadius = 4.0;

std::string variant_name(NavVariant v) {
  switch (v) {
    case NavVariant::kNonlinear: return "nonlinear";
    case NavVariant::kBilinear: return "bilinear";
    case NavVariant::kLinear: return "linear";
  }
  throw ConfigError("unknown navigation variant", "variant");
}

void check_dim(const std::vector<double>& v, std::size_t dim, const char* key) {
  if (v.size() != dim) {
    throw ConfigError("expected " + std::to_string(dim) + " entries, got " +
                          std::to_string(v.size()),
                      std::string("nav.") + key);
  }
}

void check_inside(const std::vector<double>& v, const NavigationParams& p,
                  const char* key) {
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!(p.lower[j] <= v[j] && v[j] <= p.upper[j])) {
      throw ConfigError("must lie within the state bounds",
                        std::string("nav.") + key);
    }
  }
}

}  // namespace

double nav_lambda(double d, NavVariant variant) {
  if (!(d >= 0.0)) throw ConfigError("distance must be non-negative", "d");
  switch (variant) {
    case NavVariant::kNonlinear:
      return 2.0 / (1.0 + std::exp(-2.0 * d)) - 0.99;
    case NavVariant::kBilinear:
      return d < kBilinearRadius ? d / kBilinearRadius : 1.0;
    case NavVariant::kLinear:
      for (const auto& step : kLinearTable) {
        if (d < step.threshold) return step.lambda;
      }
      return kLinearFar;
  }
  throw ConfigError("unknown navigation variant", "variant");
}

NodeId nav_lambda(Tape& t, NodeId d, NavVariant variant) {
  switch (variant) {
    case NavVariant::kNonlinear: {
      const NodeId e = t.exp(t.mul(t.constant(-2.0), d));
      return t.sub(t.div(t.constant(2.0), t.add(t.constant(1.0), e)),
                   t.constant(0.99));
    }
    case NavVariant::kBilinear:
      return t.select(t.less(d, t.constant(kBilinearRadius)),
                      t.div(d, t.constant(kBilinearRadius)), t.constant(1.0));
    case NavVariant::kLinear: {
      NodeId lambda = t.constant(kLinearFar);
      for (auto it = std::rbegin(kLinearTable); it != std::rend(kLinearTable);
           ++it) {
        lambda = t.select(t.less(d, t.constant(it->threshold)),
                          t.constant(it->lambda), lambda);
      }
      return lambda;
    }
  }
  throw ConfigError("unknown navigation variant", "variant");
}

std::vector<NodeId> nav_transition(Tape& t, std::span<const NodeId> s,
                                   std::span<const NodeId> a,
                                   const NavigationParams& p) {
  const std::size_t dim = p.zone.size();
  std::vector<NodeId> terms(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const NodeId diff = t.sub(s[j], t.constant(p.zone[j]));
    terms[j] = p.variant == NavVariant::kNonlinear ? t.mul(diff, diff)
                                                   : t.abs(diff);
  }
  NodeId d = t.sum(terms);
  if (p.variant == NavVariant::kNonlinear) d = t.sqrt(d);
  const NodeId lambda = nav_lambda(t, d, p.variant);

  std::vector<NodeId> next(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const NodeId proposed = t.add(s[j], t.mul(lambda, a[j]));
    next[j] = t.clamp(proposed, p.lower[j], p.upper[j]);
  }
  return next;
}

NodeId nav_reward(Tape& t, std::span<const NodeId> s,
                  const NavigationParams& p) {
  std::vector<NodeId> terms(p.goal.size());
  for (std::size_t j = 0; j < terms.size(); ++j) {
    terms[j] = t.abs(t.sub(s[j], t.constant(p.goal[j])));
  }
  return t.neg(t.sum(terms));
}

DomainSpec make_navigation(const NavigationParams& p) {
  const std::size_t dim = p.zone.size();
  if (dim == 0) throw ConfigError("must have at least one entry", "nav.zone");
  check_dim(p.goal, dim, "goal");
  check_dim(p.start, dim, "start");
  check_dim(p.lower, dim, "lower");
  check_dim(p.upper, dim, "upper");
  check_dim(p.action_lower, dim, "action_lower");
  check_dim(p.action_upper, dim, "action_upper");
  for (std::size_t j = 0; j < dim; ++j) {
    if (!(p.lower[j] <= p.upper[j])) {
      throw ConfigError("lower bound exceeds upper bound", "nav.lower");
    }
    if (!(p.action_lower[j] <= p.action_upper[j])) {
      throw ConfigError("lower bound exceeds upper bound", "nav.action_lower");
    }
  }
  check_inside(p.zone, p, "zone");
  check_inside(p.goal, p, "goal");
  check_inside(p.start, p, "start");
  if (p.horizon == 0) throw ConfigError("must be at least 1", "nav.horizon");

  DomainSpec spec;
  spec.name = "nav-" + variant_name(p.variant);
  spec.state_dim = dim;
  spec.action_dim = dim;
  spec.state_bounds = {p.lower, p.upper};
  spec.action_bounds = {p.action_lower, p.action_upper};
  spec.initial_state = p.start;
  spec.default_horizon = p.horizon;
  spec.transition = [p](Tape& t, std::span<const NodeId> s,
                        std::span<const NodeId> a) {
    return nav_transition(t, s, a, p);
  };
  spec.reward = [p](Tape& t, std::span<const NodeId> s,
                    std::span<const NodeId>) { return nav_reward(t, s, p); };
  spec.constants = {{"zone", p.zone}, {"goal", p.goal}};
  return spec;
}

}  // namespace gradplan::domains
