#include <algorithm>
#include <string>

#include "gradplan/domains.hpp"
#include "gradplan/errors.hpp"

namespace gradplan::domains {

namespace {

constexpr double kBelowSafeCost = 5.0;
constexpr double kAboveSafeCost = 100.0;
constexpr double kDeviationWeight = 0.1;
constexpr double kNonlinearLoss = 0.5;
constexpr double kLinearLoss = 0.1;

void check_size(const std::vector<double>& v, std::size_t n, const char* key) {
  if (v.size() != n) {
    throw ConfigError("expected " + std::to_string(n) + " entries, got " +
                          std::to_string(v.size()),
                      std::string("reservoir.") + key);
  }
}

void validate(const ReservoirParams& p) {
  const std::size_t n = p.count;
  if (n == 0) throw ConfigError("must be at least 1", "reservoir.count");
  check_size(p.rain, n, "rain");
  check_size(p.lower, n, "lower");
  check_size(p.upper, n, "upper");
  check_size(p.safe_lower, n, "safe_lower");
  check_size(p.safe_upper, n, "safe_upper");
  check_size(p.initial, n, "initial");
  check_size(p.max_flow, n, "max_flow");
  if (p.upstream.size() != n) {
    throw ConfigError("adjacency must be count x count", "reservoir.upstream");
  }
  std::vector<double> outflows(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (p.upstream[j].size() != n) {
      throw ConfigError("adjacency must be count x count", "reservoir.upstream");
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double w = p.upstream[j][k];
      if (w != 0.0 && w != 1.0) {
        throw ConfigError("adjacency entries must be 0 or 1",
                          "reservoir.upstream");
      }
      if (w != 0.0 && k >= j) {
        throw ConfigError("adjacency must be strictly lower triangular",
                          "reservoir.upstream");
      }
      outflows[k] += w;
    }
  }
  for (double out : outflows) {
    if (out > 1.0) {
      throw ConfigError("a reservoir may feed at most one downstream",
                        "reservoir.upstream");
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!(p.lower[j] <= p.safe_lower[j] && p.safe_lower[j] < p.safe_upper[j] &&
          p.safe_upper[j] <= p.upper[j])) {
      throw ConfigError("need lower <= safe_lower < safe_upper <= upper",
                        "reservoir.safe_lower");
    }
    if (!(p.lower[j] <= p.initial[j] && p.initial[j] <= p.upper[j])) {
      throw ConfigError("must lie within the level bounds", "reservoir.initial");
    }
    if (!(p.max_flow[j] >= 0.0)) {
      throw ConfigError("must be non-negative", "reservoir.max_flow");
    }
    if (!(p.rain[j] >= 0.0)) {
      throw ConfigError("must be non-negative", "reservoir.rain");
    }
  }
  if (!(p.max_capacity() > 0.0)) {
    throw ConfigError("largest capacity must be positive", "reservoir.upper");
  }
  if (p.horizon == 0) throw ConfigError("must be at least 1", "reservoir.horizon");
}

}  // namespace

double ReservoirParams::max_capacity() const {
  return upper.empty() ? 0.0 : *std::max_element(upper.begin(), upper.end());
}

ReservoirParams reservoir_chain(std::size_t count, ReservoirVariant variant) {
  ReservoirParams p;
  p.variant = variant;
  p.count = count;
  p.upstream.assign(count, std::vector<double>(count, 0.0));
  for (std::size_t j = 1; j < count; ++j) p.upstream[j][j - 1] = 1.0;
  p.rain.assign(count, 10.0);
  p.lower.assign(count, 0.0);
  p.upper.assign(count, 200.0);
  p.safe_lower.assign(count, 40.0);
  p.safe_upper.assign(count, 160.0);
  p.initial.assign(count, 100.0);
  p.max_flow = p.upper;
  return p;
}

std::vector<NodeId> reservoir_transition(Tape& t, std::span<const NodeId> s,
                                         std::span<const NodeId> a,
                                         const ReservoirParams& p) {
  const std::size_t n = p.count;
  const NodeId zero = t.constant(0.0);
  // Release cannot exceed the current (non-negative) level.
  std::vector<NodeId> flow(n);
  for (std::size_t j = 0; j < n; ++j) flow[j] = t.min2(a[j], t.max2(s[j], zero));

  const double m = p.max_capacity();
  std::vector<NodeId> next(n);
  std::vector<NodeId> terms;
  std::vector<double> weights;
  for (std::size_t j = 0; j < n; ++j) {
    NodeId loss;
    if (p.variant == ReservoirVariant::kNonlinear) {
      const NodeId wave = t.sin(t.div(s[j], t.constant(m)));
      loss = t.mul(t.mul(t.constant(kNonlinearLoss), s[j]), wave);
    } else {
      loss = t.mul(t.constant(kLinearLoss), s[j]);
    }
    terms = {s[j], loss, flow[j]};
    weights = {1.0, -1.0, -1.0};
    for (std::size_t k = 0; k < j; ++k) {
      if (p.upstream[j][k] != 0.0) {
        terms.push_back(flow[k]);
        weights.push_back(p.upstream[j][k]);
      }
    }
    next[j] = t.add(t.dot(terms, weights), t.constant(p.rain[j]));
  }
  return next;
}

NodeId reservoir_reward(Tape& t, std::span<const NodeId> s,
                        const ReservoirParams& p) {
  const std::size_t n = p.count;
  const NodeId zero = t.constant(0.0);
  const NodeId below = t.constant(kBelowSafeCost);
  const NodeId above = t.constant(kAboveSafeCost);
  std::vector<NodeId> terms;
  std::vector<double> weights;
  terms.reserve(2 * n);
  weights.reserve(2 * n);
  for (std::size_t j = 0; j < n; ++j) {
    const NodeId high = t.select(t.less(t.constant(p.safe_upper[j]), s[j]),
                                 above, zero);
    terms.push_back(
        t.select(t.less(s[j], t.constant(p.safe_lower[j])), below, high));
    weights.push_back(1.0);
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double center = 0.5 * (p.upper[j] + p.lower[j]);
    terms.push_back(t.abs(t.sub(t.constant(center), s[j])));
    weights.push_back(kDeviationWeight);
  }
  return t.neg(t.dot(terms, weights));
}

DomainSpec make_reservoir(const ReservoirParams& p) {
  validate(p);
  DomainSpec spec;
  spec.name = p.variant == ReservoirVariant::kNonlinear ? "reservoir-nonlinear"
                                                        : "reservoir-linear";
  spec.state_dim = p.count;
  spec.action_dim = p.count;
  spec.state_bounds = {p.lower, p.upper};
  spec.action_bounds = {std::vector<double>(p.count, 0.0), p.max_flow};
  spec.initial_state = p.initial;
  spec.default_horizon = p.horizon;
  spec.transition = [p](Tape& t, std::span<const NodeId> s,
                        std::span<const NodeId> a) {
    return reservoir_transition(t, s, a, p);
  };
  spec.reward = [p](Tape& t, std::span<const NodeId> s,
                    std::span<const NodeId>) { return reservoir_reward(t, s, p); };
  spec.constants = {{"rain", p.rain},
                    {"safe_lower", p.safe_lower},
                    {"safe_upper", p.safe_upper},
                    {"max_capacity", {p.max_capacity()}}};
  return spec;
}

}  // namespace gradplan::domains
