#include <string>

#include "gradplan/domains.hpp"
#include "gradplan/errors.hpp"

namespace gradplan::domains {

namespace {

bool is_binary(double v) { return v == 0.0 || v == 1.0; }

void validate(const HvacParams& p) {
  const std::size_t n = p.count;
  if (n == 0) throw ConfigError("must be at least 1", "hvac.count");
  auto check_size = [n](const std::vector<double>& v, const char* key) {
    if (v.size() != n) {
      throw ConfigError("expected " + std::to_string(n) + " entries, got " +
                            std::to_string(v.size()),
                        std::string("hvac.") + key);
    }
  };
  check_size(p.outside, "outside");
  check_size(p.hall, "hall");
  check_size(p.comfort_lower, "comfort_lower");
  check_size(p.comfort_upper, "comfort_upper");
  check_size(p.initial, "initial");
  if (p.adjacency.size() != n) {
    throw ConfigError("adjacency must be count x count", "hvac.adjacency");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (p.adjacency[j].size() != n) {
      throw ConfigError("adjacency must be count x count", "hvac.adjacency");
    }
    if (p.adjacency[j][j] != 0.0) {
      throw ConfigError("adjacency diagonal must be zero", "hvac.adjacency");
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!is_binary(p.adjacency[j][k]) ||
          p.adjacency[j][k] != p.adjacency[k][j]) {
        throw ConfigError("adjacency must be symmetric with 0/1 entries",
                          "hvac.adjacency");
      }
    }
    if (!is_binary(p.outside[j])) {
      throw ConfigError("entries must be 0 or 1", "hvac.outside");
    }
    if (!is_binary(p.hall[j])) {
      throw ConfigError("entries must be 0 or 1", "hvac.hall");
    }
    if (!(p.comfort_lower[j] <= p.comfort_upper[j])) {
      throw ConfigError("lower bound exceeds upper bound", "hvac.comfort_lower");
    }
    if (!(p.comfort_lower[j] <= p.initial[j] &&
          p.initial[j] <= p.comfort_upper[j])) {
      throw ConfigError("must lie within the comfort band", "hvac.initial");
    }
  }
  if (!(p.w_room > 0.0)) throw ConfigError("must be positive", "hvac.w_room");
  if (!(p.w_outside > 0.0)) throw ConfigError("must be positive", "hvac.w_outside");
  if (!(p.w_hall > 0.0)) throw ConfigError("must be positive", "hvac.w_hall");
  if (!(p.alpha > 0.0)) throw ConfigError("must be positive", "hvac.alpha");
  if (!(p.cost >= 0.0)) throw ConfigError("must be non-negative", "hvac.cost");
  if (!(p.max_air > 0.0)) throw ConfigError("must be positive", "hvac.max_air");
  if (p.horizon == 0) throw ConfigError("must be at least 1", "hvac.horizon");
}

}  // namespace

HvacParams hvac_building(std::size_t floors, std::size_t rooms_per_floor) {
  HvacParams p;
  const std::size_t n = floors * rooms_per_floor;
  p.floors = floors;
  p.rooms_per_floor = rooms_per_floor;
  p.count = n;
  p.adjacency.assign(n, std::vector<double>(n, 0.0));
  p.outside.assign(n, 0.0);
  p.hall.assign(n, 0.0);
  auto link = [&p](std::size_t a, std::size_t b) {
    p.adjacency[a][b] = 1.0;
    p.adjacency[b][a] = 1.0;
  };
  for (std::size_t f = 0; f < floors; ++f) {
    for (std::size_t k = 0; k < rooms_per_floor; ++k) {
      const std::size_t j = f * rooms_per_floor + k;
      if (k + 1 < rooms_per_floor) link(j, j + 1);
      if (f + 1 < floors) link(j, j + rooms_per_floor);
      if (f == 0 || f + 1 == floors || k == 0 || k + 1 == rooms_per_floor) {
        p.outside[j] = 1.0;
      }
      if (k == 0) p.hall[j] = 1.0;
    }
  }
  p.comfort_lower.assign(n, 20.0);
  p.comfort_upper.assign(n, 25.0);
  p.initial.assign(n, 20.0);
  return p;
}

std::vector<NodeId> hvac_transition(Tape& t, std::span<const NodeId> s,
                                    std::span<const NodeId> a,
                                    const HvacParams& p) {
  const std::size_t n = p.count;
  // Per room: heat inflow terms and their weights, summed by one dot node.
  std::vector<std::vector<NodeId>> terms(n);
  std::vector<std::vector<double>> weights(n);

  const NodeId vent = t.constant(p.vent_temp);
  for (std::size_t j = 0; j < n; ++j) {
    terms[j].push_back(t.mul(a[j], t.sub(vent, s[j])));
    weights[j].push_back(1.0);
  }
  // Room-to-room exchange; each linked pair shares one difference node.
  const double room_weight = 1.0 / p.w_room;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      if (p.adjacency[j][k] == 0.0) continue;
      const NodeId diff = t.sub(s[k], s[j]);
      terms[j].push_back(diff);
      weights[j].push_back(room_weight);
      terms[k].push_back(diff);
      weights[k].push_back(-room_weight);
    }
  }
  const NodeId outside = t.constant(p.outside_temp);
  const NodeId hall = t.constant(p.hall_temp);
  for (std::size_t j = 0; j < n; ++j) {
    if (p.outside[j] != 0.0) {
      terms[j].push_back(t.sub(outside, s[j]));
      weights[j].push_back(p.outside[j] / p.w_outside);
    }
    if (p.hall[j] != 0.0) {
      terms[j].push_back(t.sub(hall, s[j]));
      weights[j].push_back(p.hall[j] / p.w_hall);
    }
  }

  const NodeId alpha = t.constant(p.alpha);
  std::vector<NodeId> next(n);
  for (std::size_t j = 0; j < n; ++j) {
    next[j] = t.add(s[j], t.mul(alpha, t.dot(terms[j], weights[j])));
  }
  return next;
}

NodeId hvac_reward(Tape& t, std::span<const NodeId> s,
                   std::span<const NodeId> a, const HvacParams& p) {
  const std::size_t n = p.count;
  std::vector<NodeId> terms;
  std::vector<double> weights;
  terms.reserve(2 * n);
  weights.reserve(2 * n);
  for (std::size_t j = 0; j < n; ++j) {
    terms.push_back(a[j]);
    weights.push_back(p.cost);
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double center = 0.5 * (p.comfort_upper[j] + p.comfort_lower[j]);
    terms.push_back(t.abs(t.sub(t.constant(center), s[j])));
    weights.push_back(1.0);
  }
  return t.neg(t.dot(terms, weights));
}

DomainSpec make_hvac(const HvacParams& p) {
  validate(p);
  DomainSpec spec;
  spec.name = "hvac";
  spec.state_dim = p.count;
  spec.action_dim = p.count;
  spec.state_bounds = {p.comfort_lower, p.comfort_upper};
  spec.action_bounds = {std::vector<double>(p.count, 0.0),
                        std::vector<double>(p.count, p.max_air)};
  spec.initial_state = p.initial;
  spec.default_horizon = p.horizon;
  spec.transition = [p](Tape& t, std::span<const NodeId> s,
                        std::span<const NodeId> a) {
    return hvac_transition(t, s, a, p);
  };
  spec.reward = [p](Tape& t, std::span<const NodeId> s,
                    std::span<const NodeId> a) { return hvac_reward(t, s, a, p); };
  spec.constants = {{"vent_temp", {p.vent_temp}},
                    {"outside_temp", {p.outside_temp}},
                    {"hall_temp", {p.hall_temp}},
                    {"alpha", {p.alpha}},
                    {"cost", {p.cost}}};
  return spec;
}

}  // namespace gradplan::domains
