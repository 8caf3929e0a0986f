#include <algorithm>
#include <string>

#include "gradplan/domains.hpp"
#include "gradplan/errors.hpp"
#include "parse_util.hpp"

namespace gradplan::domains {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Replaces `target` with a list of the same length, or broadcasts a single
// value over it.
void assign_vector(std::vector<double>& target, std::string_view value,
                   const std::string& key) {
  auto values = detail::parse_reals(value, key);
  if (values.size() == 1) {
    std::fill(target.begin(), target.end(), values[0]);
  } else if (values.size() == target.size()) {
    target = std::move(values);
  } else {
    throw ConfigError("expected 1 or " + std::to_string(target.size()) +
                          " values, got " + std::to_string(values.size()),
                      key);
  }
}

void override_nav(NavigationParams& p, std::string_view field,
                  std::string_view value, const std::string& key) {
  if (field == "zone") return assign_vector(p.zone, value, key);
  if (field == "goal") return assign_vector(p.goal, value, key);
  if (field == "start") return assign_vector(p.start, value, key);
  if (field == "lower") return assign_vector(p.lower, value, key);
  if (field == "upper") return assign_vector(p.upper, value, key);
  if (field == "action_lower") return assign_vector(p.action_lower, value, key);
  if (field == "action_upper") return assign_vector(p.action_upper, value, key);
  if (field == "horizon") {
    p.horizon = detail::parse_count(value, key);
    return;
  }
  throw ConfigError("unknown key", key);
}

void override_reservoir(ReservoirParams& p, std::string_view field,
                        std::string_view value, const std::string& key) {
  if (field == "count") {
    const std::size_t count = detail::parse_count(value, key);
    if (count == 0) throw ConfigError("must be at least 1", key);
    const std::size_t horizon = p.horizon;
    const double rain = p.rain.empty() ? 10.0 : p.rain.front();
    p = reservoir_chain(count, p.variant);
    p.horizon = horizon;
    p.rain.assign(count, rain);
    return;
  }
  if (field == "rain") return assign_vector(p.rain, value, key);
  if (field == "lower") return assign_vector(p.lower, value, key);
  if (field == "upper") return assign_vector(p.upper, value, key);
  if (field == "safe_lower") return assign_vector(p.safe_lower, value, key);
  if (field == "safe_upper") return assign_vector(p.safe_upper, value, key);
  if (field == "initial") return assign_vector(p.initial, value, key);
  if (field == "max_flow") return assign_vector(p.max_flow, value, key);
  if (field == "horizon") {
    p.horizon = detail::parse_count(value, key);
    return;
  }
  throw ConfigError("unknown key", key);
}

void override_hvac(HvacParams& p, std::string_view field, std::string_view value,
                   const std::string& key) {
  if (field == "floors" || field == "rooms_per_floor") {
    const std::size_t n = detail::parse_count(value, key);
    if (n == 0) throw ConfigError("must be at least 1", key);
    const std::size_t floors = field == "floors" ? n : p.floors;
    const std::size_t rooms = field == "floors" ? p.rooms_per_floor : n;
    HvacParams fresh = hvac_building(floors, rooms);
    fresh.vent_temp = p.vent_temp;
    fresh.outside_temp = p.outside_temp;
    fresh.hall_temp = p.hall_temp;
    fresh.w_room = p.w_room;
    fresh.w_outside = p.w_outside;
    fresh.w_hall = p.w_hall;
    fresh.alpha = p.alpha;
    fresh.cost = p.cost;
    fresh.max_air = p.max_air;
    fresh.horizon = p.horizon;
    p = std::move(fresh);
    return;
  }
  const std::pair<std::string_view, double*> scalars[] = {
      {"vent_temp", &p.vent_temp}, {"outside_temp", &p.outside_temp},
      {"hall_temp", &p.hall_temp}, {"w_room", &p.w_room},
      {"w_outside", &p.w_outside}, {"w_hall", &p.w_hall},
      {"alpha", &p.alpha},         {"cost", &p.cost},
      {"max_air", &p.max_air}};
  for (const auto& [name, target] : scalars) {
    if (field == name) {
      *target = detail::parse_real(value, key);
      return;
    }
  }
  if (field == "comfort_lower") return assign_vector(p.comfort_lower, value, key);
  if (field == "comfort_upper") return assign_vector(p.comfort_upper, value, key);
  if (field == "initial") return assign_vector(p.initial, value, key);
  if (field == "horizon") {
    p.horizon = detail::parse_count(value, key);
    return;
  }
  throw ConfigError("unknown key", key);
}

}  // namespace

bool Box::contains(std::span<const double> x) const {
  if (x.size() != lower.size()) return false;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(lower[j] <= x[j] && x[j] <= upper[j])) return false;
  }
  return true;
}

std::vector<std::string> domain_names() {
  return {"nav-nonlinear",       "nav-bilinear",     "nav-linear",
          "reservoir-nonlinear", "reservoir-linear", "hvac"};
}

DomainParams default_params(std::string_view name) {
  if (name == "nav-nonlinear") return NavigationParams{NavVariant::kNonlinear};
  if (name == "nav-bilinear") return NavigationParams{NavVariant::kBilinear};
  if (name == "nav-linear") return NavigationParams{NavVariant::kLinear};
  if (name == "reservoir-nonlinear") {
    return reservoir_chain(20, ReservoirVariant::kNonlinear);
  }
  if (name == "reservoir-linear") {
    return reservoir_chain(20, ReservoirVariant::kLinear);
  }
  if (name == "hvac") return hvac_building(5, 12);
  throw ConfigError("unknown domain '" + std::string(name) + "'", "domain");
}

DomainSpec make_domain(const DomainParams& params) {
  return std::visit(
      Overloaded{
          [](const NavigationParams& p) { return make_navigation(p); },
          [](const ReservoirParams& p) { return make_reservoir(p); },
          [](const HvacParams& p) { return make_hvac(p); },
      },
      params);
}

std::string domain_name(const DomainParams& params) {
  return std::visit(
      Overloaded{
          [](const NavigationParams& p) -> std::string {
            switch (p.variant) {
              case NavVariant::kNonlinear: return "nav-nonlinear";
              case NavVariant::kBilinear: return "nav-bilinear";
              case NavVariant::kLinear: return "nav-linear";
            }
            return "nav";
          },
          [](const ReservoirParams& p) -> std::string {
            return p.variant == ReservoirVariant::kNonlinear
                       ? "reservoir-nonlinear"
                       : "reservoir-linear";
          },
          [](const HvacParams&) -> std::string { return "hvac"; },
      },
      params);
}

std::string_view override_prefix(const DomainParams& params) {
  switch (params.index()) {
    case 0: return "nav";
    case 1: return "reservoir";
    default: return "hvac";
  }
}

void apply_override(DomainParams& params, std::string_view key,
                    std::string_view value) {
  const std::string full(key);
  const auto dot = key.find('.');
  if (dot == std::string_view::npos || key.substr(0, dot) != override_prefix(params)) {
    throw ConfigError("unknown key for domain " + domain_name(params), full);
  }
  const std::string_view field = key.substr(dot + 1);
  std::visit(
      Overloaded{
          [&](NavigationParams& p) { override_nav(p, field, value, full); },
          [&](ReservoirParams& p) { override_reservoir(p, field, value, full); },
          [&](HvacParams& p) { override_hvac(p, field, value, full); },
      },
      params);
}

StepSimulator::StepSimulator(const DomainSpec& spec)
    : state_dim_(spec.state_dim), action_dim_(spec.action_dim) {
  std::vector<NodeId> s(state_dim_), a(action_dim_);
  for (auto& n : s) n = tape_.input();
  for (auto& n : a) n = tape_.input();
  next_ = spec.transition(tape_, s, a);
  reward_ = spec.reward(tape_, s, a);
  if (next_.size() != state_dim_) {
    throw ConfigError("transition output dimension does not match state_dim",
                      spec.name);
  }
  inputs_.resize(state_dim_ + action_dim_);
}

StepSimulator::Step StepSimulator::step(std::span<const double> state,
                                        std::span<const double> action) {
  if (state.size() != state_dim_ || action.size() != action_dim_) {
    throw ConfigError("state/action dimension mismatch", "step");
  }
  std::copy(state.begin(), state.end(), inputs_.begin());
  std::copy(action.begin(), action.end(), inputs_.begin() + state_dim_);
  workspace_.forward(tape_, inputs_);
  Step out;
  out.next_state.resize(state_dim_);
  for (std::size_t j = 0; j < state_dim_; ++j) {
    out.next_state[j] = workspace_.value(next_[j]);
  }
  out.reward = workspace_.value(reward_);
  return out;
}

}  // namespace gradplan::domains
