#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gradplan/autodiff.hpp"

namespace gradplan::domains {

using autodiff::NodeId;
using autodiff::Tape;

// Axis-aligned per-dimension interval.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t size() const noexcept { return lower.size(); }
  bool contains(std::span<const double> x) const;
};

using TransitionBuilder = std::function<std::vector<NodeId>(
    Tape&, std::span<const NodeId> state, std::span<const NodeId> action)>;
using RewardBuilder = std::function<NodeId(
    Tape&, std::span<const NodeId> state, std::span<const NodeId> action)>;

// A planning domain: dimensions, bounds, initial state and tape builders for
// one transition step and one step reward.
struct DomainSpec {
  std::string name;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  Box state_bounds;
  Box action_bounds;
  std::vector<double> initial_state;
  TransitionBuilder transition;
  RewardBuilder reward;
  std::size_t default_horizon = 1;
  // Named constants, reported as metadata.
  std::map<std::string, std::vector<double>> constants;
};

// ---------------------------------------------------------------- Navigation

enum class NavVariant { kNonlinear, kBilinear, kLinear };

struct NavigationParams {
  NavVariant variant = NavVariant::kNonlinear;
  std::vector<double> zone{5.0, 5.0};
  std::vector<double> goal{9.0, 9.0};
  std::vector<double> start{1.0, 1.0};
  std::vector<double> lower{0.0, 0.0};
  std::vector<double> upper{10.0, 10.0};
  std::vector<double> action_lower{-1.0, -1.0};
  std::vector<double> action_upper{1.0, 1.0};
  std::size_t horizon = 120;
};

// Velocity reduction factor for a distance d >= 0 from the zone center.
// Nonlinear uses Euclidean distance, the others Manhattan distance; the
// caller supplies the appropriate d.
double nav_lambda(double d, NavVariant variant);
NodeId nav_lambda(Tape& tape, NodeId d, NavVariant variant);

std::vector<NodeId> nav_transition(Tape& tape, std::span<const NodeId> s,
                                   std::span<const NodeId> a,
                                   const NavigationParams& params);
NodeId nav_reward(Tape& tape, std::span<const NodeId> s,
                  const NavigationParams& params);

DomainSpec make_navigation(const NavigationParams& params);

// ----------------------------------------------------------------- Reservoir

enum class ReservoirVariant { kNonlinear, kLinear };

struct ReservoirParams {
  ReservoirVariant variant = ReservoirVariant::kNonlinear;
  std::size_t count = 20;
  // upstream[j][k] == 1 when reservoir k releases into reservoir j. Strictly
  // lower triangular; every reservoir feeds at most one downstream.
  std::vector<std::vector<double>> upstream;
  std::vector<double> rain;
  std::vector<double> lower;       // level bounds l
  std::vector<double> upper;       // level bounds u
  std::vector<double> safe_lower;  // L
  std::vector<double> safe_upper;  // U
  std::vector<double> initial;
  // Static release bound; the level cap a <= s is applied in the transition.
  std::vector<double> max_flow;
  std::size_t horizon = 120;

  // Largest capacity m = max_j u_j.
  double max_capacity() const;
};

// Default layout: single chain 0 -> 1 -> ... -> count-1.
ReservoirParams reservoir_chain(std::size_t count, ReservoirVariant variant);

std::vector<NodeId> reservoir_transition(Tape& tape, std::span<const NodeId> s,
                                         std::span<const NodeId> a,
                                         const ReservoirParams& params);
NodeId reservoir_reward(Tape& tape, std::span<const NodeId> s,
                        const ReservoirParams& params);

DomainSpec make_reservoir(const ReservoirParams& params);

// ---------------------------------------------------------------------- HVAC

struct HvacParams {
  std::size_t floors = 5;
  std::size_t rooms_per_floor = 12;
  std::size_t count = 60;
  // Symmetric room adjacency with zero diagonal.
  std::vector<std::vector<double>> adjacency;
  std::vector<double> outside;  // o
  std::vector<double> hall;     // h
  double vent_temp = 40.0;
  double outside_temp = 5.0;
  double hall_temp = 20.0;
  double w_room = 1.0;
  double w_outside = 1.0;
  double w_hall = 1.0;
  double alpha = 0.05;
  double cost = 1.0;
  std::vector<double> comfort_lower;
  std::vector<double> comfort_upper;
  double max_air = 10.0;
  std::vector<double> initial;
  std::size_t horizon = 96;
};

// Building of `floors` x `rooms_per_floor` rooms. Rooms are linked to their
// horizontal neighbors on a floor and to the rooms directly above and below.
// Rooms on the boundary of the floor/room grid have an outside wall, and the
// first room of every floor borders the hallway.
HvacParams hvac_building(std::size_t floors, std::size_t rooms_per_floor);

std::vector<NodeId> hvac_transition(Tape& tape, std::span<const NodeId> s,
                                    std::span<const NodeId> a,
                                    const HvacParams& params);
NodeId hvac_reward(Tape& tape, std::span<const NodeId> s,
                   std::span<const NodeId> a, const HvacParams& params);

DomainSpec make_hvac(const HvacParams& params);

// ------------------------------------------------------------------ Registry

using DomainParams = std::variant<NavigationParams, ReservoirParams, HvacParams>;

// Known names: nav-nonlinear, nav-bilinear, nav-linear, reservoir-nonlinear,
// reservoir-linear, hvac.
std::vector<std::string> domain_names();
DomainParams default_params(std::string_view name);
DomainSpec make_domain(const DomainParams& params);
std::string domain_name(const DomainParams& params);
// Prefix for dotted override keys: "nav", "reservoir" or "hvac".
std::string_view override_prefix(const DomainParams& params);

// Applies one `<prefix>.<field>=<value>` override. Vector fields accept a
// comma-separated list or a single value broadcast to every entry. Throws
// ConfigError naming the key when the key or value is invalid.
void apply_override(DomainParams& params, std::string_view key,
                    std::string_view value);

// Evaluates single steps of a domain with plain numbers, via a one-step tape
// built once from the domain's builders.
class StepSimulator {
 public:
  explicit StepSimulator(const DomainSpec& spec);

  struct Step {
    std::vector<double> next_state;
    double reward;
  };
  Step step(std::span<const double> state, std::span<const double> action);

 private:
  std::size_t state_dim_;
  std::size_t action_dim_;
  Tape tape_;
  autodiff::Workspace workspace_;
  std::vector<NodeId> next_;
  NodeId reward_;
  std::vector<double> inputs_;
};

}  // namespace gradplan::domains
