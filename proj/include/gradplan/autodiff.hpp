#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "gradplan/errors.hpp"

// Tape-based reverse-mode automatic differentiation.
//
// A Tape records the structure of a computation once; a Workspace holds the
// forward values and adjoints for one evaluation of that structure. A Tape is
// immutable during evaluation, so several Workspaces may evaluate the same
// Tape concurrently.
namespace gradplan::autodiff {

enum class PrimitiveKind : std::uint8_t {
  kConstant,
  kInput,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kAbs,
  kSin,
  kExp,
  kSqrt,
  kSum,    // n-ary sum of operands
  kMin2,
  kMax2,
  kClamp,  // payload: lo, hi
  kSelect, // operands: condition, if_true, if_false
  kDot,    // n-ary sum of weight_k * operand_k, payload holds the weights
  kLess,   // 1.0 if a < b else 0.0, never differentiable
};

const char* to_string(PrimitiveKind kind);

struct NodeId {
  std::uint32_t index = 0;
  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

class Tape {
 public:
  // Appends a node. Operands must already be on the tape and their count must
  // match the arity of `kind`; violations throw ConstructionError.
  NodeId record(PrimitiveKind kind, std::span<const NodeId> operands,
                std::span<const double> payload = {});

  // Constants are interned: recording the same value twice yields one node.
  NodeId constant(double value);
  NodeId input();

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);
  NodeId neg(NodeId x);
  NodeId abs(NodeId x);
  NodeId sin(NodeId x);
  NodeId exp(NodeId x);
  NodeId sqrt(NodeId x);
  NodeId sum(std::span<const NodeId> xs);
  NodeId dot(std::span<const NodeId> xs, std::span<const double> weights);
  NodeId min2(NodeId a, NodeId b);
  NodeId max2(NodeId a, NodeId b);
  NodeId clamp(NodeId x, double lo, double hi);
  NodeId select(NodeId condition, NodeId if_true, NodeId if_false);
  NodeId less(NodeId a, NodeId b);

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t input_count() const noexcept { return inputs_.size(); }
  std::span<const NodeId> inputs() const noexcept { return inputs_; }

  PrimitiveKind kind(NodeId id) const { return node(id).kind; }
  std::span<const NodeId> operands(NodeId id) const;
  std::span<const double> payload(NodeId id) const;

 private:
  friend class Workspace;

  struct Node {
    PrimitiveKind kind;
    std::uint32_t first;    // offset into operands_
    std::uint32_t count;    // operand count
    std::uint32_t aux;      // payload offset, or input slot for kInput
  };

  const Node& node(NodeId id) const;

  std::vector<Node> nodes_;
  std::vector<NodeId> operands_;
  std::vector<double> payload_;
  std::vector<NodeId> inputs_;
  std::unordered_map<std::uint64_t, NodeId> constants_;
};

// Forward values and adjoints for one evaluation of a Tape.
class Workspace {
 public:
  // Binds inputs in creation order; `inputs.size()` must equal
  // `tape.input_count()`. Throws NonFiniteError on the first node whose value
  // is not finite.
  void forward(const Tape& tape, std::span<const double> inputs);
  // Binds inputs by node. Every input node must be bound.
  void forward(const Tape& tape, const std::map<NodeId, double>& bindings);

  // Reverse sweep from `output`, whose adjoint is seeded with `seed`.
  void backward(const Tape& tape, NodeId output, double seed = 1.0);

  double value(NodeId id) const { return values_.at(id.index); }
  double adjoint(NodeId id) const { return adjoints_.at(id.index); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> adjoints() const noexcept { return adjoints_; }

  // Adjoints of the tape's inputs in creation order.
  void input_adjoints(const Tape& tape, std::span<double> out) const;

  // Smallest distance, over all non-smooth nodes, between an operand and the
  // kink of that node (abs at 0, min/max ties, clamp bounds, comparison
  // thresholds, sqrt at 0). Nodes whose operands are locally constant in the
  // inputs, e.g. a saturated min or a piecewise-constant penalty, are
  // skipped. Infinity when the tape has no such node.
  double kink_margin(const Tape& tape) const;

 private:
  void evaluate(const Tape& tape);

  std::vector<double> values_;
  std::vector<double> adjoints_;
  const Tape* evaluated_ = nullptr;
  std::size_t evaluated_size_ = 0;
};

// Central-difference gradient (f(x + h e_k) - f(x - h e_k)) / 2h for every
// coordinate k. Throws NumericalError if any evaluation is not finite.
template <typename Real>
std::vector<Real> finite_difference_gradient(
    const std::function<Real(std::span<const Real>)>& f,
    std::span<const Real> point, Real h) {
  if (!(h > Real(0))) throw ConfigError("step must be positive", "h");
  std::vector<Real> x(point.begin(), point.end());
  std::vector<Real> grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Real saved = x[k];
    x[k] = saved + h;
    const Real up = f(x);
    x[k] = saved - h;
    const Real down = f(x);
    x[k] = saved;
    if (!std::isfinite(static_cast<double>(up)) ||
        !std::isfinite(static_cast<double>(down))) {
      throw NumericalError("finite-difference oracle hit a non-finite value");
    }
    grad[k] = (up - down) / (Real(2) * h);
  }
  return grad;
}

}  // namespace gradplan::autodiff
