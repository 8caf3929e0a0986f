#include "gradplan/autodiff.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace gradplan::autodiff {

namespace {

// Required operand count, or -1 for n-ary (at least one operand).
int arity(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::kConstant:
    case PrimitiveKind::kInput:
      return 0;
    case PrimitiveKind::kNeg:
    case PrimitiveKind::kAbs:
    case PrimitiveKind::kSin:
    case PrimitiveKind::kExp:
    case PrimitiveKind::kSqrt:
    case PrimitiveKind::kClamp:
      return 1;
    case PrimitiveKind::kAdd:
    case PrimitiveKind::kSub:
    case PrimitiveKind::kMul:
    case PrimitiveKind::kDiv:
    case PrimitiveKind::kMin2:
    case PrimitiveKind::kMax2:
    case PrimitiveKind::kLess:
      return 2;
    case PrimitiveKind::kSelect:
      return 3;
    case PrimitiveKind::kSum:
    case PrimitiveKind::kDot:
      return -1;
  }
  return -2;
}

std::size_t payload_size(PrimitiveKind kind, std::size_t operand_count) {
  switch (kind) {
    case PrimitiveKind::kConstant:
      return 1;
    case PrimitiveKind::kClamp:
      return 2;
    case PrimitiveKind::kDot:
      return operand_count;
    default:
      return 0;
  }
}

}  // namespace

const char* to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::kConstant: return "constant";
    case PrimitiveKind::kInput: return "input";
    case PrimitiveKind::kAdd: return "add";
    case PrimitiveKind::kSub: return "sub";
    case PrimitiveKind::kMul: return "mul";
    case PrimitiveKind::kDiv: return "div";
    case PrimitiveKind::kNeg: return "neg";
    case PrimitiveKind::kAbs: return "abs";
    case PrimitiveKind::kSin: return "sin";
    case PrimitiveKind::kExp: return "exp";
    case PrimitiveKind::kSqrt: return "sqrt";
    case PrimitiveKind::kSum: return "sum";
    case PrimitiveKind::kMin2: return "min2";
    case PrimitiveKind::kMax2: return "max2";
    case PrimitiveKind::kClamp: return "clamp";
    case PrimitiveKind::kSelect: return "select";
    case PrimitiveKind::kDot: return "dot";
    case PrimitiveKind::kLess: return "lt-indicator";
  }
  return "unknown";
}

NodeId Tape::record(PrimitiveKind kind, std::span<const NodeId> operands,
                    std::span<const double> payload) {
  const int expected = arity(kind);
  if (expected == -2) throw ConstructionError("unknown primitive kind");
  if (expected >= 0 && operands.size() != static_cast<std::size_t>(expected)) {
    throw ConstructionError(std::string(to_string(kind)) + " expects " +
                            std::to_string(expected) + " operands, got " +
                            std::to_string(operands.size()));
  }
  if (expected < 0 && operands.empty()) {
    throw ConstructionError(std::string(to_string(kind)) +
                            " needs at least one operand");
  }
  if (payload.size() != payload_size(kind, operands.size())) {
    throw ConstructionError(std::string(to_string(kind)) +
                            " payload size mismatch");
  }
  for (const NodeId op : operands) {
    if (op.index >= nodes_.size()) {
      throw ConstructionError("operand " + std::to_string(op.index) +
                              " is not on the tape (size " +
                              std::to_string(nodes_.size()) + ")");
    }
  }
  if (kind == PrimitiveKind::kClamp && !(payload[0] <= payload[1])) {
    throw ConstructionError("clamp requires lo <= hi");
  }

  Node n{kind, static_cast<std::uint32_t>(operands_.size()),
         static_cast<std::uint32_t>(operands.size()),
         static_cast<std::uint32_t>(payload_.size())};
  if (kind == PrimitiveKind::kInput) {
    n.aux = static_cast<std::uint32_t>(inputs_.size());
  }
  operands_.insert(operands_.end(), operands.begin(), operands.end());
  payload_.insert(payload_.end(), payload.begin(), payload.end());
  const NodeId id{static_cast<std::uint32_t>(nodes_.size())};
  nodes_.push_back(n);
  if (kind == PrimitiveKind::kInput) inputs_.push_back(id);
  return id;
}

NodeId Tape::constant(double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  if (auto it = constants_.find(bits); it != constants_.end()) return it->second;
  const NodeId id = record(PrimitiveKind::kConstant, {}, std::span(&value, 1));
  constants_.emplace(bits, id);
  return id;
}

NodeId Tape::input() { return record(PrimitiveKind::kInput, {}); }

NodeId Tape::add(NodeId a, NodeId b) {
  const NodeId ops[] = {a, b};
  return record(PrimitiveKind::kAdd, ops);
}
NodeId Tape::sub(NodeId a, NodeId b) {
  const NodeId ops[] = {a, b};
  return record(PrimitiveKind::kSub, ops);
}
NodeId Tape::mul(NodeId a, NodeId b) {
  const NodeId ops[] = {a, b};
  return record(PrimitiveKind::kMul, ops);
}
NodeId Tape::div(NodeId a, NodeId b) {
  const NodeId ops[] = {a, b};
  return record(PrimitiveKind::kDiv, ops);
}
NodeId Tape::neg(NodeId x) { return record(PrimitiveKind::kNeg, std::span(&x, 1)); }
NodeId Tape::abs(NodeId x) { return record(PrimitiveKind::kAbs, std::span(&x, 1)); }
NodeId Tape::sin(NodeId x) { return record(PrimitiveKind::kSin, std::span(&x, 1)); }
NodeId Tape::exp(NodeId x) { return record(PrimitiveKind::kExp, std::span(&x, 1)); }
NodeId Tape::sqrt(NodeId x) { return record(PrimitiveKind::kSqrt, std::span(&x, 1)); }
NodeId Tape::sum(std::span<const NodeId> xs) { return record(PrimitiveKind::kSum, xs); }
NodeId Tape::dot(std::span<const NodeId> xs, std::span<const double> weights) {
  return record(PrimitiveKind::kDot, xs, weights);
}
NodeId Tape::min2(NodeId a, NodeId b) {
  const NodeId ops[] = {a, b};
  return record(PrimitiveKind::kMin2, ops);
}
NodeId Tape::max2(NodeId a, NodeId b) {
  const NodeId ops[] = {a, b};
  return record(PrimitiveKind::kMax2, ops);
}
NodeId Tape::clamp(NodeId x, double lo, double hi) {
  const double bounds[] = {lo, hi};
  return record(PrimitiveKind::kClamp, std::span(&x, 1), bounds);
}
NodeId Tape::select(NodeId condition, NodeId if_true, NodeId if_false) {
  const NodeId ops[] = {condition, if_true, if_false};
  return record(PrimitiveKind::kSelect, ops);
}
NodeId Tape::less(NodeId a, NodeId b) {
  const NodeId ops[] = {a, b};
  return record(PrimitiveKind::kLess, ops);
}

const Tape::Node& Tape::node(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw ConstructionError("node " + std::to_string(id.index) +
                            " is not on the tape");
  }
  return nodes_[id.index];
}

std::span<const NodeId> Tape::operands(NodeId id) const {
  const Node& n = node(id);
  return std::span(operands_).subspan(n.first, n.count);
}

std::span<const double> Tape::payload(NodeId id) const {
  const Node& n = node(id);
  return std::span(payload_).subspan(n.aux, payload_size(n.kind, n.count));
}

void Workspace::forward(const Tape& tape, std::span<const double> inputs) {
  if (inputs.size() != tape.input_count()) {
    throw EvaluationError("expected " + std::to_string(tape.input_count()) +
                          " input bindings, got " +
                          std::to_string(inputs.size()));
  }
  values_.resize(tape.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    values_[tape.inputs_[k].index] = inputs[k];
  }
  evaluate(tape);
}

void Workspace::forward(const Tape& tape,
                        const std::map<NodeId, double>& bindings) {
  std::vector<double> inputs(tape.input_count());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto it = bindings.find(tape.inputs_[k]);
    if (it == bindings.end()) {
      throw EvaluationError("input node " +
                            std::to_string(tape.inputs_[k].index) +
                            " is unbound");
    }
    inputs[k] = it->second;
  }
  for (const auto& [id, v] : bindings) {
    if (id.index >= tape.size() || tape.kind(id) != PrimitiveKind::kInput) {
      throw EvaluationError("node " + std::to_string(id.index) +
                            " is not an input");
    }
  }
  forward(tape, inputs);
}

void Workspace::evaluate(const Tape& tape) {
  evaluated_ = nullptr;
  const auto* ops = tape.operands_.data();
  const auto* pay = tape.payload_.data();
  double* v = values_.data();
  const std::size_t n = tape.nodes_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Tape::Node& node = tape.nodes_[i];
    const NodeId* o = ops + node.first;
    double out;
    switch (node.kind) {
      case PrimitiveKind::kConstant: out = pay[node.aux]; break;
      case PrimitiveKind::kInput: out = v[i]; break;
      case PrimitiveKind::kAdd: out = v[o[0].index] + v[o[1].index]; break;
      case PrimitiveKind::kSub: out = v[o[0].index] - v[o[1].index]; break;
      case PrimitiveKind::kMul: out = v[o[0].index] * v[o[1].index]; break;
      case PrimitiveKind::kDiv: out = v[o[0].index] / v[o[1].index]; break;
      case PrimitiveKind::kNeg: out = -v[o[0].index]; break;
      case PrimitiveKind::kAbs: out = std::fabs(v[o[0].index]); break;
      case PrimitiveKind::kSin: out = std::sin(v[o[0].index]); break;
      case PrimitiveKind::kExp: out = std::exp(v[o[0].index]); break;
      case PrimitiveKind::kSqrt: out = std::sqrt(v[o[0].index]); break;
      case PrimitiveKind::kSum: {
        out = 0.0;
        for (std::uint32_t k = 0; k < node.count; ++k) out += v[o[k].index];
        break;
      }
      case PrimitiveKind::kDot: {
        out = 0.0;
        const double* w = pay + node.aux;
        for (std::uint32_t k = 0; k < node.count; ++k) out += w[k] * v[o[k].index];
        break;
      }
      case PrimitiveKind::kMin2: {
        const double a = v[o[0].index], b = v[o[1].index];
        out = a <= b ? a : b;
        break;
      }
      case PrimitiveKind::kMax2: {
        const double a = v[o[0].index], b = v[o[1].index];
        out = a >= b ? a : b;
        break;
      }
      case PrimitiveKind::kClamp: {
        const double x = v[o[0].index];
        out = std::clamp(x, pay[node.aux], pay[node.aux + 1]);
        break;
      }
      case PrimitiveKind::kSelect:
        out = v[o[0].index] != 0.0 ? v[o[1].index] : v[o[2].index];
        break;
      case PrimitiveKind::kLess:
        out = v[o[0].index] < v[o[1].index] ? 1.0 : 0.0;
        break;
      default:
        out = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(out)) throw NonFiniteError(static_cast<std::uint32_t>(i), out);
    v[i] = out;
  }
  evaluated_ = &tape;
  evaluated_size_ = n;
}

void Workspace::backward(const Tape& tape, NodeId output, double seed) {
  if (evaluated_ != &tape || evaluated_size_ != tape.size()) {
    throw StateError("backward called before forward on this tape");
  }
  if (output.index >= tape.size()) {
    throw StateError("output node is not on the tape");
  }
  adjoints_.assign(tape.size(), 0.0);
  const auto* ops = tape.operands_.data();
  const auto* pay = tape.payload_.data();
  const double* v = values_.data();
  double* g = adjoints_.data();
  g[output.index] = seed;
  for (std::size_t i = output.index + 1; i-- > 0;) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    const Tape::Node& node = tape.nodes_[i];
    const NodeId* o = ops + node.first;
    switch (node.kind) {
      case PrimitiveKind::kConstant:
      case PrimitiveKind::kInput:
      case PrimitiveKind::kLess:
        break;
      case PrimitiveKind::kAdd:
        g[o[0].index] += gi;
        g[o[1].index] += gi;
        break;
      case PrimitiveKind::kSub:
        g[o[0].index] += gi;
        g[o[1].index] -= gi;
        break;
      case PrimitiveKind::kMul:
        g[o[0].index] += gi * v[o[1].index];
        g[o[1].index] += gi * v[o[0].index];
        break;
      case PrimitiveKind::kDiv: {
        const double b = v[o[1].index];
        g[o[0].index] += gi / b;
        g[o[1].index] -= gi * v[i] / b;
        break;
      }
      case PrimitiveKind::kNeg:
        g[o[0].index] -= gi;
        break;
      case PrimitiveKind::kAbs: {
        const double x = v[o[0].index];
        if (x > 0.0) g[o[0].index] += gi;
        else if (x < 0.0) g[o[0].index] -= gi;
        break;
      }
      case PrimitiveKind::kSin:
        g[o[0].index] += gi * std::cos(v[o[0].index]);
        break;
      case PrimitiveKind::kExp:
        g[o[0].index] += gi * v[i];
        break;
      case PrimitiveKind::kSqrt:
        if (v[i] > 0.0) g[o[0].index] += gi / (2.0 * v[i]);
        break;
      case PrimitiveKind::kSum:
        for (std::uint32_t k = 0; k < node.count; ++k) g[o[k].index] += gi;
        break;
      case PrimitiveKind::kDot: {
        const double* w = pay + node.aux;
        for (std::uint32_t k = 0; k < node.count; ++k) g[o[k].index] += gi * w[k];
        break;
      }
      case PrimitiveKind::kMin2:
        g[o[v[o[0].index] <= v[o[1].index] ? 0 : 1].index] += gi;
        break;
      case PrimitiveKind::kMax2:
        g[o[v[o[0].index] >= v[o[1].index] ? 0 : 1].index] += gi;
        break;
      case PrimitiveKind::kClamp: {
        const double x = v[o[0].index];
        if (x >= pay[node.aux] && x <= pay[node.aux + 1]) g[o[0].index] += gi;
        break;
      }
      case PrimitiveKind::kSelect:
        g[o[v[o[0].index] != 0.0 ? 1 : 2].index] += gi;
        break;
    }
  }
}

void Workspace::input_adjoints(const Tape& tape, std::span<double> out) const {
  if (out.size() != tape.input_count()) {
    throw StateError("input adjoint buffer has the wrong size");
  }
  if (adjoints_.size() != tape.size()) {
    throw StateError("input adjoints requested before backward");
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = adjoints_[tape.inputs_[k].index];
  }
}

double Workspace::kink_margin(const Tape& tape) const {
  if (evaluated_ != &tape) throw StateError("kink margin requires a forward pass");
  double margin = std::numeric_limits<double>::infinity();
  const auto* ops = tape.operands_.data();
  const auto* pay = tape.payload_.data();
  // live[i]: node i moves with the inputs near the current point, following
  // only the branches the forward pass took. Kinks on dead operands cannot be
  // crossed by a small perturbation unless a live kink is crossed first.
  std::vector<std::uint8_t> live(tape.nodes_.size(), 0);
  for (std::size_t i = 0; i < tape.nodes_.size(); ++i) {
    const Tape::Node& node = tape.nodes_[i];
    const NodeId* o = ops + node.first;
    const auto alive = [&](std::size_t k) { return live[o[k].index] != 0; };
    const auto value = [&](std::size_t k) { return values_[o[k].index]; };
    switch (node.kind) {
      case PrimitiveKind::kConstant:
        break;
      case PrimitiveKind::kInput:
        live[i] = 1;
        break;
      case PrimitiveKind::kAbs:
      case PrimitiveKind::kSqrt:
        live[i] = alive(0);
        if (alive(0)) margin = std::min(margin, std::fabs(value(0)));
        break;
      case PrimitiveKind::kMin2:
      case PrimitiveKind::kMax2: {
        const bool first = node.kind == PrimitiveKind::kMin2 ? value(0) <= value(1)
                                                             : value(0) >= value(1);
        live[i] = alive(first ? 0 : 1);
        if (alive(0) || alive(1)) margin = std::min(margin, std::fabs(value(0) - value(1)));
        break;
      }
      case PrimitiveKind::kLess:
        if (alive(0) || alive(1)) margin = std::min(margin, std::fabs(value(0) - value(1)));
        break;
      case PrimitiveKind::kClamp: {
        const double x = value(0);
        const double lo = pay[node.aux], hi = pay[node.aux + 1];
        live[i] = alive(0) && x >= lo && x <= hi;
        if (alive(0)) margin = std::min({margin, std::fabs(x - lo), std::fabs(x - hi)});
        break;
      }
      case PrimitiveKind::kSelect:
        live[i] = alive(value(0) != 0.0 ? 1 : 2);
        break;
      default:
        for (std::uint32_t k = 0; k < node.count; ++k) live[i] = live[i] || alive(k);
        break;
    }
  }
  return margin;
}

}  // namespace gradplan::autodiff
