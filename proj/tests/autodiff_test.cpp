#include "gradplan/autodiff.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace gradplan::autodiff {
namespace {

using Kind = PrimitiveKind;

TEST(TapeTest, RecordsConstantAndAdd) {
  Tape t;
  const double three = 3.0;
  const NodeId c = t.record(Kind::kConstant, {}, std::span(&three, 1));
  const NodeId x = t.input();
  const NodeId y = t.input();
  const NodeId sum = t.add(x, y);
  Workspace ws;
  const std::vector<double> in{2.0, 5.0};
  ws.forward(t, in);
  EXPECT_EQ(ws.value(c), 3.0);
  EXPECT_EQ(ws.value(sum), 7.0);
}

TEST(TapeTest, NodeIdsIncreaseAndOperandsPrecede) {
  Tape t;
  const NodeId x = t.input();
  const NodeId y = t.sin(x);
  const NodeId z = t.mul(x, y);
  EXPECT_LT(x, y);
  EXPECT_LT(y, z);
  for (NodeId op : t.operands(z)) EXPECT_LT(op, z);
  EXPECT_EQ(t.size(), 3u);
}

TEST(TapeTest, ConstantsAreInterned) {
  Tape t;
  const NodeId a = t.constant(1.5);
  const NodeId b = t.constant(1.5);
  const NodeId c = t.constant(-1.5);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(TapeTest, RejectsArityMismatch) {
  Tape t;
  const NodeId x = t.input();
  const NodeId ops[] = {x};
  EXPECT_THROW(t.record(Kind::kAdd, ops), ConstructionError);
  EXPECT_THROW(t.record(Kind::kSum, {}), ConstructionError);
  EXPECT_THROW(t.record(Kind::kSelect, ops), ConstructionError);
}

TEST(TapeTest, RejectsDanglingOperand) {
  Tape t;
  const NodeId x = t.input();
  const NodeId ops[] = {x, NodeId{7}};
  EXPECT_THROW(t.record(Kind::kMul, ops), ConstructionError);
  EXPECT_EQ(t.size(), 1u);
}

TEST(TapeTest, RejectsBadPayload) {
  Tape t;
  const NodeId x = t.input();
  const NodeId ops[] = {x, x};
  const double one[] = {1.0};
  EXPECT_THROW(t.record(Kind::kDot, ops, one), ConstructionError);
  EXPECT_THROW(t.clamp(x, 2.0, 1.0), ConstructionError);
}

TEST(ForwardTest, ClampSaturatesAtUpperBound) {
  Tape t;
  const NodeId x = t.input();
  const NodeId f = t.clamp(x, 0.0, 10.0);
  Workspace ws;
  ws.forward(t, std::vector<double>{12.0});
  EXPECT_EQ(ws.value(f), 10.0);
  ws.backward(t, f);
  EXPECT_EQ(ws.adjoint(x), 0.0);
}

TEST(ForwardTest, NavigationFactorAtZeroAndFar) {
  Tape t;
  const NodeId d = t.input();
  const NodeId e = t.exp(t.mul(t.constant(-2.0), d));
  const NodeId f =
      t.sub(t.div(t.constant(2.0), t.add(t.constant(1.0), e)), t.constant(0.99));
  Workspace ws;
  ws.forward(t, std::vector<double>{0.0});
  EXPECT_NEAR(ws.value(f), 0.01, 1e-15);
  ws.forward(t, std::vector<double>{10.0});
  EXPECT_NEAR(ws.value(f), 2.0 / (1.0 + std::exp(-20.0)) - 0.99, 1e-15);
  EXPECT_GT(ws.value(f), 1.0);
}

TEST(ForwardTest, BindsInputsByNode) {
  Tape t;
  const NodeId x = t.input();
  const NodeId y = t.input();
  const NodeId f = t.sub(x, y);
  Workspace ws;
  ws.forward(t, {{y, 1.0}, {x, 4.0}});
  EXPECT_EQ(ws.value(f), 3.0);
  EXPECT_THROW(ws.forward(t, {{x, 4.0}}), EvaluationError);
}

TEST(ForwardTest, WrongInputCountThrows) {
  Tape t;
  t.input();
  Workspace ws;
  EXPECT_THROW(ws.forward(t, std::vector<double>{1.0, 2.0}), EvaluationError);
}

TEST(ForwardTest, DivisionByZeroReportsNode) {
  Tape t;
  const NodeId x = t.input();
  const NodeId f = t.div(t.constant(1.0), x);
  Workspace ws;
  try {
    ws.forward(t, std::vector<double>{0.0});
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.node(), f.index);
  }
}

TEST(ForwardTest, SelectUsesTakenBranch) {
  Tape t;
  const NodeId x = t.input();
  const NodeId c = t.less(x, t.constant(0.0));
  const NodeId f = t.select(c, t.neg(x), t.mul(x, x));
  Workspace ws;
  ws.forward(t, std::vector<double>{-2.0});
  EXPECT_EQ(ws.value(c), 1.0);
  EXPECT_EQ(ws.value(f), 2.0);
  ws.backward(t, f);
  EXPECT_EQ(ws.adjoint(x), -1.0);
  ws.forward(t, std::vector<double>{3.0});
  EXPECT_EQ(ws.value(f), 9.0);
  ws.backward(t, f);
  EXPECT_EQ(ws.adjoint(x), 6.0);
}

TEST(ForwardTest, RepeatedForwardIsBitIdentical) {
  Tape t;
  const NodeId x = t.input();
  const NodeId y = t.input();
  t.sin(t.div(t.exp(x), t.add(t.abs(y), t.constant(0.3))));
  Workspace a, b;
  const std::vector<double> in{0.7, -1.9};
  a.forward(t, in);
  b.forward(t, in);
  a.forward(t, in);
  ASSERT_EQ(a.values().size(), b.values().size());
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(a.values()[i]),
              std::bit_cast<std::uint64_t>(b.values()[i]));
  }
}

TEST(BackwardTest, SquareAndSine) {
  Tape t;
  const NodeId x = t.input();
  const NodeId sq = t.mul(x, x);
  const NodeId s = t.sin(x);
  Workspace ws;
  ws.forward(t, std::vector<double>{3.0});
  EXPECT_EQ(ws.value(sq), 9.0);
  ws.backward(t, sq);
  EXPECT_EQ(ws.adjoint(x), 6.0);
  ws.forward(t, std::vector<double>{0.0});
  ws.backward(t, s);
  EXPECT_EQ(ws.adjoint(x), 1.0);
}

TEST(BackwardTest, BeforeForwardIsStateError) {
  Tape t;
  const NodeId x = t.input();
  Workspace ws;
  EXPECT_THROW(ws.backward(t, x), StateError);
  std::vector<double> out(1);
  EXPECT_THROW(ws.input_adjoints(t, out), StateError);
}

TEST(BackwardTest, SharedInputAccumulatesPaths) {
  Tape t;
  const NodeId x = t.input();
  const NodeId g = t.mul(x, t.constant(3.0));
  const NodeId k = t.exp(x);
  const NodeId f = t.add(g, k);
  Workspace ws;
  ws.forward(t, std::vector<double>{0.5});
  ws.backward(t, g);
  const double dg = ws.adjoint(x);
  ws.backward(t, k);
  const double dk = ws.adjoint(x);
  ws.backward(t, f);
  EXPECT_EQ(ws.adjoint(x), dg + dk);
}

TEST(BackwardTest, SubgradientConventions) {
  Tape t;
  const NodeId x = t.input();
  const NodeId y = t.input();
  const NodeId ab = t.abs(x);
  const NodeId mn = t.min2(x, y);
  const NodeId mx = t.max2(x, y);
  const NodeId cl = t.clamp(x, 0.0, 1.0);
  const NodeId lt = t.less(x, y);
  Workspace ws;
  ws.forward(t, std::vector<double>{0.0, 0.0});
  std::vector<double> g(2);

  ws.backward(t, ab);
  EXPECT_EQ(ws.adjoint(x), 0.0);
  ws.backward(t, mn);
  ws.input_adjoints(t, g);
  EXPECT_EQ(g[0], 1.0);
  EXPECT_EQ(g[1], 0.0);
  ws.backward(t, mx);
  ws.input_adjoints(t, g);
  EXPECT_EQ(g[0], 1.0);
  EXPECT_EQ(g[1], 0.0);
  ws.backward(t, cl);
  EXPECT_EQ(ws.adjoint(x), 1.0);
  ws.backward(t, lt);
  ws.input_adjoints(t, g);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);

  ws.forward(t, std::vector<double>{1.0, 0.0});
  ws.backward(t, cl);
  EXPECT_EQ(ws.adjoint(x), 1.0);
  ws.forward(t, std::vector<double>{-0.5, 0.0});
  ws.backward(t, cl);
  EXPECT_EQ(ws.adjoint(x), 0.0);
}

TEST(BackwardTest, DotAndSumWeights) {
  Tape t;
  const NodeId x = t.input();
  const NodeId y = t.input();
  const NodeId xs[] = {x, y, x};
  const double w[] = {2.0, -3.0, 0.5};
  const NodeId d = t.dot(xs, w);
  const NodeId s = t.sum(xs);
  Workspace ws;
  ws.forward(t, std::vector<double>{1.0, 4.0});
  EXPECT_EQ(ws.value(d), 2.0 - 12.0 + 0.5);
  EXPECT_EQ(ws.value(s), 6.0);
  std::vector<double> g(2);
  ws.backward(t, d);
  ws.input_adjoints(t, g);
  EXPECT_EQ(g[0], 2.5);
  EXPECT_EQ(g[1], -3.0);
  ws.backward(t, s, 2.0);
  ws.input_adjoints(t, g);
  EXPECT_EQ(g[0], 4.0);
  EXPECT_EQ(g[1], 2.0);
}

TEST(BackwardTest, SqrtIsZeroSlopeAtZero) {
  Tape t;
  const NodeId x = t.input();
  const NodeId f = t.sqrt(x);
  Workspace ws;
  ws.forward(t, std::vector<double>{0.0});
  ws.backward(t, f);
  EXPECT_EQ(ws.adjoint(x), 0.0);
  ws.forward(t, std::vector<double>{4.0});
  ws.backward(t, f);
  EXPECT_EQ(ws.adjoint(x), 0.25);
}

TEST(BackwardTest, MatchesFiniteDifferencesOnSmoothExpression) {
  Tape t;
  std::vector<NodeId> x;
  for (int i = 0; i < 4; ++i) x.push_back(t.input());
  const NodeId a = t.mul(t.sin(x[0]), t.exp(t.neg(x[1])));
  const NodeId b = t.div(t.sub(x[2], x[3]), t.add(t.mul(x[3], x[3]), t.constant(1.0)));
  const NodeId f = t.add(t.sqrt(t.add(t.mul(a, a), t.constant(2.0))), b);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  Workspace ws;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> point(4);
    for (double& p : point) p = dist(rng);
    ws.forward(t, point);
    ws.backward(t, f);
    std::vector<double> grad(4);
    ws.input_adjoints(t, grad);
    auto eval = [&](std::span<const double> in) {
      Workspace w;
      w.forward(t, in);
      return w.value(f);
    };
    const auto fd = finite_difference_gradient<double>(eval, point, 1e-5);
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(grad[i], fd[i], 1e-5 * std::max(1.0, std::fabs(fd[i])));
    }
  }
}

TEST(KinkMarginTest, MeasuresDistanceToNearestKink) {
  Tape t;
  const NodeId x = t.input();
  t.abs(t.sub(x, t.constant(1.0)));
  t.clamp(x, 0.0, 10.0);
  Workspace ws;
  ws.forward(t, std::vector<double>{1.25});
  EXPECT_DOUBLE_EQ(ws.kink_margin(t), 0.25);
  ws.forward(t, std::vector<double>{9.9});
  EXPECT_NEAR(ws.kink_margin(t), 0.1, 1e-12);
}

TEST(KinkMarginTest, IgnoresLocallyConstantOperands) {
  Tape t;
  const NodeId x = t.input();
  // Penalty of -5 below 2, else 0: abs sits at its kink whenever x >= 2.
  const NodeId penalty = t.select(t.less(x, t.constant(2.0)), t.constant(-5.0),
                                  t.constant(0.0));
  t.abs(penalty);
  t.max2(t.constant(0.0), t.constant(0.0));
  Workspace ws;
  ws.forward(t, std::vector<double>{3.5});
  EXPECT_DOUBLE_EQ(ws.kink_margin(t), 1.5);
  // A branch that does vary still counts.
  t.abs(t.select(t.less(x, t.constant(2.0)), t.constant(1.0), t.sub(x, t.constant(3.0))));
  ws.forward(t, std::vector<double>{3.5});
  EXPECT_DOUBLE_EQ(ws.kink_margin(t), 0.5);
}

TEST(KinkMarginTest, SaturatedMinIsConstant) {
  Tape t;
  const NodeId x = t.input();
  const NodeId cap = t.constant(2.0);
  t.abs(t.sub(t.min2(x, cap), cap));
  Workspace ws;
  ws.forward(t, std::vector<double>{2.75});
  EXPECT_DOUBLE_EQ(ws.kink_margin(t), 0.75);
  ws.forward(t, std::vector<double>{1.5});
  EXPECT_DOUBLE_EQ(ws.kink_margin(t), 0.5);
}

TEST(FiniteDifferenceTest, Examples) {
  const std::vector<double> three{3.0};
  const auto sq = finite_difference_gradient<double>(
      [](std::span<const double> x) { return x[0] * x[0]; }, three, 1e-5);
  EXPECT_NEAR(sq[0], 6.0, 1e-9);

  const std::vector<double> one{1.0};
  const auto ab = finite_difference_gradient<double>(
      [](std::span<const double> x) { return std::fabs(x[0]); }, one, 1e-6);
  EXPECT_NEAR(ab[0], 1.0, 1e-9);

  const std::vector<double> any{0.3, -8.0};
  const auto c = finite_difference_gradient<double>(
      [](std::span<const double>) { return 4.0; }, any, 1e-5);
  EXPECT_EQ(c[0], 0.0);
  EXPECT_EQ(c[1], 0.0);
}

TEST(FiniteDifferenceTest, RejectsBadStepAndNonFinite) {
  const std::vector<double> x{0.0};
  auto f = [](std::span<const double> v) { return v[0]; };
  EXPECT_THROW(finite_difference_gradient<double>(f, x, 0.0), ConfigError);
  auto g = [](std::span<const double> v) {
    return v[0] < 0.0 ? std::numeric_limits<double>::infinity() : v[0];
  };
  EXPECT_THROW(finite_difference_gradient<double>(g, x, 1e-5), NumericalError);
}

}  // namespace
}  // namespace gradplan::autodiff
