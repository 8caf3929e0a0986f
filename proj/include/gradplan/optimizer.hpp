#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gradplan::planner {

enum class Algorithm { kSgd, kRmsProp, kAdagrad, kAdadelta, kAdam };

// Lower-case names used on the command line: sgd, rmsprop, adagrad,
// adadelta, adam.
std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

// Default epsilon for each algorithm.
double default_epsilon(Algorithm algorithm);

// Per-variable optimizer state. Update rules, with g the gradient:
//
//   sgd       a -= rate * g
//   rmsprop   G = 0.9 G + 0.1 g^2;        a -= rate * g / sqrt(G + eps)
//   adagrad   G = G + g^2;                a -= rate * g / sqrt(G + eps)
//   adadelta  Eg = rho Eg + (1-rho) g^2;  d = -sqrt(Ex + eps) / sqrt(Eg + eps) g
//             Ex = rho Ex + (1-rho) d^2;  a += rate * d        (rho = 0.9)
//   adam      m = b1 m + (1-b1) g;  v = b2 v + (1-b2) g^2;
//             a -= rate * mhat / (sqrt(vhat) + eps)       (b1 = 0.9, b2 = 0.999)
class OptimizerState {
 public:
  OptimizerState(Algorithm algorithm, double rate, std::size_t size,
                 std::optional<double> epsilon = std::nullopt);

  // Applies one update in place. Throws StepError on a non-finite gradient
  // or a shape mismatch; in that case neither actions nor state change.
  void step(std::span<double> actions, std::span<const double> grads);

  Algorithm algorithm() const noexcept { return algorithm_; }
  double rate() const noexcept { return rate_; }
  double epsilon() const noexcept { return epsilon_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t step_count() const noexcept { return steps_; }

  // Squared-gradient accumulator (G for rmsprop/adagrad, E[g^2] for
  // adadelta, v for adam). Empty for sgd.
  std::span<const double> second_moment() const noexcept { return second_; }
  // E[dx^2] for adadelta, first moment m for adam. Empty otherwise.
  std::span<const double> auxiliary() const noexcept { return aux_; }

 private:
  Algorithm algorithm_;
  double rate_;
  double epsilon_;
  std::size_t size_;
  std::size_t steps_ = 0;
  std::vector<double> second_;
  std::vector<double> aux_;
};

}  // namespace gradplan::planner
