#include "gradplan/optimizer.hpp"

#include <cmath>

#include "gradplan/errors.hpp"

namespace gradplan::planner {

namespace {
constexpr double kRmsDecay = 0.9;
constexpr double kAdadeltaRho = 0.9;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
}  // namespace

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kSgd: return "sgd";
    case Algorithm::kRmsProp: return "rmsprop";
    case Algorithm::kAdagrad: return "adagrad";
    case Algorithm::kAdadelta: return "adadelta";
    case Algorithm::kAdam: return "adam";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kSgd, Algorithm::kRmsProp, Algorithm::kAdagrad,
                      Algorithm::kAdadelta, Algorithm::kAdam}) {
    if (name == to_string(a)) return a;
  }
  throw ConfigError("unsupported optimizer '" + std::string(name) + "'",
                    "optimizer");
}

double default_epsilon(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kSgd: return 0.0;
    case Algorithm::kRmsProp: return 1e-10;
    case Algorithm::kAdagrad: return 1e-10;
    case Algorithm::kAdadelta: return 1e-6;
    case Algorithm::kAdam: return 1e-8;
  }
  return 0.0;
}

OptimizerState::OptimizerState(Algorithm algorithm, double rate,
                               std::size_t size, std::optional<double> epsilon)
    : algorithm_(algorithm),
      rate_(rate),
      epsilon_(epsilon.value_or(default_epsilon(algorithm))),
      size_(size) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw ConfigError("must be positive and finite", "rate");
  }
  if (!(epsilon_ >= 0.0) || !std::isfinite(epsilon_)) {
    throw ConfigError("must be non-negative and finite", "epsilon");
  }
  if (algorithm_ != Algorithm::kSgd) second_.assign(size, 0.0);
  if (algorithm_ == Algorithm::kAdadelta || algorithm_ == Algorithm::kAdam) {
    aux_.assign(size, 0.0);
  }
}

void OptimizerState::step(std::span<double> actions,
                          std::span<const double> grads) {
  if (actions.size() != size_ || grads.size() != size_) {
    throw StepError("optimizer step shape mismatch");
  }
  for (std::size_t k = 0; k < size_; ++k) {
    if (!std::isfinite(grads[k])) {
      throw StepError("non-finite gradient at variable " + std::to_string(k));
    }
  }
  ++steps_;
  switch (algorithm_) {
    case Algorithm::kSgd:
      for (std::size_t k = 0; k < size_; ++k) actions[k] -= rate_ * grads[k];
      break;
    case Algorithm::kRmsProp:
      for (std::size_t k = 0; k < size_; ++k) {
        const double g = grads[k];
        second_[k] = kRmsDecay * second_[k] + (1.0 - kRmsDecay) * g * g;
        actions[k] -= rate_ * g / std::sqrt(second_[k] + epsilon_);
      }
      break;
    case Algorithm::kAdagrad:
      for (std::size_t k = 0; k < size_; ++k) {
        const double g = grads[k];
        second_[k] += g * g;
        actions[k] -= rate_ * g / std::sqrt(second_[k] + epsilon_);
      }
      break;
    case Algorithm::kAdadelta:
      for (std::size_t k = 0; k < size_; ++k) {
        const double g = grads[k];
        second_[k] = kAdadeltaRho * second_[k] + (1.0 - kAdadeltaRho) * g * g;
        const double delta =
            -std::sqrt(aux_[k] + epsilon_) / std::sqrt(second_[k] + epsilon_) * g;
        aux_[k] = kAdadeltaRho * aux_[k] + (1.0 - kAdadeltaRho) * delta * delta;
        actions[k] += rate_ * delta;
      }
      break;
    case Algorithm::kAdam: {
      const double t = static_cast<double>(steps_);
      const double c1 = 1.0 - std::pow(kAdamBeta1, t);
      const double c2 = 1.0 - std::pow(kAdamBeta2, t);
      for (std::size_t k = 0; k < size_; ++k) {
        const double g = grads[k];
        aux_[k] = kAdamBeta1 * aux_[k] + (1.0 - kAdamBeta1) * g;
        second_[k] = kAdamBeta2 * second_[k] + (1.0 - kAdamBeta2) * g * g;
        const double mhat = aux_[k] / c1;
        const double vhat = second_[k] / c2;
        actions[k] -= rate_ * mhat / (std::sqrt(vhat) + epsilon_);
      }
      break;
    }
  }
}

}  // namespace gradplan::planner
