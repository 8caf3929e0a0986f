#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gradplan {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or parameters. `key()` names the offending setting
// when one is known.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string key = {})
      : Error(key.empty() ? message : key + ": " + message),
        key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Malformed tape construction (arity mismatch, dangling operand).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// Evaluation requested with missing input bindings.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Operation invoked out of order, e.g. backward before forward.
class StateError : public Error {
 public:
  using Error::Error;
};

// Any failure caused by a non-finite number during computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public NumericalError {
 public:
  NonFiniteError(std::uint32_t node, double value)
      : NumericalError("non-finite value " + std::to_string(value) +
                       " at node " + std::to_string(node)),
        node_(node) {}
  std::uint32_t node() const noexcept { return node_; }

 private:
  std::uint32_t node_;
};

class RolloutError : public NumericalError {
 public:
  RolloutError(std::size_t instance, std::size_t step)
      : NumericalError("non-finite state in instance " +
                       std::to_string(instance) + " at step " +
                       std::to_string(step)),
        instance_(instance),
        step_(step) {}
  std::size_t instance() const noexcept { return instance_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t instance_;
  std::size_t step_;
};

class StepError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gradplan
