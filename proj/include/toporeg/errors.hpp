#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace toporeg {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input sizes or indices disagree with each other.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A requested discretization would not fit in memory or in size_t.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A predictor returned a non-finite value.
class EvaluationError : public Error {
 public:
  EvaluationError(std::size_t vertex, double value)
      : Error("non-finite value " + std::to_string(value) + " at vertex " +
              std::to_string(vertex)),
        vertex_(vertex) {}

  std::size_t vertex() const noexcept { return vertex_; }

 private:
  std::size_t vertex_;
};

/// Malformed dataset or config file. Line numbers are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Bad command-line or config usage.
class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite objective.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t iteration, double learning_rate)
      : Error("objective became non-finite at iteration " + std::to_string(iteration) +
              " (learning rate " + std::to_string(learning_rate) + ")"),
        iteration_(iteration),
        learning_rate_(learning_rate) {}

  std::size_t iteration() const noexcept { return iteration_; }
  double learning_rate() const noexcept { return learning_rate_; }

 private:
  std::size_t iteration_;
  double learning_rate_;
};

}  // namespace toporeg
