#pragma once

#include <stdexcept>
#include <string>

namespace wavelab {

/// Two objects that must share a grid (or a length) do not.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// An argument is outside the documented domain of an operation.
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation produced NaN or otherwise lost meaning.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// A regression (Meshkov tail fit, growth fit) could not be carried out.
class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

/// The bisection oracle could not bracket the manifold velocity.
class BracketError : public std::runtime_error {
 public:
  explicit BracketError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wavelab
