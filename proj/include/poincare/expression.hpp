#pragma once

#include "poincare/common.hpp"
#include "poincare/dynamics.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace poincare {

class ExpressionError : public Error {
 public:
  using Error::Error;
};

/// Arithmetic over named variables.
///
/// Grammar: + - * / ^ (right associative), unary minus, parentheses,
/// numbers, identifiers, s[i] for raw state components, and the functions
/// sin cos tan exp log sqrt abs atan2(y, x) arg(x, y). `pi` is predefined.
class Expression {
 public:
  Expression() = default;
  explicit Expression(const std::string& text);

  /// Binds identifiers to slots. Names outside `symbols` are rejected.
  void bind(const std::map<std::string, int>& symbols);

  /// Evaluates with the bound slots read from `values`. The result may be
  /// non-finite when the formula leaves its domain.
  double evaluate(const Vector& values) const;

  const std::string& text() const { return text_; }
  std::vector<std::string> identifiers() const;

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<Node> root_;
};

/// Symbol table for a system's states: s[i] is always available, plus the
/// conventional names (x, xdot; x, y, xdot, ydot; theta1, theta2,
/// theta1dot, theta2dot; rho, z, rhodot, zdot; x1..y3, x1dot..y3dot) and the
/// system parameters, which occupy slots after the state.
std::map<std::string, int> state_symbols(const SystemSpec& sys);

/// State followed by parameter values in the order of state_symbols.
Vector symbol_values(const SystemSpec& sys, const Vector& state);

}  // namespace poincare
