#pragma once

// Tiny arithmetic expression language for environment coefficients:
// numbers, the variable x, the constant pi, + - * /, parentheses, and the
// functions sin, cos, exp.

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace perbbm {

class ExprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Expr {
 public:
  virtual ~Expr() = default;
  virtual double eval(double x) const = 0;
};

/// Throws ExprError with the offending position on malformed input.
std::shared_ptr<const Expr> parse_expression(std::string_view text);

}  // namespace perbbm
