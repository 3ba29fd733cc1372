#include "perbbm/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace perbbm {

namespace {

struct Constant final : Expr {
  explicit Constant(double v) : value(v) {}
  double eval(double) const override { return value; }
  double value;
};

struct Variable final : Expr {
  double eval(double x) const override { return x; }
};

struct Unary final : Expr {
  enum class Op { negate, sin, cos, exp };
  Unary(Op o, std::shared_ptr<const Expr> a) : op(o), arg(std::move(a)) {}
  double eval(double x) const override {
    const double v = arg->eval(x);
    switch (op) {
      case Op::negate: return -v;
      case Op::sin: return std::sin(v);
      case Op::cos: return std::cos(v);
      case Op::exp: return std::exp(v);
    }
    return v;
  }
  Op op;
  std::shared_ptr<const Expr> arg;
};

struct Binary final : Expr {
  Binary(char o, std::shared_ptr<const Expr> l, std::shared_ptr<const Expr> r)
      : op(o), lhs(std::move(l)), rhs(std::move(r)) {}
  double eval(double x) const override {
    const double a = lhs->eval(x);
    const double b = rhs->eval(x);
    switch (op) {
      case '+': return a + b;
      case '-': return a - b;
      case '*': return a * b;
      default: return a / b;
    }
  }
  char op;
  std::shared_ptr<const Expr> lhs, rhs;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::shared_ptr<const Expr> parse() {
    auto e = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ExprError(what + " at position " + std::to_string(pos_) + " in \"" + std::string(text_) + "\"");
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::shared_ptr<const Expr> parse_sum() {
    auto lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = std::make_shared<Binary>('+', lhs, parse_product());
      } else if (accept('-')) {
        lhs = std::make_shared<Binary>('-', lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  std::shared_ptr<const Expr> parse_product() {
    auto lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = std::make_shared<Binary>('*', lhs, parse_unary());
      } else if (accept('/')) {
        lhs = std::make_shared<Binary>('/', lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  std::shared_ptr<const Expr> parse_unary() {
    if (accept('-')) return std::make_shared<Unary>(Unary::Op::negate, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_primary();
  }

  std::shared_ptr<const Expr> parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view name = text_.substr(start, pos_ - start);
      if (name == "x") return std::make_shared<Variable>();
      if (name == "pi") return std::make_shared<Constant>(std::numbers::pi);
      Unary::Op op{};
      if (name == "sin") {
        op = Unary::Op::sin;
      } else if (name == "cos") {
        op = Unary::Op::cos;
      } else if (name == "exp") {
        op = Unary::Op::exp;
      } else {
        pos_ = start;
        fail("unknown identifier '" + std::string(name) + "'");
      }
      if (!accept('(')) fail("expected '(' after " + std::string(name));
      auto arg = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return std::make_shared<Unary>(op, std::move(arg));
    }
    fail("unexpected character");
  }

  std::shared_ptr<const Expr> parse_number() {
    double value = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{}) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return std::make_shared<Constant>(value);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::shared_ptr<const Expr> parse_expression(std::string_view text) { return Parser(text).parse(); }

}  // namespace perbbm
