#include "hml/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "hml/errors.hpp"

namespace hml {

struct Expression::Node {
  enum class Kind { Number, Coord, Neg, Add, Sub, Mul, Div, Sin, Cos, Exp, Sqrt };
  Kind kind;
  double number = 0.0;
  int coord = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse_all() {
    NodePtr n = expr();
    skip();
    if (pos_ != src_.size()) throw ParseError("unexpected character '" + std::string(1, src_[pos_]) + "'", pos_);
    return n;
  }

 private:
  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) n = make(Kind::Add, n, term());
      else if (accept('-')) n = make(Kind::Sub, n, term());
      else return n;
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) n = make(Kind::Mul, n, unary());
      else if (accept('/')) n = make(Kind::Div, n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (accept('-')) return make(Kind::Neg, unary());
    if (accept('+')) return unary();
    return atom();
  }
  NodePtr atom() {
    skip();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = expr();
      expect(')');
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }
  NodePtr number() {
    const std::string rest(src_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) throw ParseError("malformed number", pos_);
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::Number;
    n->number = v;
    return n;
  }
  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x1" || name == "x2" || name == "x3") {
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::Coord;
      n->coord = name[1] - '1';
      return n;
    }
    Kind k;
    if (name == "sin") k = Kind::Sin;
    else if (name == "cos") k = Kind::Cos;
    else if (name == "exp") k = Kind::Exp;
    else if (name == "sqrt") k = Kind::Sqrt;
    else throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    expect('(');
    NodePtr arg = expr();
    expect(')');
    return make(k, arg);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

ValueGrad eval(const Expression::Node& n, const Vec3& x) {
  switch (n.kind) {
    case Kind::Number:
      return {n.number, Vec3::Zero()};
    case Kind::Coord: {
      ValueGrad r{x[n.coord], Vec3::Zero()};
      r.grad[n.coord] = 1.0;
      return r;
    }
    case Kind::Neg: {
      ValueGrad a = eval(*n.lhs, x);
      return {-a.value, -a.grad};
    }
    case Kind::Add: {
      ValueGrad a = eval(*n.lhs, x), b = eval(*n.rhs, x);
      return {a.value + b.value, a.grad + b.grad};
    }
    case Kind::Sub: {
      ValueGrad a = eval(*n.lhs, x), b = eval(*n.rhs, x);
      return {a.value - b.value, a.grad - b.grad};
    }
    case Kind::Mul: {
      ValueGrad a = eval(*n.lhs, x), b = eval(*n.rhs, x);
      return {a.value * b.value, a.grad * b.value + b.grad * a.value};
    }
    case Kind::Div: {
      ValueGrad a = eval(*n.lhs, x), b = eval(*n.rhs, x);
      if (b.value == 0.0) throw DomainError("division by zero in coefficient expression");
      return {a.value / b.value, (a.grad * b.value - b.grad * a.value) / (b.value * b.value)};
    }
    case Kind::Sin: {
      ValueGrad a = eval(*n.lhs, x);
      return {std::sin(a.value), a.grad * std::cos(a.value)};
    }
    case Kind::Cos: {
      ValueGrad a = eval(*n.lhs, x);
      return {std::cos(a.value), -a.grad * std::sin(a.value)};
    }
    case Kind::Exp: {
      ValueGrad a = eval(*n.lhs, x);
      const double e = std::exp(a.value);
      return {e, a.grad * e};
    }
    case Kind::Sqrt: {
      ValueGrad a = eval(*n.lhs, x);
      if (a.value <= 0.0) {
        if (a.value == 0.0 && a.grad.isZero()) return {0.0, Vec3::Zero()};
        throw DomainError("sqrt of non-positive value in coefficient expression");
      }
      const double s = std::sqrt(a.value);
      return {s, a.grad / (2.0 * s)};
    }
  }
  return {};
}

bool has_coord(const Expression::Node& n) {
  if (n.kind == Kind::Coord) return true;
  return (n.lhs && has_coord(*n.lhs)) || (n.rhs && has_coord(*n.rhs));
}

}  // namespace

Expression Expression::parse(std::string_view source) {
  Expression e;
  e.root_ = Parser(source).parse_all();
  e.source_ = std::string(source);
  return e;
}

ValueGrad Expression::evaluate(const Vec3& x) const {
  ValueGrad r = eval(*root_, x);
  if (!std::isfinite(r.value) || !r.grad.allFinite())
    throw DomainError("non-finite value of expression '" + source_ + "'");
  return r;
}

bool Expression::is_constant() const { return !has_coord(*root_); }

}  // namespace hml
