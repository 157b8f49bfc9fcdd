#pragma once

// Tiny arithmetic grammar for coefficient fields over x1, x2, x3:
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('+' | '-') unary | atom
//   atom   := number | 'x1' | 'x2' | 'x3' | func '(' expr ')' | '(' expr ')'
//   func   := 'sin' | 'cos' | 'exp' | 'sqrt'
//
// Evaluation carries the value and the exact gradient (forward-mode).

#include <memory>
#include <string>
#include <string_view>

#include "hml/types.hpp"

namespace hml {

struct ValueGrad {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
};

class Expression {
 public:
  /// Throws ParseError with the byte offset of the first bad token.
  static Expression parse(std::string_view source);

  /// Throws DomainError for sqrt of a negative number, division by zero or
  /// a non-finite result.
  ValueGrad evaluate(const Vec3& x) const;

  /// True when the expression contains no coordinate reference.
  bool is_constant() const;
  const std::string& source() const noexcept { return source_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

}  // namespace hml
