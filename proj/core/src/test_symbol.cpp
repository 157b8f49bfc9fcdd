#include "hml/test_symbol.hpp"

#include <cmath>

namespace hml {

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace

Polynomial4 Polynomial4::variable(int index, double scale) {
  std::array<int, 4> e{0, 0, 0, 0};
  e[index] = 1;
  return of({{scale, e}});
}

double Polynomial4::value(const Vec4& v) const {
  double s = 0.0;
  for (const auto& m : terms_) {
    double p = m.coefficient;
    for (int i = 0; i < 4; ++i) p *= ipow(v[i], m.exponents[i]);
    s += p;
  }
  return s;
}

Vec4 Polynomial4::gradient(const Vec4& v) const {
  Vec4 g = Vec4::Zero();
  for (const auto& m : terms_) {
    for (int d = 0; d < 4; ++d) {
      if (m.exponents[d] == 0) continue;
      double p = m.coefficient * m.exponents[d];
      for (int i = 0; i < 4; ++i) p *= ipow(v[i], i == d ? m.exponents[i] - 1 : m.exponents[i]);
      g[d] += p;
    }
  }
  return g;
}

TestSymbol TestSymbol::product(Polynomial4 space, Polynomial4 frequency, std::string name) {
  return TestSymbol({{std::move(space), std::move(frequency)}}, std::move(name));
}

double TestSymbol::value(const Vec4& xt, const Vec4& zeta) const {
  double s = 0.0;
  for (const auto& t : terms_) s += t.space.value(xt) * t.frequency.value(zeta);
  return s;
}

Vec4 TestSymbol::grad_x(const Vec4& xt, const Vec4& zeta) const {
  Vec4 g = Vec4::Zero();
  for (const auto& t : terms_) g += t.space.gradient(xt) * t.frequency.value(zeta);
  return g;
}

Vec4 TestSymbol::grad_zeta(const Vec4& xt, const Vec4& zeta) const {
  Vec4 g = Vec4::Zero();
  for (const auto& t : terms_) g += t.space.value(xt) * t.frequency.gradient(zeta);
  return g;
}

std::vector<TestSymbol> default_test_battery() {
  using P = Polynomial4;
  std::vector<TestSymbol> out;
  out.push_back(TestSymbol::product(P::constant(1.0), P::constant(1.0), "1"));
  out.push_back(TestSymbol::product(P::variable(0), P::constant(1.0), "t"));
  out.push_back(TestSymbol::product(P::constant(1.0), P::of({{1.0, {0, 0, 0, 2}}}), "zeta3^2"));
  out.push_back(TestSymbol::product(P::of({{1.0, {0, 0, 0, 0}}, {0.5, {0, 0, 0, 1}}}),
                                    P::of({{1.0, {1, 0, 0, 1}}}), "(1+x3/2) zeta0 zeta3"));
  out.push_back(TestSymbol::product(P::of({{1.0, {0, 0, 0, 0}}, {1.0, {1, 0, 0, 0}}}),
                                    P::of({{1.0, {0, 2, 0, 0}}, {1.0, {0, 0, 2, 0}}, {1.0, {2, 0, 0, 0}}}),
                                    "(1+t)(zeta0^2+zeta1^2+zeta2^2)"));
  out.push_back(TestSymbol::product(P::of({{1.0, {0, 1, 0, 0}}, {1.0, {0, 0, 1, 0}}}),
                                    P::of({{1.0, {0, 0, 0, 1}}}), "(x1+x2) zeta3"));
  return out;
}

}  // namespace hml
