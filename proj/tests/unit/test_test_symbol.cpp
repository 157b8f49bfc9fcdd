#include <gtest/gtest.h>

#include "hml/test_symbol.hpp"

using namespace hml;

TEST(TestSymbol, PolynomialValueAndGradient) {
  const Polynomial4 p = Polynomial4::of({{2.0, {1, 0, 2, 0}}, {-1.0, {0, 0, 0, 3}}, {0.5, {0, 0, 0, 0}}});
  const Vec4 v(1.5, 9.0, -2.0, 0.5);
  EXPECT_DOUBLE_EQ(p.value(v), 2.0 * 1.5 * 4.0 - 0.125 + 0.5);
  const Vec4 g = p.gradient(v);
  EXPECT_DOUBLE_EQ(g[0], 8.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
  EXPECT_DOUBLE_EQ(g[2], 2.0 * 1.5 * 2 * -2.0);
  EXPECT_DOUBLE_EQ(g[3], -3.0 * 0.25);
}

TEST(TestSymbol, VariableAndConstant) {
  const Vec4 v(1, 2, 3, 4);
  EXPECT_DOUBLE_EQ(Polynomial4::variable(2, 3.0).value(v), 9.0);
  EXPECT_EQ(Polynomial4::variable(2, 3.0).gradient(v), Vec4(0, 0, 3, 0));
  EXPECT_EQ(Polynomial4::constant(7.0).gradient(v), Vec4::Zero());
  EXPECT_DOUBLE_EQ(Polynomial4().value(v), 0.0);
}

TEST(TestSymbol, ProductDerivatives) {
  const TestSymbol psi = TestSymbol::product(Polynomial4::of({{1.0, {1, 1, 0, 0}}}),
                                             Polynomial4::of({{1.0, {0, 0, 0, 2}}}), "t x1 zeta3^2");
  const Vec4 xt(2, 3, 0, 0), z(0, 0, 0, 0.5);
  EXPECT_DOUBLE_EQ(psi.value(xt, z), 6 * 0.25);
  EXPECT_EQ(psi.grad_x(xt, z), Vec4(3 * 0.25, 2 * 0.25, 0, 0));
  EXPECT_EQ(psi.grad_zeta(xt, z), Vec4(0, 0, 0, 6.0));
  EXPECT_EQ(psi.name(), "t x1 zeta3^2");
}

TEST(TestSymbol, DefaultBattery) {
  const auto battery = default_test_battery();
  EXPECT_GE(battery.size(), 5u);
  for (const auto& psi : battery) EXPECT_FALSE(psi.name().empty());
}
