#include <gtest/gtest.h>

#include "mdp/poly.hpp"
#include "mdp/simplex.hpp"

using namespace mdp;

namespace {

const std::vector<std::string> kXY = {"x", "y"};

MultiPoly x_() { return MultiPoly::variable(kXY, 0); }
MultiPoly y_() { return MultiPoly::variable(kXY, 1); }
MultiPoly c_(const Rational& c) { return MultiPoly::constant(kXY, c); }

bool same(const MultiPoly& a, const MultiPoly& b) { return (a - b).is_zero(); }

PolyOperator one_dim_jacobi() {
  const std::vector<std::string> v = {"x"};
  const MultiPoly x = MultiPoly::variable(v, 0);
  return {{{x - x * x}}, {MultiPoly(v)}};
}

PolyOperator flat_simplex(int n) {
  std::vector<std::string> vars;
  for (int i = 0; i < n; ++i) vars.push_back("x" + std::to_string(i + 1));
  PolyOperator op;
  op.gamma.assign(n, std::vector<MultiPoly>(n, MultiPoly(vars)));
  for (int i = 0; i < n; ++i) op.gamma[i][i] = MultiPoly::constant(vars, 1);
  op.drift.assign(n, MultiPoly(vars));
  return op;
}

}  // namespace

TEST(MultiPoly, ZeroCoefficientsAreNotStored) {
  const MultiPoly p = x_() + y_() - x_();
  EXPECT_EQ(p.terms().size(), 1u);
  EXPECT_EQ(p.degree(), 1);
  EXPECT_EQ((x_() - x_()).degree(), -1);
}

TEST(MultiPoly, DerivativeAndEvaluation) {
  const MultiPoly p = x_() * x_() * y_() * Rational(3, 2) + c_(7);
  EXPECT_TRUE(same(p.derivative(0), x_() * y_() * Rational(3)));
  EXPECT_EQ(p.evaluate(std::vector<Rational>{2, Rational(1, 3)}), Rational(9));
  EXPECT_DOUBLE_EQ(p.evaluate(std::vector<double>{2.0, 1.0 / 3.0}), 9.0);
}

TEST(MultiPoly, DivisionReconstructsTheDividend) {
  const MultiPoly f = x_() * x_() * y_() - x_() * y_() * y_() + c_(3) * y_() + c_(1);
  const MultiPoly g = x_() - y_() + c_(2);
  auto [q, r] = f.divide(g);
  EXPECT_TRUE(same(q * g + r, f));
  auto [q2, r2] = (f * g).divide(g);
  EXPECT_TRUE(r2.is_zero());
  EXPECT_TRUE(same(q2, f));
}

TEST(MultiPoly, MismatchedVariablesThrow) {
  const MultiPoly z = MultiPoly::variable({"z"}, 0);
  EXPECT_THROW(x_() + z, VariableMismatch);
  EXPECT_THROW(x_() * z, VariableMismatch);
}

TEST(PolyGamma, JacobiOnTheInterval) {
  const PolyOperator op = one_dim_jacobi();
  const std::vector<std::string> v = {"x"};
  const MultiPoly x = MultiPoly::variable(v, 0);
  EXPECT_TRUE(same(poly_gamma_apply(op, x, x), x - x * x));
  EXPECT_TRUE(poly_gamma_apply(op, MultiPoly::constant(v, 5), x).is_zero());
}

TEST(PolyGamma, UniformSimplexCrossTerm) {
  std::vector<std::vector<Rational>> A(3, std::vector<Rational>(3, 1));
  const PolyOperator op = simplex_poly_operator(A, {1, 1, 1});
  const std::vector<std::string> v = {"x1", "x2"};
  const MultiPoly x1 = MultiPoly::variable(v, 0), x2 = MultiPoly::variable(v, 1);
  EXPECT_TRUE(same(poly_gamma_apply(op, x1, x2), -(x1 * x2)));
}

TEST(PolyGamma, DerivationPropertyHoldsExactly) {
  std::vector<std::vector<Rational>> A = {{0, 2, Rational(1, 3)}, {2, 0, 5}, {Rational(1, 3), 5, 0}};
  const PolyOperator op = simplex_poly_operator(A, {Rational(1, 2), 2, 3});
  const std::vector<std::string> v = {"x1", "x2"};
  const MultiPoly x1 = MultiPoly::variable(v, 0), x2 = MultiPoly::variable(v, 1);
  const MultiPoly one = MultiPoly::constant(v, 1);
  const std::vector<MultiPoly> polys = {x1 * x2 + one, x1 * x1 - x2 * Rational(3, 7), x2 * x2 * x1 + x1};
  for (const auto& f : polys)
    for (const auto& g : polys)
      for (const auto& h : polys) {
        const MultiPoly lhs = poly_gamma_apply(op, f * g, h);
        const MultiPoly rhs = f * poly_gamma_apply(op, g, h) + g * poly_gamma_apply(op, f, h);
        EXPECT_TRUE(same(lhs, rhs));
        // Second-order generator: L(fg) = f Lg + g Lf + 2 Gamma(f, g).
        const MultiPoly l = poly_generator_apply(op, f * g);
        const MultiPoly r = f * poly_generator_apply(op, g) + g * poly_generator_apply(op, f) +
                            poly_gamma_apply(op, f, g) * Rational(2);
        EXPECT_TRUE(same(l, r));
      }
}

TEST(BoundaryExact, SimplexFacesAreAffine) {
  std::vector<std::vector<Rational>> A = {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
  const PolyOperator op = simplex_poly_operator(A, {1, 1, 1});
  const std::vector<std::string> v = {"x1", "x2"};
  const MultiPoly x1 = MultiPoly::variable(v, 0), x2 = MultiPoly::variable(v, 1);
  EXPECT_TRUE(check_boundary_affine_exact(op, x1).is_affine);
  EXPECT_TRUE(check_boundary_affine_exact(op, x1 + x2 - MultiPoly::constant(v, 1)).is_affine);
}

TEST(BoundaryExact, FlatMetricFails) {
  const PolyOperator op = flat_simplex(2);
  const BoundaryDivision div = check_boundary_affine_exact(op, MultiPoly::variable({"x1", "x2"}, 0));
  EXPECT_FALSE(div.is_affine);
}
