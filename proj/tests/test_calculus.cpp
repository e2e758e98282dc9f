#include <gtest/gtest.h>

#include <cmath>

#include "mdp/calculus.hpp"
#include "mdp/matrix_simplex.hpp"
#include "mdp/simplex.hpp"

using namespace mdp;

namespace {

DiffusionModel flat(int dim) {
  return {dim, [dim](const RealVector&) { return RealMatrix(RealMatrix::Identity(dim, dim)); },
          [dim](const RealVector&) { return RealVector(RealVector::Zero(dim)); }, nullptr};
}

ProjectionMap square() {
  return {1, 1, [](const RealVector& x) { return RealVector::Constant(1, x(0) * x(0)).eval(); }};
}

RealVector vec(std::initializer_list<double> v) {
  RealVector x(static_cast<int>(v.size()));
  int i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

}  // namespace

TEST(Pushforward, SquareOfBrownianCoordinate) {
  EXPECT_NEAR(pushforward_gamma(flat(1), square(), vec({3.0}))(0, 0), 36.0, 1e-7);
}

TEST(Pushforward, SumOfIndependentCoordinates) {
  ProjectionMap sum{2, 1, [](const RealVector& x) { return RealVector::Constant(1, x.sum()).eval(); }};
  EXPECT_NEAR(pushforward_gamma(flat(2), sum, vec({0.3, -1.7}))(0, 0), 2.0, 1e-9);
}

TEST(Pushforward, OrnsteinUhlenbeckSquare) {
  const ReferenceModel ou = ou_1d();
  for (double x : {1.0, 0.5, -2.0})
    EXPECT_NEAR(pushforward_generator(ou.model, square(), vec({x}))(0), 2.0 - 2.0 * x * x, 1e-6);
}

TEST(Pushforward, IdentityMapReturnsTheDrift) {
  Rng rng(1);
  RealMatrix A = RealMatrix::Ones(3, 3);
  RealVector a = vec({0.5, 1.0, 2.5});
  const DiffusionModel m = make_simplex_model({A, a});
  ProjectionMap id{2, 2, [](const RealVector& x) { return x; }};
  const RealVector x = sample_simplex_interior(2, rng);
  const Pushforward p = pushforward(m, id, x);
  EXPECT_LT((p.drift - m.drift(x)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(max_abs(RealMatrix(p.gamma - m.gamma(x))), 1e-9);
}

TEST(Pushforward, StencilOutsideTheDomainShrinks) {
  ProjectionMap log_map{1, 1, [](const RealVector& x) {
                          if (x(0) <= 0.0) throw DomainError("log of non-positive");
                          return RealVector::Constant(1, std::log(x(0))).eval();
                        }};
  // Default Hessian step 1e-3 leaves (0, inf) at x = 5e-4; shrinking recovers.
  const double x = 5e-4;
  const Pushforward p = pushforward(flat(1), log_map, vec({x}));
  EXPECT_NEAR(p.gamma(0, 0) * x * x, 1.0, 1e-3);
  EXPECT_NEAR(p.drift(0) * x * x, -1.0, 5e-2);
  EXPECT_THROW(pushforward(flat(1), log_map, vec({-1.0})), DerivativeError);
}

TEST(Pushforward, JacobianErrorIsSecondOrder) {
  ProjectionMap f{2, 1, [](const RealVector& x) { return RealVector::Constant(1, std::sin(x(0)) * std::exp(x(1))).eval(); }};
  const RealVector x = vec({0.7, 0.2});
  const double exact = std::cos(0.7) * std::exp(0.2);
  const double e1 = std::abs(jacobian_fd(f, x, 1e-2)(0, 0) - exact);
  const double e2 = std::abs(jacobian_fd(f, x, 5e-3)(0, 0) - exact);
  EXPECT_NEAR(e1 / e2, 4.0, 0.1);
}

TEST(Pushforward, WellDefinedOnFibres) {
  // y and its sign flips project to the same simplex point.
  Partition part{{2, 1, 2}};
  const RealMatrix A = RealMatrix::Ones(3, 3);
  const DiffusionModel amb = sphere_ambient(part, A);
  Rng rng(2);
  for (int s = 0; s < 10; ++s) {
    const RealVector y = sample_sphere(5, rng);
    RealVector z = y;
    z(0) = -z(0);
    z(3) = -z(3);
    const Pushforward p = pushforward(amb, sphere_projection(part), y);
    const Pushforward q = pushforward(amb, sphere_projection(part), z);
    EXPECT_LT(max_abs(RealMatrix(p.gamma - q.gamma)), 1e-6);
    EXPECT_LT((p.drift - q.drift).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(ComplexConversion, ComplexBrownianMotionIsTwoIndependentReals) {
  // Gamma(z, z) = 0, Gamma(z, conj z) = 2.
  const RealBrackets r = real_brackets(cplx(0.0), cplx(2.0));
  EXPECT_DOUBLE_EQ(r.xx, 1.0);
  EXPECT_DOUBLE_EQ(r.yy, 1.0);
  EXPECT_DOUBLE_EQ(r.xy, 0.0);
  EXPECT_DOUBLE_EQ(r.yx, 0.0);
  const ComplexTable t = ComplexTable::from_real(RealMatrix::Identity(2, 2), RealVector::Zero(2));
  EXPECT_EQ(t.gamma(0, 0), cplx(0.0));
  EXPECT_EQ(t.gamma_bar(0, 0), cplx(2.0));
}

TEST(ComplexConversion, RoundTripThroughRealBrackets) {
  Rng rng(3);
  RealMatrix g(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = rng.gaussian();
  const ComplexTable t = ComplexTable::from_real(g, RealVector::Zero(4));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const RealBrackets r = real_brackets(t.gamma(a, b), t.gamma_bar(a, b));
      EXPECT_NEAR(r.xx, g(2 * a, 2 * b), 1e-14);
      EXPECT_NEAR(r.xy, g(2 * a, 2 * b + 1), 1e-14);
      EXPECT_NEAR(r.yx, g(2 * a + 1, 2 * b), 1e-14);
      EXPECT_NEAR(r.yy, g(2 * a + 1, 2 * b + 1), 1e-14);
    }
}

TEST(ComplexConversion, PushforwardOfHolomorphicSquare) {
  // Complex BM: Gamma(z^2, z^2) = 0, Gamma(z^2, conj z^2) = 8|z|^2, L(z^2) = 0.
  DiffusionModel bm = flat(2);
  const RealVector x = vec({0.4, -1.1});
  const ComplexTable t = complex_pushforward(
      bm, [](const RealVector& y) { ComplexVector f(1); f(0) = cplx(y(0), y(1)) * cplx(y(0), y(1)); return f; }, x);
  EXPECT_LT(std::abs(t.gamma(0, 0)), 1e-8);
  EXPECT_NEAR(t.gamma_bar(0, 0).real(), 8.0 * (0.16 + 1.21), 1e-8);
  EXPECT_LT(std::abs(t.drift(0)), 1e-6);
}

TEST(CheckIdentity, CorruptedClosedFormFailsWithTheTrueMagnitude) {
  Rng rng(4);
  const ReferenceModel ou = ou_1d();
  auto sampler = [](Rng& r) { return RealVector::Constant(1, 1.0 + r.uniform()).eval(); };
  auto good = [](const RealVector& x) { return RealMatrix::Constant(1, 1, 4.0 * x(0) * x(0)).eval(); };
  auto bad = [](const RealVector& x) { return RealMatrix::Constant(1, 1, 8.0 * x(0) * x(0)).eval(); };
  auto drift = [](const RealVector& x) { return RealVector::Constant(1, 2.0 - 2.0 * x(0) * x(0)).eval(); };
  const VerificationReport ok = check_identity("sq", ou.model, square(), good, drift, sampler, 20, 1e-6, 1e-5, rng);
  EXPECT_TRUE(ok.pass());
  const VerificationReport ko = check_identity("sq", ou.model, square(), bad, drift, sampler, 20, 1e-6, 1e-5, rng);
  EXPECT_FALSE(ko.pass());
  const CheckResult* c = ko.find("sq.gamma");
  ASSERT_NE(c, nullptr);
  EXPECT_GT(c->max_abs_residual, 4.0);
  EXPECT_LT(c->max_abs_residual, 16.0 + 1e-6);
  EXPECT_TRUE(ko.find("sq.generator")->pass);
}

TEST(Reversibility, ReferenceCases) {
  EXPECT_LT(reversibility_residual(ou_1d().model, ou_1d().grad_log_density, vec({0.8})), 1e-10);
  const ReferenceModel j = jacobi_1d(2.0, 2.0);
  EXPECT_LT(reversibility_residual(j.model, j.grad_log_density, vec({0.3})), 1e-8);
}

TEST(Reversibility, MatrixModelOneTwoByTwo) {
  ModelIParams p{1, 2, RealMatrix::Ones(2, 2), vec({2.0, 2.0})};
  const DiffusionModel m = make_model1(p);
  const HermitianLayout layout(1, 2);
  Rng rng(5);
  for (int s = 0; s < 10; ++s) {
    const RealVector x = layout.realify(sample_matrix_simplex(1, 2, rng));
    EXPECT_LT(reversibility_residual(
                  m, std::function<RealVector(const RealVector&)>([&](const RealVector& y) {
                    return matrix_dirichlet_grad_log_density(layout, p.a, y);
                  }),
                  x),
              1e-8);
  }
}

TEST(AffineFit, RecoversAnAffineMapAndRejectsTooFewPoints) {
  Rng rng(6);
  RealMatrix slope(2, 3);
  slope << 1, 2, 3, -1, 0.5, 0;
  const RealVector offset = vec({0.25, -4.0});
  std::vector<RealVector> xs, ys;
  for (int s = 0; s < 12; ++s) {
    RealVector x(3);
    for (int i = 0; i < 3; ++i) x(i) = rng.gaussian();
    xs.push_back(x);
    ys.push_back(offset + slope * x);
  }
  const AffineFit fit = fit_affine(xs, ys);
  EXPECT_LT(fit.max_residual, 1e-12);
  EXPECT_LT(max_abs(RealMatrix(fit.slope - slope)), 1e-12);
  xs.resize(4);
  ys.resize(4);
  EXPECT_THROW(fit_affine(xs, ys), RankDeficientFit);
}
