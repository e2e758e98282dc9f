#include <gtest/gtest.h>

#include "mdp/simplex.hpp"

using namespace mdp;

namespace {

RealMatrix random_symmetric_positive(int m, Rng& rng) {
  RealMatrix A(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = 0.2 + rng.uniform();
  return A;
}

}  // namespace

TEST(SimplexModel, GammaAtBarycentreOfInterval) {
  RealMatrix A = RealMatrix::Ones(3, 3);
  RealVector x(2);
  x << 0.5, 0.5;
  const RealMatrix g = gamma_simplex(A, x);
  EXPECT_NEAR(g(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(g(0, 1), -0.25, 1e-15);
  EXPECT_NEAR(g(1, 1), 0.25, 1e-15);
}

TEST(SimplexModel, DriftExample) {
  RealMatrix A = RealMatrix::Ones(3, 3);
  RealVector a(3), x(2);
  a << 1, 2, 3;
  x << 1.0 / 3, 1.0 / 3;
  EXPECT_NEAR(drift_simplex(A, a, x)(0), -1.0, 1e-14);
}

TEST(SimplexModel, DirichletDensityValues) {
  RealVector a = RealVector::Ones(3), x(2);
  x << 0.2, 0.3;
  EXPECT_NEAR(dirichlet_density(a, x), 2.0, 1e-13);
  RealVector b(2), y(1);
  b << 2, 2;
  y << 0.5;
  EXPECT_NEAR(dirichlet_density(b, y), 1.5, 1e-13);
  y << 1.5;
  EXPECT_THROW(dirichlet_density(b, y), DomainError);
}

TEST(SimplexModel, GammaIsPositiveSemidefiniteInside) {
  Rng rng(1);
  for (int n = 1; n <= 4; ++n) {
    const RealMatrix A = random_symmetric_positive(n + 1, rng);
    for (int s = 0; s < 20; ++s) {
      const RealVector x = sample_simplex_interior(n, rng);
      Eigen::SelfAdjointEigenSolver<RealMatrix> es(gamma_simplex(A, x));
      EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    }
  }
}

TEST(SimplexModel, DirichletIsReversible) {
  Rng rng(2);
  for (int n = 1; n <= 4; ++n) {
    SimplexParams p{random_symmetric_positive(n + 1, rng), RealVector::Constant(n + 1, 0.5) + RealVector::Random(n + 1).cwiseAbs()};
    const DiffusionModel m = make_simplex_model(p);
    for (int s = 0; s < 20; ++s) {
      const RealVector x = sample_simplex_interior(n, rng, 0.05);
      const double r = reversibility_residual(
          m, std::function<RealVector(const RealVector&)>([&](const RealVector& y) { return dirichlet_grad_log_density(p.a, y); }),
          x);
      EXPECT_LT(r, 1e-8);
    }
  }
}

TEST(SimplexModel, ExactBoundaryDivisionOnEveryFace) {
  for (int n = 1; n <= 3; ++n) {
    std::vector<std::vector<Rational>> A(n + 1, std::vector<Rational>(n + 1));
    std::vector<Rational> a(n + 1);
    for (int i = 0; i <= n; ++i) {
      a[i] = Rational(i + 1, 2);
      for (int j = 0; j <= n; ++j) A[i][j] = Rational(1 + (i + j) % 3, 1 + i * j % 2);
    }
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j < i; ++j) A[j][i] = A[i][j];
    const PolyOperator op = simplex_poly_operator(A, a);
    for (const MultiPoly& face : simplex_faces(n)) {
      const BoundaryDivision div = check_boundary_affine_exact(op, face);
      EXPECT_TRUE(div.is_affine) << "n=" << n << " face " << face.to_string();
    }
  }
}

TEST(SimplexModel, PolynomialFormAgreesWithNumericForm) {
  std::vector<std::vector<Rational>> Aq = {{0, 1, 2}, {1, 0, 3}, {2, 3, 0}};
  std::vector<Rational> aq = {Rational(1, 2), 2, 3};
  const PolyOperator op = simplex_poly_operator(Aq, aq);
  RealMatrix A(3, 3);
  A << 0, 1, 2, 1, 0, 3, 2, 3, 0;
  RealVector a(3), x(2);
  a << 0.5, 2, 3;
  x << 0.2, 0.45;
  const RealMatrix g = gamma_simplex(A, x);
  const RealVector b = drift_simplex(A, a, x);
  const std::vector<double> xv = {0.2, 0.45};
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(op.drift[i].evaluate(xv), b(i), 1e-14);
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(op.gamma[i][j].evaluate(xv), g(i, j), 1e-14);
  }
}

TEST(SphereAmbient, ProjectsOntoScalarModel) {
  Rng rng(3);
  const std::vector<std::vector<int>> partitions = {{2, 2}, {1, 2, 2}, {2, 1, 3}};
  for (const auto& sizes : partitions) {
    Partition part{sizes};
    const RealMatrix A = random_symmetric_positive(part.blocks(), rng);
    const RealVector a = sphere_parameters(part);
    VerificationReport rep = check_identity(
        "sphere", sphere_ambient(part, A), sphere_projection(part),
        [&](const RealVector& y) { return gamma_simplex(A, sphere_projection(part).eval(y)); },
        [&](const RealVector& y) { return drift_simplex(A, a, sphere_projection(part).eval(y)); },
        [&](Rng& r) { return sample_sphere(part.total(), r); }, 30, 1e-6, 1e-4, rng);
    for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.id << " " << c.max_abs_residual;
  }
}

TEST(SphereAmbient, TwoBlocksOfTwoGiveUnitParameters) {
  Partition part{{2, 2}};
  RealMatrix A = RealMatrix::Ones(2, 2);
  Rng rng(4);
  const RealVector y = sample_sphere(4, rng);
  const RealVector x = sphere_projection(part).eval(y);
  const RealVector b = pushforward_generator(sphere_ambient(part, A), sphere_projection(part), y);
  EXPECT_NEAR(b(0), drift_simplex(A, RealVector::Ones(2), x)(0), 1e-6);
}

TEST(SphereAmbient, RoundLaplacianIsFourTimesTheUnitModel) {
  Partition part{{1, 2}};
  Rng rng(5);
  const RealMatrix ones = RealMatrix::Ones(2, 2);
  const RealVector a = sphere_parameters(part);
  VerificationReport rep = check_identity(
      "round", spherical_laplacian(3), sphere_projection(part),
      [&](const RealVector& y) { return RealMatrix(4.0 * gamma_simplex(ones, sphere_projection(part).eval(y))); },
      [&](const RealVector& y) { return RealVector(4.0 * drift_simplex(ones, a, sphere_projection(part).eval(y))); },
      [&](Rng& r) { return sample_sphere(3, r); }, 30, 1e-6, 1e-4, rng);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.id << " " << c.max_abs_residual;
}

TEST(SphereAmbient, OffSpherePointIsRejected) {
  RealVector y = RealVector::Ones(3);
  EXPECT_THROW(require_on_sphere(y), OffSphereError);
  EXPECT_NO_THROW(require_on_sphere(y / y.norm()));
}

TEST(LaguerreAmbient, WarpedProductImage) {
  Rng rng(6);
  RealVector a(3);
  a << 0.7, 1.5, 2.5;
  auto image = [&](const RealVector& y) {
    RealMatrix g;
    RealVector b;
    laguerre_image(a, y, g, b);
    return std::make_pair(g, b);
  };
  VerificationReport rep = check_identity(
      "laguerre", laguerre_ambient(a), laguerre_projection(2),
      [&](const RealVector& y) { return image(y).first; },
      [&](const RealVector& y) { return image(y).second; },
      [](Rng& r) {
        RealVector y(3);
        for (int i = 0; i < 3; ++i) y(i) = 0.3 + 3.0 * r.uniform();
        return y;
      },
      30, 1e-6, 1e-4, rng);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.id << " " << c.max_abs_residual;
}

TEST(LaguerreAmbient, SpecificValue) {
  RealVector a(2), y(2);
  a << 2, 3;
  y << 2, 3;
  RealMatrix g;
  RealVector b;
  laguerre_image(a, y, g, b);
  EXPECT_NEAR(g(1, 1), 0.048, 1e-15);
  const Pushforward p = pushforward(laguerre_ambient(a), laguerre_projection(1), y);
  EXPECT_NEAR(p.gamma(1, 1), 0.048, 1e-9);
}

TEST(OuWarped, RadialAndAngularImage) {
  Rng rng(7);
  Partition part{{1, 2, 2}};
  const RealMatrix A = random_symmetric_positive(3, rng);
  auto image = [&](const RealVector& y) {
    RealMatrix g;
    RealVector b;
    ou_warped_image(part, A, y, g, b);
    return std::make_pair(g, b);
  };
  VerificationReport rep = check_identity(
      "ou_warped", ou_warped_ambient(part, A), radial_projection(part),
      [&](const RealVector& y) { return image(y).first; }, [&](const RealVector& y) { return image(y).second; },
      [](Rng& r) {
        RealVector y = sample_sphere(5, r);
        return RealVector((0.5 + 2.0 * r.uniform()) * y);
      },
      30, 1e-6, 1e-4, rng);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.id << " " << c.max_abs_residual;
}

TEST(OuWarped, RadialDriftValue) {
  Partition part{{1, 2}};
  RealVector y(3);
  y << 1.0, 0.0, 0.0;
  const RealVector b = pushforward_generator(ou_warped_ambient(part, RealMatrix::Ones(2, 2)), radial_projection(part), y);
  EXPECT_NEAR(b(0), 1.0, 1e-6);
}

TEST(OuWarped, StandardOuIsTheCaseAEqualsFour) {
  Rng rng(8);
  Partition part{{2, 1, 2}};
  const DiffusionModel warped = ou_warped_ambient(part, RealMatrix::Constant(3, 3, 4.0));
  for (int s = 0; s < 10; ++s) {
    const RealVector y = (1.0 + rng.uniform()) * sample_sphere(5, rng);
    const Pushforward p = pushforward(ou_ambient(5), radial_projection(part), y);
    const Pushforward q = pushforward(warped, radial_projection(part), y);
    EXPECT_LT(max_abs(RealMatrix(p.gamma - q.gamma)), 1e-8);
    EXPECT_LT((p.drift - q.drift).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(ReferenceModels, AreReversibleForTheirDensities) {
  Rng rng(9);
  const std::vector<std::pair<ReferenceModel, std::pair<double, double>>> models = {
      {ou_1d(), {-3.0, 3.0}}, {laguerre_1d(2.5), {0.1, 5.0}}, {jacobi_1d(2.0, 3.5), {-0.95, 0.95}}};
  for (const auto& [m, range] : models) {
    for (int s = 0; s < 20; ++s) {
      RealVector x(1);
      x << range.first + (range.second - range.first) * rng.uniform();
      EXPECT_LT(reversibility_residual(m.model, m.grad_log_density, x), 1e-8);
      EXPECT_LT(reversibility_residual(m.model, m.log_density, x), 1e-8);
    }
  }
}

TEST(ReferenceModels, WrongDensityIsDetected) {
  const ReferenceModel ou = ou_1d();
  RealVector x(1);
  x << 1.3;
  const auto wrong = std::function<double(const RealVector&)>([](const RealVector& y) { return -y(0) * y(0); });
  EXPECT_GT(reversibility_residual(ou.model, wrong, x), 0.1);
}
