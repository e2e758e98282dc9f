#include <gtest/gtest.h>

#include "mdp/sun.hpp"
#include "mdp/wishart.hpp"

using namespace mdp;

namespace {

// Family whose sum is diag(l_1^2, ..., l_d^2), split evenly over the blocks.
MatrixPoint diagonal_family(const RealVector& lambda, int blocks) {
  const int d = static_cast<int>(lambda.size());
  MatrixPoint w;
  for (int p = 0; p < blocks; ++p) {
    HermitianMatrix m(d);
    for (int i = 0; i < d; ++i) m.set(i, i, lambda(i) * lambda(i) / blocks);
    w.push_back(m);
  }
  return w;
}

void expect_all_pass(const VerificationReport& rep) {
  ASSERT_FALSE(rep.checks.empty());
  for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.id << " residual " << c.max_abs_residual;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

double standard_error(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1) / v.size());
}

}  // namespace

TEST(WishartAmbient, GeneratorAtIdentity) {
  const WishartFamily fam{2, {3, 3}};
  const HermitianLayout layout = fam.layout();
  const RealVector x = layout.realify({HermitianMatrix::identity(2), HermitianMatrix::identity(2)});
  const DiffusionModel m = wishart_ambient(fam);
  const MatrixPoint drift = layout.unrealify(m.drift(x));
  EXPECT_NEAR(max_abs(ComplexMatrix(drift[0].matrix() - 10.0 * ComplexMatrix::Identity(2, 2))), 0.0, 1e-15);
  const RealMatrix g = m.gamma(x);
  const int half = layout.dim() / 2;
  EXPECT_EQ(max_abs(RealMatrix(g.topRightCorner(half, half))), 0.0);
  EXPECT_EQ(max_abs(RealMatrix(g.bottomLeftCorner(half, half))), 0.0);
}

TEST(WishartAmbient, RejectsIndefiniteMatrices) {
  const WishartFamily fam{2, {3, 3}};
  HermitianMatrix bad = HermitianMatrix::identity(2);
  bad.set(1, 1, -1.0);
  const RealVector x = fam.layout().realify({bad, HermitianMatrix::identity(2)});
  const DiffusionModel m = wishart_ambient(fam);
  EXPECT_FALSE(m.contains(x));
  EXPECT_THROW(m.gamma(x), DomainError);
}

TEST(WishartAmbient, IsTheImageOfMatrixOrnsteinUhlenbeck) {
  Rng rng(11);
  for (const WishartFamily& fam : {WishartFamily{2, {2, 3}}, WishartFamily{3, {1, 2, 3}}}) {
    const DiffusionModel wish = wishart_ambient(fam);
    const ProjectionMap proj = wishart_extraction(fam);
    VerificationReport rep = check_identity(
        "wishart.extraction", matrix_ou_ambient(fam.d, fam.N()), proj,
        [&](const RealVector& y) { return wish.gamma(proj.eval(y)); },
        [&](const RealVector& y) { return wish.drift(proj.eval(y)); },
        [&](Rng& r) { return realify_general(complex_gaussian(fam.d, fam.N(), r)); }, 10, 1e-8, 1e-8, rng);
    expect_all_pass(rep);
  }
}

TEST(WishartDensity, ScalarCaseIsAProductOfGammaDensities) {
  const WishartFamily fam{1, {2, 3}};
  MatrixPoint w(2, HermitianMatrix(1));
  w[0].set(0, 0, 1.7);
  w[1].set(0, 0, 0.4);
  // Gamma(shape r, scale 2): x^{r-1} e^{-x/2} / (2^r Gamma(r)).
  auto gamma_log = [](double x, double r) { return (r - 1) * std::log(x) - x / 2 - r * std::log(2.0) - std::lgamma(r); };
  EXPECT_NEAR(wishart_log_density(fam, w), gamma_log(1.7, 2) + gamma_log(0.4, 3), 1e-13);
}

TEST(WishartDensity, IsReversibleForTheAmbient) {
  const WishartFamily fam{2, {3, 3}};
  const DiffusionModel m = wishart_ambient(fam);
  Rng rng(12);
  for (int s = 0; s < 20; ++s) {
    const RealVector x = fam.layout().realify(sample_wishart_family(fam, rng));
    const double r = reversibility_residual(
        m, std::function<RealVector(const RealVector&)>([&](const RealVector& y) { return wishart_grad_log_density(fam, y); }),
        x);
    EXPECT_LT(r, 1e-8);
    const double r_log = reversibility_residual(
        m, std::function<double(const RealVector&)>([&](const RealVector& y) {
          return wishart_log_density(fam, fam.layout().unrealify(y));
        }),
        x);
    EXPECT_LT(r_log, 1e-6);
  }
}

TEST(WishartDensity, NormalizersAreConsistentAcrossDegreesOfFreedom) {
  // E_r[rho_{r+1}(W) / rho_r(W)] = 1 under W ~ Wishart(d, r).
  Rng rng(13);
  const WishartFamily base{2, {3, 3}}, shifted{2, {4, 3}};
  std::vector<double> ratios;
  for (int s = 0; s < 200000; ++s) {
    const MatrixPoint w = sample_wishart_family(base, rng);
    ratios.push_back(std::exp(wishart_log_density(shifted, w) - wishart_log_density(base, w)));
  }
  EXPECT_NEAR(mean(ratios), 1.0, 4.0 * standard_error(ratios));
}

TEST(WishartDensity, TooFewDegreesOfFreedomAreNotIntegrable) {
  const WishartFamily fam{3, {2, 4}};
  MatrixPoint w{HermitianMatrix::identity(3), HermitianMatrix::identity(3)};
  EXPECT_THROW(wishart_log_density(fam, w), DomainError);
}

TEST(WishartSde, ZeroStepIsIdentity) {
  Rng rng(14);
  const HermitianMatrix w = sample_wishart(2, 3, rng);
  EXPECT_EQ(max_abs(ComplexMatrix(wishart_sde_step(w, -2.0, 12.0, 0.0, rng).matrix() - w.matrix())), 0.0);
  EXPECT_THROW(wishart_sde_step(w, -2.0, 12.0, -1.0, rng), InvalidArgument);
}

TEST(WishartSde, OneStepMomentsAtIdentity) {
  // alpha = -2, beta = 4 d_p: mean drift (4 d_p - 2) Id, Var(dW_11) = 2 Gamma(W_11, W_11) dt = 8 dt.
  Rng rng(15);
  const int dp = 3;
  const double dt = 1e-4;
  const HermitianMatrix id = HermitianMatrix::identity(2);
  std::vector<double> d11, d12re;
  for (int s = 0; s < 100000; ++s) {
    const HermitianMatrix w = wishart_sde_step(id, -2.0, 4.0 * dp, dt, rng);
    d11.push_back(w(0, 0).real() - 1.0);
    d12re.push_back(w(0, 1).real());
  }
  const double m = mean(d11);
  double var = 0.0;
  for (double x : d11) var += (x - m) * (x - m);
  var /= d11.size() - 1;
  EXPECT_NEAR(var / (8.0 * dt), 1.0, 0.05);
  EXPECT_NEAR(m, (4.0 * dp - 2.0) * dt, 3.0 * standard_error(d11));
  EXPECT_NEAR(mean(d12re), 0.0, 3.0 * standard_error(d12re));
}

TEST(WishartSde, LeavingTheConeIsRejected) {
  Rng rng(16);
  HermitianMatrix zero(2);
  EXPECT_THROW(wishart_sde_step(zero, 0.0, -1.0, 1e-3, rng, 5), StepRejectedError);
}

TEST(WishartSde, PathsStayPsd) {
  Rng rng(17);
  const WishartFamily fam{2, {2, 3}};
  MatrixPoint w = sample_wishart_family(fam, rng);
  for (int s = 0; s < 2000; ++s) {
    w = wishart_family_step(fam, w, 1e-2, rng);
    for (const auto& m : w) ASSERT_TRUE(is_psd(m, 0.0));
  }
}

TEST(SmzFrame, EqualBlocksGiveHalfIdentity) {
  Rng rng(18);
  const WishartFamily fam{2, {3, 3}};
  const HermitianMatrix w = sample_wishart(2, 3, rng);
  const SmzFrame f = build_smz(fam, {w, w});
  EXPECT_LT(max_abs(ComplexMatrix(f.M[0] - 0.5 * ComplexMatrix::Identity(2, 2))), 1e-12);
}

TEST(SmzFrame, BlocksSumToIdentity) {
  Rng rng(19);
  const WishartFamily fam{3, {3, 3, 4}};
  for (int s = 0; s < 10; ++s) {
    const SmzFrame f = build_smz(fam, sample_wishart_family(fam, rng));
    ComplexMatrix zs = ComplexMatrix::Zero(3, 3), ms = zs;
    for (int p = 0; p < 3; ++p) {
      zs += f.Z[p];
      ms += f.M[p];
    }
    EXPECT_LT(max_abs(ComplexMatrix(zs - ComplexMatrix::Identity(3, 3))), 1e-10);
    EXPECT_LT(max_abs(ComplexMatrix(ms - ComplexMatrix::Identity(3, 3))), 1e-10);
    EXPECT_TRUE(in_matrix_simplex(f.z_point()));
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(f.lambda(i) * f.lambda(i), hermitian_eigen(f.S).values(i), 1e-10);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(f.U(i, i).imag(), 0.0, 1e-14);
  }
}

TEST(SmzFrame, ScalarCaseIsTheRatio) {
  const WishartFamily fam{1, {2, 2}};
  MatrixPoint w(2, HermitianMatrix(1));
  w[0].set(0, 0, 3.0);
  w[1].set(0, 0, 1.0);
  const SmzFrame f = build_smz(fam, w);
  EXPECT_NEAR(f.Z[0](0, 0).real(), 0.75, 1e-15);
  EXPECT_NEAR(f.lambda(0), 2.0, 1e-15);
}

TEST(SmzFrame, DegenerateInputsAreReported) {
  const WishartFamily fam{2, {3, 3}};
  EXPECT_THROW(build_smz(fam, {HermitianMatrix(2), HermitianMatrix(2)}), NotPsdError);
  EXPECT_THROW(build_smz(fam, {HermitianMatrix::identity(2), HermitianMatrix::identity(2)}), SpectralGapError);
}

TEST(SmzClosedForms, HandValues) {
  RealVector lambda(2);
  lambda << 1.0, 2.0;
  const SmzFrame f4 = build_smz({2, {2, 2}}, diagonal_family(lambda, 2));
  EXPECT_NEAR(SmzClosedForms(f4).drift_lambda(0), 8.0 / 3.0, 1e-14);
  EXPECT_EQ(SmzClosedForms(f4).gamma_lambda(0, 0), 1.0);
  EXPECT_EQ(SmzClosedForms(f4).gamma_lambda(0, 1), 0.0);

  RealVector four(1);
  four << 2.0;
  const SmzFrame f1 = build_smz({1, {2, 2}}, diagonal_family(four, 2));
  EXPECT_NEAR(SmzClosedForms(f1).sqrt_derivative(0, 0, 0, 0).real(), 0.25, 1e-15);
}

TEST(SmzClosedForms, SqrtDerivativeMatchesFiniteDifferences) {
  Rng rng(20);
  for (const WishartFamily& fam : {WishartFamily{2, {2, 3}}, WishartFamily{3, {3, 3}}}) {
    for (int s = 0; s < 10; ++s) {
      const SmzFrame f = build_smz(fam, sample_separated_family(fam, rng), 0.0);
      EXPECT_LT(sqrt_derivative_fd_residual(f, rng), 1e-6);
    }
  }
}

TEST(SmzClosedForms, AllIdentitiesMatchThePushforward) {
  Rng rng(21);
  for (const WishartFamily& fam :
       {WishartFamily{2, {3, 3}}, WishartFamily{2, {2, 3, 2}}, WishartFamily{3, {3, 4}}, WishartFamily{3, {2, 3, 4}}}) {
    const VerificationReport rep = verify_smz_system(fam, 30, rng);
    EXPECT_EQ(rep.checks.size(), 23u);
    expect_all_pass(rep);
  }
}

TEST(SmzClosedForms, DecouplingFromTheSpectrum) {
  Rng rng(22);
  const VerificationReport rep = verify_smz_system({2, {3, 2}}, 10, rng);
  for (const char* id : {"wishart.M_lambda.gamma", "wishart.Z_lambda.gamma"}) {
    const CheckResult* c = rep.find(id);
    ASSERT_NE(c, nullptr);
    EXPECT_LT(c->max_abs_residual, 1e-6) << id;
  }
}

TEST(TheoremParams, HandValues) {
  RealVector lambda(2);
  lambda << 1.0, 2.0;
  const TheoremParams t = theorem_params(build_smz({2, {2, 2}}, diagonal_family(lambda, 2)));
  EXPECT_NEAR(t.model.A(0, 0).real(), 2.0, 1e-15);
  EXPECT_NEAR(t.model.A(1, 1).real(), 0.5, 1e-15);
  EXPECT_EQ(t.model.A(0, 1), cplx(0.0));
  EXPECT_NEAR(t.model.B(0 * 2 + 1, 0 * 2 + 1).real(), 10.0 / 9.0, 1e-14);
  EXPECT_NEAR(t.model.B(0, 0).real(), 1.0, 1e-15);
  EXPECT_EQ(t.model.B(0 * 2 + 1, 1 * 2 + 0), cplx(0.0));
  EXPECT_NEAR(t.model.a(0), 1.0, 0.0);

  const TheoremParams t6 = theorem_params(build_smz({2, {3, 3}}, diagonal_family(lambda, 2)));
  EXPECT_NEAR(t6.radial_drift(0), 9.0 - 1.0 - 4.0 / 3.0, 1e-14);
  EXPECT_NO_THROW(t6.model.validate());
}

TEST(TheoremParams, ScalarReduction) {
  RealVector lambda(1);
  lambda << 1.5;
  const TheoremParams t = theorem_params(build_smz({1, {2, 3}}, diagonal_family(lambda, 2)));
  EXPECT_NEAR(t.model.A(0, 0).real(), 2.0 / 2.25, 1e-15);
  EXPECT_NEAR(t.model.B(0, 0).real(), 1.0 / 2.25, 1e-15);
}

TEST(TheoremParams, ModelTwoEqualsTheClosedForms) {
  Rng rng(23);
  for (const WishartFamily& fam : {WishartFamily{2, {3, 3}}, WishartFamily{3, {2, 3, 4}}}) {
    for (int s = 0; s < 10; ++s) {
      const SmzFrame f = build_smz(fam, sample_separated_family(fam, rng), 0.0);
      const TheoremParams t = theorem_params(f);
      ASSERT_NO_THROW(t.model.validate());
      const SmzClosedForms cf(f);
      MatrixPoint full;
      for (const auto& z : f.Z) full.push_back(HermitianMatrix::symmetrize(z));
      const int d = fam.d, m = fam.blocks();
      for (int p = 0; p < m; ++p)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            EXPECT_LT(std::abs(model2_drift(t.model, full, p, i, j) - cf.drift_Z(p, i, j)), 1e-10);
            for (int q = 0; q < m; ++q)
              for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l)
                  EXPECT_LT(std::abs(model2_gamma(t.model, full, p, i, j, q, k, l) - cf.gamma_Z_Z(p, i, j, q, k, l)),
                            1e-10);
          }
    }
  }
}

TEST(TheoremParams, ImageMatchesThePushforward) {
  Rng rng(24);
  for (const WishartFamily& fam : {WishartFamily{2, {3, 3}}, WishartFamily{2, {2, 2, 3}}, WishartFamily{3, {3, 4}}})
    expect_all_pass(verify_theorem_image(fam, 10, rng));
}

TEST(SmOperator, ScalarCrossTermVanishes) {
  Rng rng(25);
  const WishartFamily fam{1, {2, 3}};
  const SmzFrame f = build_smz(fam, sample_wishart_family(fam, rng));
  EXPECT_EQ(SmzClosedForms(f).gamma_M_S(0, 0, 0, 0, 0), cplx(0.0));
}

TEST(SmOperator, MatchesThePushforwardAndCouplesSAndM) {
  Rng rng(26);
  for (const WishartFamily& fam : {WishartFamily{2, {3, 3}}, WishartFamily{2, {2, 3, 2}}}) {
    const DiffusionModel ambient = wishart_ambient(fam);
    const ProjectionMap proj = sm_projection(fam);
    const HermitianLayout layout = fam.layout();
    const int s_dim = fam.d * fam.d;
    for (int s = 0; s < 10; ++s) {
      const MatrixPoint w = sample_separated_family(fam, rng);
      const SmzFrame f = build_smz(fam, w, 0.0);
      const Pushforward expected = sm_operator(f);
      const Pushforward p = pushforward(ambient, proj, layout.realify(w));
      EXPECT_LT(max_abs(RealMatrix(expected.gamma - p.gamma)), 1e-6);
      EXPECT_LT((expected.drift - p.drift).cwiseAbs().maxCoeff(), 1e-4);
      const double cross = expected.gamma.topRightCorner(s_dim, expected.gamma.cols() - s_dim).norm();
      EXPECT_GT(cross, 1e-3);

      // The S block is the Wishart co-metric of the sum.
      const SmzClosedForms cf(f);
      RealMatrix gs;
      RealVector unused;
      HermitianLayout(1, fam.d).realify_operator(
          [&](int, int i, int j, int, int k, int l) { return cf.gamma_S(i, j, k, l); },
          [](int, int, int) { return cplx(0.0); }, gs, unused);
      EXPECT_LT(max_abs(RealMatrix(gs - expected.gamma.topLeftCorner(s_dim, s_dim))), 1e-12);
    }
  }
}

TEST(SmOperator, MBlockIsModelTwoWithSpectralB) {
  Rng rng(27);
  const WishartFamily fam{2, {3, 2, 4}};
  for (int s = 0; s < 10; ++s) {
    const SmzFrame f = build_smz(fam, sample_separated_family(fam, rng), 0.0);
    const ModelIIParams prm = m_block_params(f);
    ASSERT_NO_THROW(prm.validate());
    const SmzClosedForms cf(f);
    MatrixPoint full;
    for (const auto& m : f.M) full.push_back(HermitianMatrix::symmetrize(m));
    for (int p = 0; p < 3; ++p)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          EXPECT_LT(std::abs(model2_drift(prm, full, p, i, j) - cf.drift_M(p, i, j)), 1e-10);
          for (int q = 0; q < 3; ++q)
            for (int k = 0; k < 2; ++k)
              for (int l = 0; l < 2; ++l)
                EXPECT_LT(std::abs(model2_gamma(prm, full, p, i, j, q, k, l) - cf.gamma_M_M(p, i, j, q, k, l)), 1e-10);
        }
  }
}

TEST(DirectSampler, ScalarCaseIsBeta) {
  Rng rng(28);
  const WishartFamily fam{1, {2, 2}};
  std::vector<double> xs;
  for (int s = 0; s < 100000; ++s) xs.push_back(sample_matrix_dirichlet_direct(fam, rng)[0](0, 0).real());
  EXPECT_NEAR(mean(xs), 0.5, 3.0 * standard_error(xs));
  std::vector<double> sq;
  for (double x : xs) sq.push_back(x * x);
  // Beta(2, 2): E[x^2] = 3/10.
  EXPECT_NEAR(mean(sq), 0.3, 3.0 * standard_error(sq));
}

TEST(DirectSampler, SymmetricDimensionsGiveHalfIdentityMean) {
  Rng rng(29);
  const WishartFamily fam{2, {3, 3}};
  std::vector<double> z11, z22, z12re, z12im;
  for (int s = 0; s < 40000; ++s) {
    const MatrixPoint z = sample_matrix_dirichlet_direct(fam, rng);
    ASSERT_TRUE(in_matrix_simplex(z));
    z11.push_back(z[0](0, 0).real());
    z22.push_back(z[0](1, 1).real());
    z12re.push_back(z[0](0, 1).real());
    z12im.push_back(z[0](0, 1).imag());
  }
  EXPECT_NEAR(mean(z11), 0.5, 3.0 * standard_error(z11));
  EXPECT_NEAR(mean(z22), 0.5, 3.0 * standard_error(z22));
  EXPECT_NEAR(mean(z12re), 0.0, 3.0 * standard_error(z12re));
  EXPECT_NEAR(mean(z12im), 0.0, 3.0 * standard_error(z12im));
}

TEST(DirectSampler, AgreesWithHaarExtraction) {
  // Both laws are matrix Dirichlet with a_p = d_p - d + 1; compare E[tr Z^2] and E[det Z].
  Rng rng(30);
  const WishartFamily fam{2, {3, 3}};
  const Extraction ext{2, {3, 3}};
  std::vector<double> tr_direct, tr_haar, det_direct, det_haar;
  for (int s = 0; s < 20000; ++s) {
    const ComplexMatrix a = sample_matrix_dirichlet_direct(fam, rng)[0].matrix();
    const ComplexMatrix b = extract_Z(sun_haar(6, rng), ext)[0].matrix();
    tr_direct.push_back((a * a).trace().real());
    tr_haar.push_back((b * b).trace().real());
    det_direct.push_back(a.determinant().real());
    det_haar.push_back(b.determinant().real());
  }
  const double se_tr = std::hypot(standard_error(tr_direct), standard_error(tr_haar));
  const double se_det = std::hypot(standard_error(det_direct), standard_error(det_haar));
  EXPECT_NEAR(mean(tr_direct), mean(tr_haar), 3.0 * se_tr);
  EXPECT_NEAR(mean(det_direct), mean(det_haar), 3.0 * se_det);
}
