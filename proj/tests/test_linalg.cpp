#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "mdp/linalg.hpp"

using namespace mdp;

namespace {

HermitianMatrix from_rows(std::initializer_list<std::initializer_list<cplx>> rows) {
  const int d = static_cast<int>(rows.size());
  ComplexMatrix m(d, d);
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (cplx v : r) m(i, j++) = v;
    ++i;
  }
  return HermitianMatrix::from_lower(m);
}

HermitianMatrix random_psd(int d, Rng& rng) {
  ComplexMatrix g = complex_gaussian(d, d + 1, rng);
  return HermitianMatrix::symmetrize(g * g.adjoint());
}

}  // namespace

TEST(HermitianMatrix, MirrorsWritesAndKeepsDiagonalReal) {
  HermitianMatrix h(3);
  h.set(2, 0, cplx(1.0, 2.0));
  h.set(1, 1, cplx(3.0, 5.0));
  EXPECT_EQ(h(0, 2), cplx(1.0, -2.0));
  EXPECT_EQ(h(1, 1), cplx(3.0, 0.0));
  EXPECT_EQ((h.matrix() - h.matrix().adjoint()).norm(), 0.0);
}

TEST(HermitianEigen, DiagonalInputIsSortedWithPermutationFrame) {
  const EigenFrame f = hermitian_eigen(from_rows({{2.0, 0.0}, {0.0, 1.0}}));
  EXPECT_DOUBLE_EQ(f.values(0), 1.0);
  EXPECT_DOUBLE_EQ(f.values(1), 2.0);
  ComplexMatrix expected(2, 2);
  expected << 0.0, 1.0, 1.0, 0.0;
  EXPECT_LT((f.vectors - expected).norm(), 1e-15);
}

TEST(HermitianEigen, ComplexTwoByTwo) {
  const cplx i1(0.0, 1.0);
  const EigenFrame f = hermitian_eigen(from_rows({{2.0, i1}, {-i1, 2.0}}));
  EXPECT_NEAR(f.values(0), 1.0, 1e-14);
  EXPECT_NEAR(f.values(1), 3.0, 1e-14);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(f.vectors(k, k).imag(), 0.0);
    EXPECT_GE(f.vectors(k, k).real(), 0.0);
  }
}

TEST(HermitianEigen, RepeatedEigenvalueIsAGapError) {
  EXPECT_THROW(hermitian_eigen(HermitianMatrix::identity(3)), SpectralGapError);
  EXPECT_NO_THROW(hermitian_eigen(HermitianMatrix::identity(3), 0.0));
}

TEST(HermitianEigen, RandomMatricesSatisfyFrameInvariants) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + trial % 8;
    const HermitianMatrix h = random_hermitian(d, rng);
    const EigenFrame f = hermitian_eigen(h, 0.0);
    const double scale = std::max(1.0, h.matrix().norm());
    EXPECT_LT((reconstruct(f) - h.matrix()).norm(), 1e-10 * scale);
    EXPECT_LT((f.vectors.adjoint() * f.vectors - ComplexMatrix::Identity(d, d)).norm(), 1e-12);
    for (int k = 0; k + 1 < d; ++k) EXPECT_LE(f.values(k), f.values(k + 1));
    for (int k = 0; k < d; ++k) {
      EXPECT_EQ(f.vectors(k, k).imag(), 0.0);
      EXPECT_GE(f.vectors(k, k).real(), 0.0);
    }
    // Independent reference for the spectrum.
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> ref(h.matrix());
    EXPECT_LT((ref.eigenvalues() - f.values).cwiseAbs().maxCoeff(), 1e-12 * scale);
  }
}

TEST(HermitianEigen, BitIdenticalAcrossCalls) {
  Rng rng(3);
  const HermitianMatrix h = random_hermitian(5, rng);
  const EigenFrame a = hermitian_eigen(h), b = hermitian_eigen(h);
  EXPECT_TRUE(a.values == b.values);
  EXPECT_TRUE(a.vectors == b.vectors);
}

TEST(HermitianEigen, TinyDiagonalEntryFallsBackToLargestModulus) {
  // Eigenvectors of [[0,1],[1,0]] rotated so that U_00 of the top vector is zero.
  ComplexMatrix u(2, 2);
  u << 1.0, 0.0, 0.0, cplx(0.0, 1.0);
  ComplexMatrix v = u;
  phase_fix_columns(v);
  EXPECT_EQ(v(1, 1), cplx(1.0, 0.0));
  ComplexMatrix w(2, 2);
  w << 1.0, cplx(0.0, 1.0), 0.0, 0.0;
  phase_fix_columns(w);
  EXPECT_EQ(w(0, 1), cplx(1.0, 0.0));
}

TEST(HermitianEigen, AnchoredGaugeAgreesAtTheAnchor) {
  Rng rng(5);
  const EigenFrame f = hermitian_eigen(random_hermitian(4, rng));
  ComplexMatrix u = f.vectors;
  anchor_phases(u, f.vectors);
  EXPECT_LT((u - f.vectors).norm(), 1e-15);
}

TEST(SqrtmPsd, DiagonalAndRandom) {
  const HermitianMatrix r = sqrtm_psd(from_rows({{4.0, 0.0}, {0.0, 9.0}}));
  EXPECT_NEAR(r(0, 0).real(), 2.0, 1e-15);
  EXPECT_NEAR(r(1, 1).real(), 3.0, 1e-15);
  Rng rng(8);
  for (int d = 1; d <= 6; ++d) {
    const HermitianMatrix s = random_psd(d, rng);
    const HermitianMatrix q = sqrtm_psd(s);
    EXPECT_LT((q.matrix() * q.matrix() - s.matrix()).norm(), 1e-12 * s.matrix().norm());
    const HermitianMatrix qi = inverse_sqrtm_pd(s);
    EXPECT_LT((qi.matrix() * q.matrix() - ComplexMatrix::Identity(d, d)).norm(), 1e-10);
  }
}

TEST(SqrtmPsd, NegativeEigenvalueThrows) {
  EXPECT_THROW(sqrtm_psd(from_rows({{1.0, 0.0}, {0.0, -1.0}})), NotPsdError);
}

TEST(UnitaryRetract, PolarFactor) {
  ComplexMatrix m(2, 2);
  m << 2.0, 0.0, 0.0, 0.5;
  EXPECT_LT((unitary_retract(m) - ComplexMatrix::Identity(2, 2)).norm(), 1e-15);
  Rng rng(4);
  const ComplexMatrix g = complex_gaussian(4, 4, rng);
  const ComplexMatrix q = unitary_retract(g, true);
  EXPECT_LT((q.adjoint() * q - ComplexMatrix::Identity(4, 4)).norm(), 1e-13);
  EXPECT_LT(std::abs(q.determinant() - 1.0), 1e-13);
  // q^{-1} g is the Hermitian positive factor.
  const ComplexMatrix p = unitary_retract(g).adjoint() * g;
  EXPECT_LT((p - p.adjoint()).norm(), 1e-12);
  EXPECT_THROW(unitary_retract(ComplexMatrix::Zero(2, 2)), SingularError);
}

TEST(Expm, SkewHermitianMatchesSpectralExponential) {
  Rng rng(9);
  for (int d = 1; d <= 6; ++d) {
    const HermitianMatrix h = random_hermitian(d, rng);
    const ComplexMatrix e = expm(cplx(0.0, 3.0) * h.matrix());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h.matrix());
    ComplexVector ph(d);
    for (int k = 0; k < d; ++k) ph(k) = std::polar(1.0, 3.0 * es.eigenvalues()(k));
    const ComplexMatrix ref = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
    EXPECT_LT((e - ref).norm(), 1e-12);
    EXPECT_LT((e.adjoint() * e - ComplexMatrix::Identity(d, d)).norm(), 1e-13);
  }
}

TEST(HaarUnitary, IsUnitary) {
  Rng rng(2);
  const ComplexMatrix u = haar_unitary(6, rng);
  EXPECT_LT((u.adjoint() * u - ComplexMatrix::Identity(6, 6)).norm(), 1e-13);
}

TEST(Rng, SplitStreamsAreReproducibleAndDistinct) {
  Rng a(42), b(42);
  Rng ca = a.split(1), cb = b.split(1), cc = a.split(2);
  EXPECT_EQ(ca(), cb());
  EXPECT_NE(ca(), cc());
}
