#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mdp/calculus.hpp"
#include "mdp/coords.hpp"
#include "mdp/linalg.hpp"

namespace mdp {

// A point of the matrix simplex: Z^1..Z^n Hermitian d x d with Z^k > 0 and
// Z^{n+1} = Id - sum Z^k > 0. Blocks are indexed 0..n with block n implicit.
using MatrixPoint = std::vector<HermitianMatrix>;

inline MatrixPoint complete_simplex(const MatrixPoint& z) {
  const int d = z.at(0).dim();
  MatrixPoint full = z;
  HermitianMatrix last = HermitianMatrix::identity(d);
  for (const auto& m : z) last = last - m;
  full.push_back(last);
  return full;
}

inline bool is_positive_definite(const HermitianMatrix& h) {
  Eigen::LLT<ComplexMatrix> llt(h.matrix());
  return llt.info() == Eigen::Success;
}

inline bool in_matrix_simplex(const MatrixPoint& z) {
  for (const auto& m : complete_simplex(z))
    if (!is_positive_definite(m)) return false;
  return true;
}

inline double min_eigenvalue(const HermitianMatrix& h) {
  return Eigen::SelfAdjointEigenSolver<ComplexMatrix>(h.matrix(), Eigen::EigenvaluesOnly).eigenvalues()(0);
}

// ---------------------------------------------------------------------------
// Model I: (n+1) x (n+1) real symmetric coupling A, parameters a_1..a_{n+1}.

struct ModelIParams {
  int n = 1;
  int d = 1;
  RealMatrix A;
  RealVector a;

  void validate() const {
    if (n < 1 || d < 1) throw InvalidArgument("model I: need n >= 1 and d >= 1");
    if (A.rows() != n + 1 || A.cols() != n + 1) throw InvalidArgument("model I: A must be (n+1)x(n+1)");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw InvalidArgument("model I: A must be symmetric");
    if (a.size() != n + 1) throw InvalidArgument("model I: a must have n+1 entries");
  }

  // Non-positive a_i has no normalisable reversible density.
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    for (int i = 0; i < a.size(); ++i)
      if (a(i) <= 0.0) w.push_back("a_" + std::to_string(i + 1) + " <= 0: reversible measure is not a finite Dirichlet law");
    return w;
  }
};

// Gamma(Z^p_ij, Z^q_kl) = delta_pq sum_s A_sp (Z^s_il Z^p_kj + Z^s_kj Z^p_il)
//                         - A_pq (Z^q_il Z^p_kj + Z^p_il Z^q_kj), s up to n+1.
inline cplx model1_gamma(const ModelIParams& prm, const MatrixPoint& full, int p, int i, int j, int q, int k,
                         int l) {
  cplx g = -prm.A(p, q) * (full[q](i, l) * full[p](k, j) + full[p](i, l) * full[q](k, j));
  if (p == q)
    for (int s = 0; s <= prm.n; ++s)
      g += prm.A(s, p) * (full[s](i, l) * full[p](k, j) + full[s](k, j) * full[p](i, l));
  return g;
}

// L(Z^p_ij) = sum_q 2 (a_p + d - 1) A_pq Z^q_ij - sum_q 2 (a_q + d - 1) A_pq Z^p_ij.
inline cplx model1_drift(const ModelIParams& prm, const MatrixPoint& full, int p, int i, int j) {
  cplx l = 0.0;
  for (int q = 0; q <= prm.n; ++q)
    l += 2.0 * prm.A(p, q) * ((prm.a(p) + prm.d - 1) * full[q](i, j) - (prm.a(q) + prm.d - 1) * full[p](i, j));
  return l;
}

// Boundary equation for Z^q: Gamma(log det Z^q, Z^p_ij)
//   = delta_pq sum_s 2 A_sp Z^s_ij - 2 A_pq Z^p_ij  (q = n+1 included, where delta vanishes).
inline cplx model1_boundary(const ModelIParams& prm, const MatrixPoint& full, int q, int p, int i, int j) {
  cplx v = -2.0 * prm.A(p, q) * full[p](i, j);
  if (p == q)
    for (int s = 0; s <= prm.n; ++s) v += 2.0 * prm.A(s, p) * full[s](i, j);
  return v;
}

// ---------------------------------------------------------------------------
// Model II: Hermitian positive A (d x d) and B (d^2 x d^2, index (i,a) -> i*d + a).

struct ModelIIParams {
  int n = 1;
  int d = 1;
  ComplexMatrix A;
  ComplexMatrix B;
  RealVector a;

  cplx b(int i, int a_, int l, int b_) const { return B(i * d + a_, l * d + b_); }

  void validate() const {
    if (n < 1 || d < 1) throw InvalidArgument("model II: need n >= 1 and d >= 1");
    if (A.rows() != d || A.cols() != d) throw InvalidArgument("model II: A must be d x d");
    if (B.rows() != d * d || B.cols() != d * d) throw InvalidArgument("model II: B must be d^2 x d^2");
    if ((A - A.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw InvalidArgument("model II: A must be Hermitian");
    if ((B - B.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw InvalidArgument("model II: B must be Hermitian");
    if ((B - reversed(B, d)).cwiseAbs().maxCoeff() > 1e-12)
      throw InvalidArgument("model II: B must satisfy B_{ij,kl} = B_{lk,ji} (see symmetrize_b)");
    if (Eigen::SelfAdjointEigenSolver<ComplexMatrix>(A, Eigen::EigenvaluesOnly).eigenvalues()(0) <= 0.0)
      throw InvalidArgument("model II: A must be positive definite");
    if (Eigen::SelfAdjointEigenSolver<ComplexMatrix>(B, Eigen::EigenvaluesOnly).eigenvalues()(0) < -1e-12)
      throw InvalidArgument("model II: B must be positive semidefinite");
    if (a.size() != n + 1) throw InvalidArgument("model II: a must have n+1 entries");
  }

  // (R B)_{ij,kl} = B_{lk,ji}. Without R B = B the co-metric is neither symmetric
  // nor compatible with Hermitian conjugation.
  static ComplexMatrix reversed(const ComplexMatrix& B, int d) {
    ComplexMatrix r(B.rows(), B.cols());
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l) r(i * d + j, k * d + l) = B(l * d + k, j * d + i);
    return r;
  }

  // Projection onto admissible B; keeps Hermitian positive (semi)definite input so.
  static ComplexMatrix symmetrize_b(const ComplexMatrix& B, int d) { return 0.5 * (B + reversed(B, d)); }
};

inline cplx model2_gamma(const ModelIIParams& prm, const MatrixPoint& full, int p, int i, int j, int q, int k,
                         int l) {
  const int d = prm.d;
  const ComplexMatrix& zp = full[p].matrix();
  const ComplexMatrix& zq = full[q].matrix();
  const ComplexMatrix& A = prm.A;
  cplx g = 0.0;
  if (p == q) g += A(i, l) * zp(k, j) + A(k, j) * zp(i, l);
  cplx zpzq_il = 0.0, zqzp_kj = 0.0;
  for (int s = 0; s < d; ++s) {
    zpzq_il += zp(i, s) * zq(s, l);
    zqzp_kj += zq(k, s) * zp(s, j);
  }
  g -= A(k, j) * zpzq_il + A(i, l) * zqzp_kj;
  for (int a_ = 0; a_ < d; ++a_)
    for (int b_ = 0; b_ < d; ++b_)
      g += prm.b(i, a_, l, b_) * zp(a_, j) * zq(k, b_) + prm.b(a_, j, b_, k) * zp(i, a_) * zq(b_, l) -
           prm.b(a_, j, l, b_) * zp(i, a_) * zq(k, b_) - prm.b(i, a_, b_, k) * zp(a_, j) * zq(b_, l);
  return g;
}

inline cplx model2_drift(const ModelIIParams& prm, const MatrixPoint& full, int p, int i, int j) {
  const int d = prm.d, n = prm.n;
  const ComplexMatrix& zp = full[p].matrix();
  const ComplexMatrix& A = prm.A;
  double weight = prm.a(n) - 1.0;
  for (int q = 0; q < n; ++q) weight += prm.a(q) - 1.0 + d;
  cplx sym = 0.0;
  for (int s = 0; s < d; ++s) sym += A(i, s) * zp(s, j) + zp(i, s) * A(s, j);
  cplx l = 2.0 * (prm.a(p) - 1.0 + d) * A(i, j) - weight * sym - 2.0 * A(i, j) * zp.trace();
  for (int a_ = 0; a_ < d; ++a_)
    for (int b_ = 0; b_ < d; ++b_)
      l += prm.b(i, a_, j, b_) * zp(a_, b_) + prm.b(b_, j, a_, i) * zp(a_, b_) - prm.b(i, a_, b_, a_) * zp(b_, j) -
           prm.b(b_, j, b_, a_) * zp(i, a_);
  return l;
}

// Gamma(log det Z^q, Z^p_ij) = 2 A_ij delta_pq - (A Z^p)_ij - (Z^p A)_ij.
inline cplx model2_boundary(const ModelIIParams& prm, const MatrixPoint& full, int q, int p, int i, int j) {
  const ComplexMatrix& zp = full[p].matrix();
  cplx v = (p == q) ? 2.0 * prm.A(i, j) : cplx(0.0);
  for (int s = 0; s < prm.d; ++s) v -= prm.A(i, s) * zp(s, j) + zp(i, s) * prm.A(s, j);
  return v;
}

// ---------------------------------------------------------------------------
// Realified models

template <class GammaFn, class DriftFn>
DiffusionModel make_matrix_model(int n, int d, GammaFn gamma, DriftFn drift) {
  const HermitianLayout layout(n, d);
  auto g = [layout, gamma](const RealVector& x) {
    const MatrixPoint full = complete_simplex(layout.unrealify(x));
    RealMatrix out;
    RealVector unused;
    layout.realify_operator(
        [&](int p, int i, int j, int q, int k, int l) { return gamma(full, p, i, j, q, k, l); },
        [](int, int, int) { return cplx(0.0); }, out, unused);
    return out;
  };
  auto b = [layout, drift](const RealVector& x) {
    const MatrixPoint full = complete_simplex(layout.unrealify(x));
    RealVector out(layout.dim());
    for (int a = 0; a < layout.dim(); ++a) {
      const auto& c = layout.coord(a);
      const cplx v = drift(full, c.block, c.i, c.j);
      out(a) = c.imaginary ? v.imag() : v.real();
    }
    return out;
  };
  return {layout.dim(), g, b, [layout](const RealVector& x) { return in_matrix_simplex(layout.unrealify(x)); }};
}

inline DiffusionModel make_model1(const ModelIParams& prm) {
  prm.validate();
  return make_matrix_model(
      prm.n, prm.d,
      [prm](const MatrixPoint& f, int p, int i, int j, int q, int k, int l) { return model1_gamma(prm, f, p, i, j, q, k, l); },
      [prm](const MatrixPoint& f, int p, int i, int j) { return model1_drift(prm, f, p, i, j); });
}

inline DiffusionModel make_model2(const ModelIIParams& prm) {
  prm.validate();
  return make_matrix_model(
      prm.n, prm.d,
      [prm](const MatrixPoint& f, int p, int i, int j, int q, int k, int l) { return model2_gamma(prm, f, p, i, j, q, k, l); },
      [prm](const MatrixPoint& f, int p, int i, int j) { return model2_drift(prm, f, p, i, j); });
}

// ---------------------------------------------------------------------------
// Matrix Dirichlet law
//   C prod_k det(Z^k)^{a_k - 1} det(Id - sum Z)^{a_{n+1} - 1},
//   Gamma_d(a) = pi^{d(d-1)/2} prod_{i=1}^d Gamma(a + d - i),
//   C = Gamma_d(sum a + n(d - 1)) / prod Gamma_d(a_i).
// The n(d - 1) shift is what makes the law a probability measure for
// Lebesgue measure on (diagonal, Re, Im) coordinates; it vanishes for d = 1.

inline double log_matrix_gamma(int d, double a) {
  double s = 0.5 * d * (d - 1) * std::log(M_PI);
  for (int i = 1; i <= d; ++i) s += std::lgamma(a + d - i);
  return s;
}

inline double log_det_pd(const HermitianMatrix& h) {
  Eigen::LLT<ComplexMatrix> llt(h.matrix());
  if (llt.info() != Eigen::Success) throw DomainError("matrix Dirichlet: block is not positive definite");
  double s = 0.0;
  for (int i = 0; i < h.dim(); ++i) s += 2.0 * std::log(llt.matrixL()(i, i).real());
  return s;
}

inline double matrix_dirichlet_log_density(const RealVector& a, const MatrixPoint& z) {
  const MatrixPoint full = complete_simplex(z);
  if (a.size() != static_cast<int>(full.size())) throw InvalidArgument("matrix Dirichlet: need n+1 parameters");
  const int d = z.at(0).dim();
  const int n = static_cast<int>(z.size());
  double s = log_matrix_gamma(d, a.sum() + n * (d - 1));
  for (int k = 0; k < a.size(); ++k) s += (a(k) - 1.0) * log_det_pd(full[k]) - log_matrix_gamma(d, a(k));
  return s;
}

// Gradient in realified coordinates of sum_k c_k log det Z^k, k up to n+1.
inline RealVector weighted_logdet_gradient(const HermitianLayout& layout, const MatrixPoint& full,
                                           const RealVector& weights) {
  const int n = layout.blocks();
  std::vector<ComplexMatrix> inv;
  for (const auto& m : full) inv.push_back(m.matrix().inverse());
  RealVector g(layout.dim());
  for (int a = 0; a < layout.dim(); ++a) {
    const auto& c = layout.coord(a);
    const cplx w = weights(c.block) * inv[c.block](c.i, c.j) - weights(n) * inv[n](c.i, c.j);
    if (c.i == c.j) g(a) = w.real();
    else g(a) = c.imaginary ? 2.0 * w.imag() : 2.0 * w.real();
  }
  return g;
}

inline RealVector matrix_dirichlet_grad_log_density(const HermitianLayout& layout, const RealVector& a,
                                                    const RealVector& x) {
  return weighted_logdet_gradient(layout, complete_simplex(layout.unrealify(x)), (a.array() - 1.0).matrix());
}

// Gradient of log det Z^q in realified coordinates, q up to n+1.
inline RealVector logdet_gradient(const HermitianLayout& layout, const RealVector& x, int q) {
  RealVector w = RealVector::Zero(layout.blocks() + 1);
  w(q) = 1.0;
  return weighted_logdet_gradient(layout, complete_simplex(layout.unrealify(x)), w);
}

// Interior point: normalised independent complex Wisharts with d+1 degrees of
// freedom, rejected until every block has smallest eigenvalue above `margin`.
inline MatrixPoint sample_matrix_simplex(int n, int d, Rng& rng, double margin = 0.02) {
  for (;;) {
    std::vector<ComplexMatrix> w;
    ComplexMatrix s = ComplexMatrix::Zero(d, d);
    for (int k = 0; k <= n; ++k) {
      const ComplexMatrix g = complex_gaussian(d, d + 1, rng);
      w.push_back(g * g.adjoint());
      s += w.back();
    }
    const ComplexMatrix r = inverse_sqrtm_pd(HermitianMatrix::symmetrize(s)).matrix();
    MatrixPoint z;
    for (int k = 0; k < n; ++k) z.push_back(HermitianMatrix::symmetrize(r * w[k] * r));
    bool ok = true;
    for (const auto& m : complete_simplex(z)) ok = ok && min_eigenvalue(m) > margin;
    if (ok) return z;
  }
}

// ---------------------------------------------------------------------------
// Structure

struct EllipticityResult {
  bool structural = false;    // off-diagonal A >= 0 and the coupling graph is connected
  double min_eigenvalue = 0;  // smallest eigenvalue of the realified co-metric over the samples
  RealVector witness;         // null direction when not elliptic
  double witness_value = 0;   // witness^T Gamma witness at the first sample
  std::string reason;
};

// Model I is elliptic iff A is non-negative off the diagonal and irreducible on {1..n+1}.
inline EllipticityResult ellipticity_check(const ModelIParams& prm, const std::vector<MatrixPoint>& samples) {
  const int m = prm.n + 1;
  EllipticityResult res;
  bool negative = false;
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q)
      if (p != q && prm.A(p, q) < 0.0) negative = true;

  // Component of block n+1 in the graph with edges A_pq > 0.
  std::vector<int> reach(m, 0);
  std::vector<int> stack{m - 1};
  reach[m - 1] = 1;
  while (!stack.empty()) {
    const int p = stack.back();
    stack.pop_back();
    for (int q = 0; q < m; ++q)
      if (!reach[q] && q != p && prm.A(p, q) > 0.0) {
        reach[q] = 1;
        stack.push_back(q);
      }
  }
  bool connected = true;
  for (int p = 0; p < m; ++p) connected = connected && reach[p];
  res.structural = !negative && connected;
  res.reason = negative ? "negative coupling" : (connected ? "irreducible" : "reducible coupling");

  const DiffusionModel model = make_model1(prm);
  const HermitianLayout layout(prm.n, prm.d);
  res.min_eigenvalue = std::numeric_limits<double>::infinity();
  RealVector weakest;
  for (const auto& z : samples) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(model.gamma(layout.realify(z)));
    if (es.eigenvalues()(0) < res.min_eigenvalue) {
      res.min_eigenvalue = es.eigenvalues()(0);
      weakest = es.eigenvectors().col(0);
    }
  }
  if (res.structural || samples.empty()) return res;

  if (!connected && !negative) {
    // Identity matrix on every block outside the component of n+1.
    res.witness = RealVector::Zero(layout.dim());
    for (int a = 0; a < layout.dim(); ++a) {
      const auto& c = layout.coord(a);
      if (c.i == c.j && !reach[c.block]) res.witness(a) = 1.0;
    }
    res.witness.normalize();
  } else {
    res.witness = weakest;
  }
  res.witness_value = res.witness.dot(model.gamma(layout.realify(samples.front())) * res.witness);
  return res;
}

// Spectrum of Id_{nd} - (Z^{-1/2} Y)(Z^{-1/2} Y)* with Z = diag(Z^1..Z^n) and Y the
// column of blocks Z^k; equals {1 with multiplicity (n-1)d} and the spectrum of Z^{n+1}.
inline RealVector sylvester_spectrum(const MatrixPoint& z) {
  const int n = static_cast<int>(z.size()), d = z[0].dim();
  ComplexMatrix col(n * d, d);
  for (int k = 0; k < n; ++k) col.middleRows(k * d, d) = sqrtm_psd(z[k]).matrix();
  const ComplexMatrix k = ComplexMatrix::Identity(n * d, n * d) - col * col.adjoint();
  return hermitian_eigen(HermitianMatrix::symmetrize(k), 0.0).values;
}

inline RealVector sylvester_expected(const MatrixPoint& z) {
  const int n = static_cast<int>(z.size()), d = z[0].dim();
  RealVector v(n * d);
  v.head(d) = hermitian_eigen(complete_simplex(z).back(), 0.0).values;
  v.tail((n - 1) * d).setOnes();
  std::sort(v.data(), v.data() + v.size());
  return v;
}

}  // namespace mdp
