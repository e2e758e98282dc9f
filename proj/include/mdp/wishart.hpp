#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "mdp/calculus.hpp"
#include "mdp/coords.hpp"
#include "mdp/linalg.hpp"
#include "mdp/matrix_simplex.hpp"

namespace mdp {

// n+1 independent d x d complex Wishart matrices, W^(p) with d_p degrees of freedom.
struct WishartFamily {
  int d = 1;
  std::vector<int> dims;

  int N() const { return std::accumulate(dims.begin(), dims.end(), 0); }
  int blocks() const { return static_cast<int>(dims.size()); }  // n + 1
  HermitianLayout layout() const { return HermitianLayout(blocks(), d); }

  // Exponents of the matrix Dirichlet image, d_p - d + 1.
  RealVector parameters() const {
    RealVector a(dims.size());
    for (size_t p = 0; p < dims.size(); ++p) a(p) = dims[p] - d + 1;
    return a;
  }

  void validate() const {
    if (d < 1) throw InvalidArgument("wishart: d must be >= 1");
    if (dims.size() < 2) throw InvalidArgument("wishart: need at least two matrices");
    for (int r : dims)
      if (r < 1) throw InvalidArgument("wishart: degrees of freedom must be >= 1");
    if (N() < d) throw InvalidArgument("wishart: need N >= d so that S is invertible");
  }
};

inline bool is_psd(const HermitianMatrix& h, double tol = 1e-12) {
  return min_eigenvalue(h) >= -tol * std::max(1.0, max_abs(h.matrix()));
}

inline void require_psd_blocks(const MatrixPoint& w) {
  for (const auto& m : w)
    if (!is_psd(m)) throw DomainError("wishart: matrix is not positive semidefinite");
}

// ---------------------------------------------------------------------------
// Ambient operator
//   Gamma(W^p_ij, W^q_kl) = 2 delta_pq (delta_jk W^p_il + delta_il W^p_kj)
//   L(W^p_ij) = 4 d_p delta_ij - 2 W^p_ij

inline cplx wishart_gamma(const MatrixPoint& w, int p, int i, int j, int q, int k, int l) {
  if (p != q) return 0.0;
  cplx g = 0.0;
  if (j == k) g += 2.0 * w[p](i, l);
  if (i == l) g += 2.0 * w[p](k, j);
  return g;
}

inline cplx wishart_drift(const WishartFamily& fam, const MatrixPoint& w, int p, int i, int j) {
  return (i == j ? 4.0 * fam.dims[p] : 0.0) - 2.0 * w[p](i, j);
}

inline DiffusionModel wishart_ambient(const WishartFamily& fam) {
  fam.validate();
  const HermitianLayout layout = fam.layout();
  auto g = [layout](const RealVector& x) {
    const MatrixPoint w = layout.unrealify(x);
    require_psd_blocks(w);
    RealMatrix out;
    RealVector unused;
    layout.realify_operator([&](int p, int i, int j, int q, int k, int l) { return wishart_gamma(w, p, i, j, q, k, l); },
                            [](int, int, int) { return cplx(0.0); }, out, unused);
    return out;
  };
  auto b = [layout, fam](const RealVector& x) {
    const MatrixPoint w = layout.unrealify(x);
    require_psd_blocks(w);
    RealVector out(layout.dim());
    for (int a = 0; a < layout.dim(); ++a) {
      const auto& c = layout.coord(a);
      const cplx v = wishart_drift(fam, w, c.block, c.i, c.j);
      out(a) = c.imaginary ? v.imag() : v.real();
    }
    return out;
  };
  auto in = [layout](const RealVector& x) {
    for (const auto& m : layout.unrealify(x))
      if (!is_psd(m)) return false;
    return true;
  };
  return {layout.dim(), g, b, in};
}

// Independent complex Ornstein-Uhlenbeck entries on a d x N matrix Y:
// Gamma(y, y') = 0, Gamma(y_ij, conj y_kl) = 2 delta_ik delta_jl, L y = -y.
inline DiffusionModel matrix_ou_ambient(int rows, int cols) {
  const int m = rows * cols;
  auto g = [rows, cols](const RealVector&) {
    RealMatrix out;
    RealVector unused;
    realify_general_operator(
        rows, cols, [](int, int, int, int) { return cplx(0.0); },
        [](int i, int j, int k, int l) { return cplx(i == k && j == l ? 2.0 : 0.0); },
        [](int, int) { return cplx(0.0); }, out, unused);
    return out;
  };
  return {2 * m, g, [](const RealVector& x) { return RealVector(-x); }, {}};
}

// Y -> (W^(p) = Y^(p) Y^(p)*) with Y^(p) the p-th column block.
inline MatrixPoint extract_wishart(const ComplexMatrix& y, const WishartFamily& fam) {
  MatrixPoint w;
  for (int p = 0, off = 0; p < fam.blocks(); off += fam.dims[p++]) {
    const auto yp = y.middleCols(off, fam.dims[p]);
    w.push_back(HermitianMatrix::symmetrize(yp * yp.adjoint()));
  }
  return w;
}

inline ProjectionMap wishart_extraction(const WishartFamily& fam) {
  const HermitianLayout layout = fam.layout();
  return {2 * fam.d * fam.N(), layout.dim(), [fam, layout](const RealVector& x) {
            return layout.realify(extract_wishart(unrealify_general(x, fam.d, fam.N()), fam));
          }};
}

// ---------------------------------------------------------------------------
// Reversible law: prod_p C_{d_p,d} det(W^p)^{d_p - d} exp(-tr W^p / 2),
// C_{r,d} = (2^{rd} pi^{d(d-1)/2} Gamma(r) Gamma(r-1) ... Gamma(r-d+1))^{-1}.

inline double wishart_log_normalizer(int r, int d) {
  if (r < d) throw DomainError("wishart: r < d is not integrable");
  double s = r * d * std::log(2.0) + 0.5 * d * (d - 1) * std::log(M_PI);
  for (int i = 0; i < d; ++i) s += std::lgamma(static_cast<double>(r - i));
  return -s;
}

inline double wishart_log_density(const WishartFamily& fam, const MatrixPoint& w) {
  fam.validate();
  if (static_cast<int>(w.size()) != fam.blocks()) throw InvalidArgument("wishart: wrong number of matrices");
  double s = 0.0;
  for (int p = 0; p < fam.blocks(); ++p) {
    const int r = fam.dims[p];
    s += wishart_log_normalizer(r, fam.d) + (r - fam.d) * log_det_pd(w[p]) - 0.5 * w[p].matrix().trace().real();
  }
  return s;
}

inline RealVector wishart_grad_log_density(const WishartFamily& fam, const RealVector& x) {
  const HermitianLayout layout = fam.layout();
  const MatrixPoint w = layout.unrealify(x);
  std::vector<ComplexMatrix> inv;
  for (const auto& m : w) {
    if (!is_positive_definite(m)) throw DomainError("wishart: matrix is not positive definite");
    inv.push_back(m.matrix().inverse());
  }
  RealVector g(layout.dim());
  for (int a = 0; a < layout.dim(); ++a) {
    const auto& c = layout.coord(a);
    const cplx v = static_cast<double>(fam.dims[c.block] - fam.d) * inv[c.block](c.i, c.j);
    if (c.i == c.j) g(a) = v.real() - 0.5;
    else g(a) = c.imaginary ? 2.0 * v.imag() : 2.0 * v.real();
  }
  return g;
}

// W = Y Y* with Y a d x r matrix of complex Gaussians, E|y|^2 = 2.
inline HermitianMatrix sample_wishart(int d, int r, Rng& rng) {
  const ComplexMatrix y = std::sqrt(2.0) * complex_gaussian(d, r, rng);
  return HermitianMatrix::symmetrize(y * y.adjoint());
}

inline MatrixPoint sample_wishart_family(const WishartFamily& fam, Rng& rng) {
  MatrixPoint w;
  for (int r : fam.dims) w.push_back(sample_wishart(fam.d, r, rng));
  return w;
}

// ---------------------------------------------------------------------------
// SDE dW = sqrt(W) dB + dB* sqrt(W) + (alpha W + beta Id) dt with E|dB_ij|^2 = 4 dt,
// so that the quadratic covariation is 2 Gamma dt. A step that leaves the psd cone
// is retried with half the step; accepted sub-steps are chained up to dt.

inline HermitianMatrix wishart_sde_step(const HermitianMatrix& w, double alpha, double beta, double dt, Rng& rng,
                                        int max_retries = 20) {
  if (dt < 0.0) throw InvalidArgument("wishart step: dt must be non-negative");
  if (!is_psd(w)) throw DomainError("wishart step: start point is not positive semidefinite");
  const int d = w.dim();
  HermitianMatrix cur = w;
  double remaining = dt, h = dt;
  int retries = 0;
  while (remaining > 0.0) {
    const double step = std::min(h, remaining);
    const ComplexMatrix root = sqrtm_psd(cur).matrix();
    const ComplexMatrix db = 2.0 * std::sqrt(step) * complex_gaussian(d, d, rng);
    const ComplexMatrix inc = root * db + db.adjoint() * root +
                              (alpha * cur.matrix() + beta * ComplexMatrix::Identity(d, d)) * step;
    const HermitianMatrix next = HermitianMatrix::symmetrize(cur.matrix() + inc);
    if (is_psd(next, 0.0)) {
      cur = next;
      remaining -= step;
      continue;
    }
    if (++retries > max_retries)
      throw StepRejectedError("wishart step: left the psd cone after " + std::to_string(max_retries) +
                              " halvings (proposed step " + std::to_string(step) + ")");
    h = 0.5 * step;
  }
  return cur;
}

// All matrices of the family advanced with alpha = -2, beta = 4 d_p.
inline MatrixPoint wishart_family_step(const WishartFamily& fam, const MatrixPoint& w, double dt, Rng& rng,
                                       int max_retries = 20) {
  MatrixPoint out;
  for (int p = 0; p < fam.blocks(); ++p)
    out.push_back(wishart_sde_step(w[p], -2.0, 4.0 * fam.dims[p], dt, rng, max_retries));
  return out;
}

// ---------------------------------------------------------------------------
// S = sum W^p = U D^2 U*, N = S^{1/2}, M^p = N^{-1} W^p N^{-1}, Z^p = U* M^p U.

struct SmzFrame {
  WishartFamily family;
  MatrixPoint W;          // n+1 blocks
  HermitianMatrix S;
  RealVector lambda;      // square roots of the eigenvalues of S, ascending
  ComplexMatrix U;
  ComplexMatrix Nroot, Ninv, Sinv;
  std::vector<ComplexMatrix> M, Z;  // n+1 blocks each, summing to Id
  std::vector<ComplexMatrix> V;     // V^(r) = U_r U_r*

  int d() const { return family.d; }
  int n() const { return family.blocks() - 1; }

  // The first n blocks as points of the matrix simplex.
  MatrixPoint m_point() const {
    MatrixPoint out;
    for (int p = 0; p < n(); ++p) out.push_back(HermitianMatrix::symmetrize(M[p]));
    return out;
  }
  MatrixPoint z_point() const {
    MatrixPoint out;
    for (int p = 0; p < n(); ++p) out.push_back(HermitianMatrix::symmetrize(Z[p]));
    return out;
  }
};

// U is phase-fixed with real diagonal, or anchored to `anchor` when given (the gauge
// that is smooth around the anchor's base point).
inline SmzFrame build_smz(const WishartFamily& fam, const MatrixPoint& w, double gap_tol = kDefaultGapTol,
                          const ComplexMatrix* anchor = nullptr) {
  fam.validate();
  if (static_cast<int>(w.size()) != fam.blocks()) throw InvalidArgument("smz: wrong number of matrices");
  const int d = fam.d;
  SmzFrame f;
  f.family = fam;
  f.W = w;
  f.S = HermitianMatrix(d);
  for (const auto& m : w) f.S += m;
  if (!is_positive_definite(f.S)) throw NotPsdError("smz: S is not positive definite");
  const EigenFrame ef = hermitian_eigen(f.S, gap_tol);
  if (ef.values(0) <= 0.0) throw NotPsdError("smz: S is not positive definite");
  f.lambda = ef.values.cwiseSqrt();
  f.U = ef.vectors;
  if (anchor) anchor_phases(f.U, *anchor);
  const RealVector inv_l = f.lambda.cwiseInverse();
  f.Nroot = f.U * f.lambda.cast<cplx>().asDiagonal() * f.U.adjoint();
  f.Ninv = f.U * inv_l.cast<cplx>().asDiagonal() * f.U.adjoint();
  f.Sinv = f.Ninv * f.Ninv;
  for (const auto& m : w) {
    f.M.push_back(f.Ninv * m.matrix() * f.Ninv);
    f.Z.push_back(f.U.adjoint() * f.M.back() * f.U);
  }
  for (int r = 0; r < d; ++r) f.V.push_back(f.U.col(r) * f.U.col(r).adjoint());
  return f;
}

// ---------------------------------------------------------------------------
// Closed forms at a frame point. Indices are 0-based; p, q range over all n+1 blocks.

class SmzClosedForms {
 public:
  explicit SmzClosedForms(const SmzFrame& f) : f_(f), d_(f.d()), N_(f.family.N()) {
    const RealVector& l = f.lambda;
    for (int p = 0; p < f.family.blocks(); ++p) {
      MU_.push_back(f.M[p] * f.U);
      UsM_.push_back(f.U.adjoint() * f.M[p]);
    }
    y_ = RealMatrix(d_, d_);
    g_ = RealMatrix::Zero(d_, d_);
    dd_ = RealMatrix::Zero(d_, d_);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) {
        const double li2 = l(i) * l(i), lj2 = l(j) * l(j);
        if (i == j) {
          y_(i, i) = 1.0 / li2;
          continue;
        }
        y_(i, j) = 2.0 * (li2 + lj2) / ((li2 - lj2) * (li2 - lj2));
        g_(i, j) = 2.0 / ((l(i) + l(j)) * (l(i) + l(j)));
        dd_(i, j) = 4.0 * l(i) * l(j) / ((li2 - lj2) * (li2 - lj2));
      }
  }

  // S
  cplx gamma_S(int i, int j, int k, int l) const { return bracket(f_.S.matrix(), i, j, k, l); }
  cplx drift_S(int i, int j) const { return (i == j ? 4.0 * N_ : 0.0) - 2.0 * f_.S(i, j); }
  cplx gamma_S_W(int p, int i, int j, int k, int l) const { return bracket(f_.W[p].matrix(), i, j, k, l); }

  // lambda
  double gamma_lambda(int i, int j) const { return i == j ? 1.0 : 0.0; }
  double drift_lambda(int i) const {
    const RealVector& l = f_.lambda;
    double v = (2.0 * (N_ - d_) + 1.0) / l(i) - l(i);
    for (int j = 0; j < d_; ++j)
      if (j != i) v += 4.0 * l(i) / (l(i) * l(i) - l(j) * l(j));
    return v;
  }

  // dN_ij / dS_kl, treating S_kl and S_lk as independent entries.
  cplx sqrt_derivative(int i, int j, int k, int l) const {
    return rs_sum([&](int r, int s) { return 1.0 / (lam(r) + lam(s)); },
                  [&](int r, int s) { return V(r)(i, k) * V(s)(l, j); });
  }

  // N = S^{1/2} and N^{-1}
  cplx gamma_N_W(int p, int i, int j, int k, int l) const {
    const ComplexMatrix& w = f_.W[p].matrix();
    return rs_sum([&](int r, int s) { return 2.0 / (lam(r) + lam(s)); },
                  [&](int r, int s) { return V(r)(i, l) * (w * V(s))(k, j) + V(s)(k, j) * (V(r) * w)(i, l); });
  }
  cplx gamma_N_N(int i, int j, int k, int l) const {
    return rs_sum([&](int r, int s) { return 2.0 * (sq(lam(r)) + sq(lam(s))) / sq(lam(r) + lam(s)); },
                  [&](int r, int s) { return V(r)(i, l) * V(s)(k, j); });
  }
  cplx drift_N(int i, int j) const {
    return rs_sum([&](int r, int s) { return 4.0 * lam(s) / sq(lam(r) + lam(s)); },
                  [&](int r, int) { return V(r)(i, j); }) -
           f_.Nroot(i, j) + 2.0 * (N_ - d_) * f_.Ninv(i, j);
  }
  cplx gamma_Ninv_N(int i, int j, int k, int l) const {
    return -rs_sum(
        [&](int r, int s) { return 2.0 * (sq(lam(r)) + sq(lam(s))) / (lam(r) * lam(s) * sq(lam(r) + lam(s))); },
        [&](int r, int s) { return V(r)(i, l) * V(s)(k, j); });
  }
  cplx gamma_Ninv_W(int p, int i, int j, int k, int l) const {
    const ComplexMatrix& w = f_.W[p].matrix();
    return -rs_sum([&](int r, int s) { return 2.0 / (lam(r) * lam(s) * (lam(r) + lam(s))); },
                   [&](int r, int s) { return V(r)(i, l) * (w * V(s))(k, j) + V(s)(k, j) * (V(r) * w)(i, l); });
  }
  cplx gamma_Ninv_Ninv(int i, int j, int k, int l) const {
    return rs_sum([&](int r, int s) {
                    return 2.0 * (sq(lam(r)) + sq(lam(s))) / (sq(lam(r)) * sq(lam(s)) * sq(lam(r) + lam(s)));
                  },
                  [&](int r, int s) { return V(r)(i, l) * V(s)(k, j); });
  }
  cplx drift_Ninv(int i, int j) const {
    return rs_sum([&](int r, int s) { return 4.0 / (lam(s) * sq(lam(r) + lam(s))); },
                  [&](int r, int) { return V(r)(i, j); }) +
           f_.Ninv(i, j) - 2.0 * (N_ - d_) * (f_.Sinv * f_.Ninv)(i, j);
  }

  // M
  cplx gamma_M_M(int p, int i, int j, int q, int k, int l) const {
    const ComplexMatrix &mp = f_.M[p], &mq = f_.M[q], &si = f_.Sinv;
    cplx v = 0.0;
    if (p == q) v += 2.0 * (si(i, l) * mp(k, j) + si(k, j) * mp(i, l));
    v -= 2.0 * si(k, j) * (mp * mq)(i, l) + 2.0 * si(i, l) * (mq * mp)(k, j);
    v += rs_sum([&](int a, int b) { return 4.0 / sq(lam(a) + lam(b)); },
                [&](int a, int b) {
                  return -(V(b) * mp)(k, j) * (V(a) * mq)(i, l) - (mp * V(a))(i, l) * (mq * V(b))(k, j) +
                         V(a)(k, j) * (mp * V(b) * mq)(i, l) + V(a)(i, l) * (mq * V(b) * mp)(k, j);
                });
    return v;
  }
  cplx drift_M(int p, int i, int j) const {
    const ComplexMatrix &mp = f_.M[p], &si = f_.Sinv;
    cplx v = 4.0 * f_.family.dims[p] * si(i, j) - 2.0 * (N_ - d_) * (si * mp + mp * si)(i, j) -
             4.0 * si(i, j) * mp.trace();
    v += rs_sum([&](int a, int b) { return 1.0 / sq(lam(a) + lam(b)); },
                [&](int a, int b) {
                  return -4.0 * (V(a) * mp)(i, j) - 4.0 * (mp * V(b))(i, j) + 8.0 * V(a)(i, j) * (V(b) * mp).trace();
                });
    return v;
  }
  cplx gamma_M_S(int p, int i, int j, int k, int l) const {
    return m_cross(p, i, j, k, l, [&](int a, int b) { return 2.0 * (lam(a) - lam(b)) / (lam(a) + lam(b)); });
  }
  cplx gamma_M_N(int p, int i, int j, int k, int l) const {
    return m_cross(p, i, j, k, l, [&](int a, int b) { return 2.0 * (lam(a) - lam(b)) / sq(lam(a) + lam(b)); });
  }
  cplx gamma_M_U(int p, int i, int j, int k, int l) const {
    const ComplexMatrix& u = f_.U;
    cplx v = 0.0;
    for (int a = 0; a < d_; ++a)
      v += g_(a, l) * u(k, a) * (MU_[p](i, l) * std::conj(u(j, a)) - u(i, l) * UsM_[p](a, j));
    return v;
  }
  // Gamma(U*_kl, M^p_ij)
  cplx gamma_Ustar_M(int k, int l, int p, int i, int j) const {
    const ComplexMatrix& u = f_.U;
    cplx v = 0.0;
    for (int a = 0; a < d_; ++a)
      v += g_(k, a) * std::conj(u(l, a)) * (-MU_[p](i, a) * std::conj(u(j, k)) + u(i, a) * UsM_[p](k, j));
    return v;
  }

  // Z
  cplx gamma_Z_Z(int p, int i, int j, int q, int k, int l) const {
    const ComplexMatrix &zp = f_.Z[p], &zq = f_.Z[q];
    const RealVector& lm = f_.lambda;
    cplx v = 0.0;
    if (p == q) v += 2.0 * ((i == l ? zp(k, j) / sq(lm(i)) : 0.0) + (k == j ? zp(i, l) / sq(lm(j)) : 0.0));
    if (k == j) v -= 2.0 * (zp * zq)(i, l) / sq(lm(j));
    if (i == l) v -= 2.0 * (zq * zp)(k, j) / sq(lm(i));
    for (int a = 0; a < d_; ++a) {
      if (i == l) v += y_(i, a) * zp(a, j) * zq(k, a);
      if (k == j) v += y_(k, a) * zp(i, a) * zq(a, l);
    }
    v -= y_(i, k) * zp(k, j) * zq(i, l) + y_(j, l) * zp(i, l) * zq(k, j);
    return v;
  }
  cplx drift_Z(int p, int i, int j) const {
    const ComplexMatrix& zp = f_.Z[p];
    const RealVector& lm = f_.lambda;
    cplx v = -2.0 * (N_ - d_) * (1.0 / sq(lm(i)) + 1.0 / sq(lm(j))) * zp(i, j);
    if (i == j) v += 4.0 * f_.family.dims[p] / sq(lm(i)) - 4.0 * zp.trace() / sq(lm(i));
    for (int a = 0; a < d_; ++a) {
      if (i == j) v += 2.0 * y_(i, a) * zp(a, a);
      v -= (y_(j, a) + y_(i, a)) * zp(i, j);
    }
    return v;
  }
  cplx gamma_Z_U(int p, int i, int j, int k, int l) const {
    const ComplexMatrix &zp = f_.Z[p], &u = f_.U;
    cplx v = -dd_(j, l) * u(k, j) * zp(i, l);
    if (i == l)
      for (int a = 0; a < d_; ++a)
        if (a != l) v += dd_(a, l) * u(k, a) * zp(a, j);
    return v;
  }

  const RealMatrix& y() const { return y_; }

 private:
  static double sq(double x) { return x * x; }
  double lam(int r) const { return f_.lambda(r); }
  const ComplexMatrix& V(int r) const { return f_.V[r]; }

  // 2 (delta_jk X_il + delta_il X_kj)
  static cplx bracket(const ComplexMatrix& x, int i, int j, int k, int l) {
    cplx v = 0.0;
    if (j == k) v += 2.0 * x(i, l);
    if (i == l) v += 2.0 * x(k, j);
    return v;
  }

  template <class Coef, class Term>
  cplx rs_sum(Coef coef, Term term) const {
    cplx v = 0.0;
    for (int r = 0; r < d_; ++r)
      for (int s = 0; s < d_; ++s) v += coef(r, s) * term(r, s);
    return v;
  }

  // sum_ab c_ab ((M^p V^a)_il V^b_kj - V^a_il (V^b M^p)_kj)
  template <class Coef>
  cplx m_cross(int p, int i, int j, int k, int l, Coef coef) const {
    const ComplexMatrix& mp = f_.M[p];
    return rs_sum(coef, [&](int a, int b) { return (mp * V(a))(i, l) * V(b)(k, j) - V(a)(i, l) * (V(b) * mp)(k, j); });
  }

  const SmzFrame& f_;
  int d_, N_;
  std::vector<ComplexMatrix> MU_, UsM_;
  RealMatrix y_, g_, dd_;
};

// ---------------------------------------------------------------------------
// Parameter maps

// Model II parameters of the (D, Z) image with A = 2 D^{-2}, B_{ij,kl} = y_ij delta_ik delta_jl,
// a_p = d_p - d + 1, together with the drift of the radial part lambda.
struct TheoremParams {
  ModelIIParams model;
  RealVector radial_drift;
};

inline TheoremParams theorem_params(const SmzFrame& f) {
  const int d = f.d();
  const SmzClosedForms cf(f);
  TheoremParams t;
  t.model.n = f.n();
  t.model.d = d;
  t.model.A = ComplexMatrix::Zero(d, d);
  t.model.B = ComplexMatrix::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i) {
    t.model.A(i, i) = 2.0 / (f.lambda(i) * f.lambda(i));
    for (int j = 0; j < d; ++j) t.model.B(i * d + j, i * d + j) = cf.y()(i, j);
  }
  t.model.a = f.family.parameters();
  t.radial_drift = RealVector(d);
  for (int i = 0; i < d; ++i) t.radial_drift(i) = cf.drift_lambda(i);
  return t;
}

// Model II parameters governing M alone: A = 2 S^{-1},
// B_{ij,kl} = sum_rs 4 / (lambda_r + lambda_s)^2 V^r_ik V^s_lj, a_p = d_p - d + 1.
inline ModelIIParams m_block_params(const SmzFrame& f) {
  const int d = f.d();
  ModelIIParams prm;
  prm.n = f.n();
  prm.d = d;
  prm.A = 2.0 * f.Sinv;
  prm.B = ComplexMatrix::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          cplx v = 0.0;
          for (int r = 0; r < d; ++r)
            for (int s = 0; s < d; ++s)
              v += 4.0 / std::pow(f.lambda(r) + f.lambda(s), 2) * f.V[r](i, k) * f.V[s](l, j);
          prm.B(i * d + j, k * d + l) = v;
        }
  prm.a = f.family.parameters();
  return prm;
}

// Realified operator of (S, M^1..M^n) at the frame point: block 0 is S, block p is M^p.
inline Pushforward sm_operator(const SmzFrame& f) {
  const SmzClosedForms cf(f);
  const HermitianLayout layout(f.n() + 1, f.d());
  Pushforward out;
  layout.realify_operator(
      [&](int pb, int i, int j, int qb, int k, int l) -> cplx {
        if (pb == 0 && qb == 0) return cf.gamma_S(i, j, k, l);
        if (pb == 0) return cf.gamma_M_S(qb - 1, k, l, i, j);
        if (qb == 0) return cf.gamma_M_S(pb - 1, i, j, k, l);
        return cf.gamma_M_M(pb - 1, i, j, qb - 1, k, l);
      },
      [&](int pb, int i, int j) { return pb == 0 ? cf.drift_S(i, j) : cf.drift_M(pb - 1, i, j); }, out.gamma,
      out.drift);
  return out;
}

inline ProjectionMap sm_projection(const WishartFamily& fam) {
  const HermitianLayout in = fam.layout(), out(fam.blocks(), fam.d);
  return {in.dim(), out.dim(), [fam, in, out](const RealVector& x) {
            const MatrixPoint w = in.unrealify(x);
            HermitianMatrix s(fam.d);
            for (const auto& m : w) s += m;
            const ComplexMatrix r = inverse_sqrtm_pd(s).matrix();
            MatrixPoint sm{s};
            for (int p = 0; p + 1 < fam.blocks(); ++p) sm.push_back(HermitianMatrix::symmetrize(r * w[p].matrix() * r));
            return out.realify(sm);
          }};
}

// ---------------------------------------------------------------------------
// Direct matrix Dirichlet sampler: M^p = S^{-1/2} W^p S^{-1/2} with independent
// complex Wishart W^p of d_p degrees of freedom has law D_a, a_p = d_p - d + 1.

inline MatrixPoint sample_matrix_dirichlet_direct(const WishartFamily& fam, Rng& rng) {
  fam.validate();
  for (int r : fam.dims)
    if (r < fam.d) throw InvalidArgument("direct sampler: need d_p >= d");
  const MatrixPoint w = sample_wishart_family(fam, rng);
  HermitianMatrix s(fam.d);
  for (const auto& m : w) s += m;
  const ComplexMatrix r = inverse_sqrtm_pd(s).matrix();
  MatrixPoint z;
  for (int p = 0; p + 1 < fam.blocks(); ++p) z.push_back(HermitianMatrix::symmetrize(r * w[p].matrix() * r));
  return z;
}

// ---------------------------------------------------------------------------
// Verification

// Stationary-law frame with well separated eigenvalues of S, min gap > rel_gap * max eigenvalue.
inline MatrixPoint sample_separated_family(const WishartFamily& fam, Rng& rng, double rel_gap = 0.05) {
  for (;;) {
    MatrixPoint w = sample_wishart_family(fam, rng);
    HermitianMatrix s(fam.d);
    for (const auto& m : w) s += m;
    const EigenFrame ef = hermitian_eigen(s, 0.0);
    if (ef.values(0) > 0.0 && (fam.d == 1 || ef.min_gap() > rel_gap * ef.values(fam.d - 1))) return w;
  }
}

namespace detail {

// Offsets of each quantity in the flattened complex vector of all (S, lambda, N, ...) entries.
struct SmzIndex {
  int d, m;  // m = n + 1 blocks
  int S() const { return 0; }
  int lambda() const { return d * d; }
  int N() const { return lambda() + d; }
  int Ninv() const { return N() + d * d; }
  int M(int p) const { return Ninv() + d * d + p * d * d; }
  int U() const { return M(m); }
  int Ustar() const { return U() + d * d; }
  int Z(int p) const { return Ustar() + d * d + p * d * d; }
  int W(int p) const { return Z(m) + p * d * d; }
  int size() const { return W(m); }
  int at(int base, int i, int j) const { return base + i * d + j; }
};

inline ComplexVector smz_flatten(const SmzFrame& f, const SmzIndex& ix) {
  ComplexVector v(ix.size());
  const int d = f.d();
  auto put = [&](int base, const ComplexMatrix& x) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) v(ix.at(base, i, j)) = x(i, j);
  };
  put(ix.S(), f.S.matrix());
  for (int i = 0; i < d; ++i) v(ix.lambda() + i) = f.lambda(i);
  put(ix.N(), f.Nroot);
  put(ix.Ninv(), f.Ninv);
  put(ix.U(), f.U);
  put(ix.Ustar(), f.U.adjoint());
  for (int p = 0; p < ix.m; ++p) {
    put(ix.M(p), f.M[p]);
    put(ix.Z(p), f.Z[p]);
    put(ix.W(p), f.W[p].matrix());
  }
  return v;
}

struct SmzSample {
  SmzFrame frame;
  ComplexTable table;
};

}  // namespace detail

// Every closed form of the (S, lambda, N, M, U, Z) system against the pushforward of the
// Wishart ambient at random frames, in the gauge anchored at each base point.
inline VerificationReport verify_smz_system(const WishartFamily& fam, int n_frames, Rng& rng, double tol_gamma = 1e-6,
                                            double tol_drift = 1e-4) {
  fam.validate();
  const int d = fam.d, m = fam.blocks();
  const detail::SmzIndex ix{d, m};
  const HermitianLayout layout = fam.layout();
  const DiffusionModel ambient = wishart_ambient(fam);

  using Point = detail::SmzSample;
  using Spec = IdentitySpec<Point>;
  auto entries4 = [d](auto fn) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l) fn(i, j, k, l);
  };
  auto entries2 = [d](auto fn) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) fn(i, j);
  };
  auto G = [](const ComplexTable& t, int a, int b) { return t.gamma(a, b); };
  auto L = [](const ComplexTable& t, int a) { return t.drift(a); };

  std::vector<Spec> specs;
  auto gamma_spec = [&](std::string id, std::string formula, auto fn) {
    specs.push_back({std::move(id), std::move(formula), tol_gamma,
                     [fn](const Point& pt, const ComplexTable& t, Residual& r) { fn(SmzClosedForms(pt.frame), t, r); }});
  };
  auto drift_spec = [&](std::string id, std::string formula, auto fn) {
    specs.push_back({std::move(id), std::move(formula), tol_drift,
                     [fn](const Point& pt, const ComplexTable& t, Residual& r) { fn(SmzClosedForms(pt.frame), t, r); }});
  };

  gamma_spec("wishart.S.gamma", "Gamma(S_ij, S_kl) = 2(delta_jk S_il + delta_il S_kj)",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               entries4([&](int i, int j, int k, int l) {
                 r.add(c.gamma_S(i, j, k, l), G(t, ix.at(ix.S(), i, j), ix.at(ix.S(), k, l)));
               });
             });
  drift_spec("wishart.S.generator", "L(S_ij) = 4 N delta_ij - 2 S_ij",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               entries2([&](int i, int j) { r.add(c.drift_S(i, j), L(t, ix.at(ix.S(), i, j))); });
             });
  gamma_spec("wishart.S_W.gamma", "Gamma(S_ij, W^p_kl) = 2(delta_jk W^p_il + delta_il W^p_kj)",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 entries4([&](int i, int j, int k, int l) {
                   r.add(c.gamma_S_W(p, i, j, k, l), G(t, ix.at(ix.S(), i, j), ix.at(ix.W(p), k, l)));
                 });
             });
  gamma_spec("wishart.lambda.gamma", "Gamma(lambda_i, lambda_j) = delta_ij",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               entries2([&](int i, int j) { r.add(c.gamma_lambda(i, j), G(t, ix.lambda() + i, ix.lambda() + j)); });
             });
  drift_spec("wishart.lambda.generator",
             "L(lambda_i) = (2(N-d)+1)/lambda_i - lambda_i + 4 lambda_i sum_{j!=i} 1/(lambda_i^2 - lambda_j^2)",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               for (int i = 0; i < d; ++i) r.add(c.drift_lambda(i), L(t, ix.lambda() + i));
             });
  gamma_spec("wishart.sqrt.N_W.gamma",
             "Gamma(N_ij, W^p_kl) = sum_rs 2/(l_r+l_s) (V^r_il (W^p V^s)_kj + V^s_kj (V^r W^p)_il)",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 entries4([&](int i, int j, int k, int l) {
                   r.add(c.gamma_N_W(p, i, j, k, l), G(t, ix.at(ix.N(), i, j), ix.at(ix.W(p), k, l)));
                 });
             });
  gamma_spec("wishart.sqrt.N_N.gamma", "Gamma(N_ij, N_kl) = sum_rs 2(l_r^2+l_s^2)/(l_r+l_s)^2 V^r_il V^s_kj",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               entries4([&](int i, int j, int k, int l) {
                 r.add(c.gamma_N_N(i, j, k, l), G(t, ix.at(ix.N(), i, j), ix.at(ix.N(), k, l)));
               });
             });
  drift_spec("wishart.sqrt.N.generator", "L(N_ij) = 4 sum_rs l_s/(l_r+l_s)^2 V^r_ij - N_ij + 2(N-d) N^{-1}_ij",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               entries2([&](int i, int j) { r.add(c.drift_N(i, j), L(t, ix.at(ix.N(), i, j))); });
             });
  gamma_spec("wishart.sqrt.Ninv_N.gamma",
             "Gamma(N^{-1}_ij, N_kl) = -sum_rs 2(l_r^2+l_s^2)/(l_r l_s (l_r+l_s)^2) V^r_il V^s_kj",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               entries4([&](int i, int j, int k, int l) {
                 r.add(c.gamma_Ninv_N(i, j, k, l), G(t, ix.at(ix.Ninv(), i, j), ix.at(ix.N(), k, l)));
               });
             });
  gamma_spec("wishart.sqrt.Ninv_W.gamma",
             "Gamma(N^{-1}_ij, W^p_kl) = -2 sum_rs (V^r_il (W^p V^s)_kj + V^s_kj (V^r W^p)_il)/(l_r l_s (l_r+l_s))",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 entries4([&](int i, int j, int k, int l) {
                   r.add(c.gamma_Ninv_W(p, i, j, k, l), G(t, ix.at(ix.Ninv(), i, j), ix.at(ix.W(p), k, l)));
                 });
             });
  gamma_spec("wishart.sqrt.Ninv_Ninv.gamma",
             "Gamma(N^{-1}_ij, N^{-1}_kl) = 2 sum_rs (l_r^2+l_s^2)/(l_r^2 l_s^2 (l_r+l_s)^2) V^r_il V^s_kj",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               entries4([&](int i, int j, int k, int l) {
                 r.add(c.gamma_Ninv_Ninv(i, j, k, l), G(t, ix.at(ix.Ninv(), i, j), ix.at(ix.Ninv(), k, l)));
               });
             });
  drift_spec("wishart.sqrt.Ninv.generator",
             "L(N^{-1}_ij) = 4 sum_rs V^r_ij/(l_s (l_r+l_s)^2) + N^{-1}_ij - 2(N-d)(S^{-1} N^{-1})_ij",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               entries2([&](int i, int j) { r.add(c.drift_Ninv(i, j), L(t, ix.at(ix.Ninv(), i, j))); });
             });
  gamma_spec("wishart.M.gamma", "Gamma(M^p_ij, M^q_kl) in terms of S^{-1}, M and V",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 for (int q = 0; q < m; ++q)
                   entries4([&](int i, int j, int k, int l) {
                     r.add(c.gamma_M_M(p, i, j, q, k, l), G(t, ix.at(ix.M(p), i, j), ix.at(ix.M(q), k, l)));
                   });
             });
  drift_spec("wishart.M.generator", "L(M^p_ij) in terms of d_p, S^{-1}, M and V",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 entries2([&](int i, int j) { r.add(c.drift_M(p, i, j), L(t, ix.at(ix.M(p), i, j))); });
             });
  gamma_spec("wishart.M_S.gamma",
             "Gamma(M^p_ij, S_kl) = sum_ab 2(l_a-l_b)/(l_a+l_b) ((M^p V^a)_il V^b_kj - V^a_il (V^b M^p)_kj)",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 entries4([&](int i, int j, int k, int l) {
                   r.add(c.gamma_M_S(p, i, j, k, l), G(t, ix.at(ix.M(p), i, j), ix.at(ix.S(), k, l)));
                 });
             });
  gamma_spec("wishart.M_N.gamma",
             "Gamma(M^p_ij, N_kl) = sum_ab 2(l_a-l_b)/(l_a+l_b)^2 ((M^p V^a)_il V^b_kj - V^a_il (V^b M^p)_kj)",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 entries4([&](int i, int j, int k, int l) {
                   r.add(c.gamma_M_N(p, i, j, k, l), G(t, ix.at(ix.M(p), i, j), ix.at(ix.N(), k, l)));
                 });
             });
  gamma_spec("wishart.M_lambda.gamma", "Gamma(M^p_ij, lambda_k) = 0",
             [=](const SmzClosedForms&, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 entries2([&](int i, int j) {
                   for (int k = 0; k < d; ++k) r.add(0.0, G(t, ix.at(ix.M(p), i, j), ix.lambda() + k));
                 });
             });
  gamma_spec("wishart.M_U.gamma",
             "Gamma(M^p_ij, U_kl) = sum_a g_al U_ka ((M^p U)_il U*_aj - U_il (U* M^p)_aj)",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 entries4([&](int i, int j, int k, int l) {
                   r.add(c.gamma_M_U(p, i, j, k, l), G(t, ix.at(ix.M(p), i, j), ix.at(ix.U(), k, l)));
                 });
             });
  gamma_spec("wishart.Ustar_M.gamma",
             "Gamma(U*_kl, M^p_ij) = sum_a g_ka U*_al (-(M^p U)_ia U*_kj + U_ia (U* M^p)_kj)",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 entries4([&](int i, int j, int k, int l) {
                   r.add(c.gamma_Ustar_M(k, l, p, i, j), G(t, ix.at(ix.Ustar(), k, l), ix.at(ix.M(p), i, j)));
                 });
             });
  gamma_spec("wishart.Z.gamma", "Gamma(Z^p_ij, Z^q_kl) with A = 2 D^{-2} and y_ij",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 for (int q = 0; q < m; ++q)
                   entries4([&](int i, int j, int k, int l) {
                     r.add(c.gamma_Z_Z(p, i, j, q, k, l), G(t, ix.at(ix.Z(p), i, j), ix.at(ix.Z(q), k, l)));
                   });
             });
  drift_spec("wishart.Z.generator", "L(Z^p_ij) with d_p, N - d, lambda and y_ij",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 entries2([&](int i, int j) { r.add(c.drift_Z(p, i, j), L(t, ix.at(ix.Z(p), i, j))); });
             });
  gamma_spec("wishart.Z_lambda.gamma", "Gamma(Z^p_ij, lambda_k) = 0",
             [=](const SmzClosedForms&, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 entries2([&](int i, int j) {
                   for (int k = 0; k < d; ++k) r.add(0.0, G(t, ix.at(ix.Z(p), i, j), ix.lambda() + k));
                 });
             });
  gamma_spec("wishart.Z_U.gamma",
             "Gamma(Z^p_ij, U_kl) = delta_il sum_{a!=l} d_al U_ka Z^p_aj - d_jl U_kj Z^p_il",
             [=](const SmzClosedForms& c, const ComplexTable& t, Residual& r) {
               for (int p = 0; p < m; ++p)
                 entries4([&](int i, int j, int k, int l) {
                   r.add(c.gamma_Z_U(p, i, j, k, l), G(t, ix.at(ix.Z(p), i, j), ix.at(ix.U(), k, l)));
                 });
             });

  std::function<Point(int)> sample = [&](int) {
    const MatrixPoint w = sample_separated_family(fam, rng);
    return Point{build_smz(fam, w, 0.0), ComplexTable{}};
  };
  std::function<ComplexTable(const Point&)> push = [&](const Point& pt) {
    const ComplexMatrix anchor = pt.frame.U;
    const RealVector x = layout.realify(pt.frame.W);
    return complex_pushforward(
        ambient, [&](const RealVector& y) { return detail::smz_flatten(build_smz(fam, layout.unrealify(y), 0.0, &anchor), ix); },
        x);
  };
  return run_identity_specs<Point>("wishart.smz", specs, sample, push, n_frames);
}

// Operator of (lambda, Z^1..Z^n) from the parameter map: Gamma(lambda_i, lambda_j) = delta_ij,
// Gamma(lambda, Z) = 0, the radial drift, and model II on the Z block.
inline Pushforward theorem_operator(const SmzFrame& f) {
  const int d = f.d();
  const TheoremParams t = theorem_params(f);
  const DiffusionModel z_model = make_model2(t.model);
  const RealVector xz = HermitianLayout(f.n(), d).realify(f.z_point());
  const int dim = d + static_cast<int>(xz.size());
  Pushforward out{RealMatrix::Zero(dim, dim), RealVector(dim)};
  out.gamma.topLeftCorner(d, d).setIdentity();
  out.gamma.bottomRightCorner(xz.size(), xz.size()) = z_model.gamma(xz);
  out.drift << t.radial_drift, z_model.drift(xz);
  return out;
}

// Pushforward of the Wishart ambient through (lambda, Z) in the gauge anchored at each
// base point, against theorem_operator.
inline VerificationReport verify_theorem_image(const WishartFamily& fam, int n_frames, Rng& rng,
                                               double tol_gamma = 1e-6, double tol_drift = 1e-4) {
  fam.validate();
  const HermitianLayout in = fam.layout(), zl(fam.blocks() - 1, fam.d);
  const DiffusionModel ambient = wishart_ambient(fam);
  Residual rg, rl;
  for (int s = 0; s < n_frames; ++s) {
    const SmzFrame f = build_smz(fam, sample_separated_family(fam, rng), 0.0);
    const ComplexMatrix anchor = f.U;
    const ProjectionMap proj{in.dim(), fam.d + zl.dim(), [&](const RealVector& x) {
                               const SmzFrame g = build_smz(fam, in.unrealify(x), 0.0, &anchor);
                               RealVector y(fam.d + zl.dim());
                               y << g.lambda, zl.realify(g.z_point());
                               return y;
                             }};
    const Pushforward p = pushforward(ambient, proj, in.realify(f.W));
    const Pushforward expected = theorem_operator(f);
    rg.add_matrix(expected.gamma, p.gamma);
    rl.add_matrix(expected.drift, p.drift);
  }
  VerificationReport rep;
  rep.suite = "wishart.theorem";
  rep.checks.push_back(make_result("wishart.theorem.gamma",
                                   "(lambda, Z) has Gamma = Id (+) Gamma_{A,B} with A = 2 D^{-2}, B = y delta delta",
                                   n_frames, rg, tol_gamma));
  rep.checks.push_back(make_result("wishart.theorem.generator",
                                   "radial drift and L_{A,B,a} with a_p = d_p - d + 1", n_frames, rl, tol_drift));
  return rep;
}

// sqrt derivative against central differences of S -> S^{1/2} along random Hermitian directions.
inline double sqrt_derivative_fd_residual(const SmzFrame& f, Rng& rng, int directions = 5, double h = 1e-5) {
  const int d = f.d();
  const SmzClosedForms cf(f);
  double worst = 0.0;
  for (int t = 0; t < directions; ++t) {
    const HermitianMatrix e = random_hermitian(d, rng);
    const ComplexMatrix np = sqrtm_psd(f.S + e * h).matrix(), nm = sqrtm_psd(f.S - e * h).matrix();
    const ComplexMatrix fd = (np - nm) / (2.0 * h);
    ComplexMatrix closed = ComplexMatrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l) closed(i, j) += cf.sqrt_derivative(i, j, k, l) * e(k, l);
    worst = std::max(worst, max_abs(ComplexMatrix(fd - closed)) / std::max(1e-300, max_abs(closed)));
  }
  return worst;
}

}  // namespace mdp
