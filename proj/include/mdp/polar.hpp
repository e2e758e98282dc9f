#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mdp/calculus.hpp"
#include "mdp/coords.hpp"
#include "mdp/linalg.hpp"
#include "mdp/matrix_simplex.hpp"
#include "mdp/simplex.hpp"

namespace mdp {

// ---------------------------------------------------------------------------
// Ambient: d x d complex Brownian matrix,
//   Gamma(m_ij, m_kl) = 0, Gamma(m_ij, conj m_kl) = 2 delta_ik delta_jl, L(m_ij) = 0,
// in (Re, Im) row-major coordinates. Every real coordinate has Gamma = 1.

inline DiffusionModel complex_bm_ambient(int d) {
  if (d < 1) throw InvalidArgument("complex_bm_ambient: d must be >= 1");
  RealMatrix g;
  RealVector b;
  realify_general_operator(
      d, d, [](int, int, int, int) { return cplx(0.0); },
      [](int i, int j, int k, int l) { return cplx(i == k && j == l ? 2.0 : 0.0); },
      [](int, int) { return cplx(0.0); }, g, b);
  return {2 * d * d, [g](const RealVector&) { return g; }, [b](const RealVector&) { return b; },
          [](const RealVector&) { return true; }};
}

// ---------------------------------------------------------------------------
// Polar and spectral parts: m = V N, H = m*m = U D^2 U*, N = U D U*, W = V U,
// so m = W D U*. Z^(k) = U_k U_k* are the rank-one spectral projectors of H.

struct PolarFrame {
  ComplexMatrix m, V, N, H, U, W;
  RealVector x;  // singular values, ascending; eigenvalues of H are x_i^2
  std::vector<ComplexMatrix> Z;

  int d() const { return static_cast<int>(x.size()); }
  ComplexMatrix D() const { return x.cast<cplx>().asDiagonal(); }
};

// `gap_tol` bounds the gaps between eigenvalues of H. With `anchor`, the columns of U are
// re-phased against it instead of the real-diagonal convention.
inline PolarFrame polar_parts(const ComplexMatrix& m, double gap_tol = kDefaultGapTol,
                              const ComplexMatrix* anchor = nullptr) {
  if (m.rows() != m.cols() || m.rows() == 0) throw InvalidArgument("polar_parts: m must be square");
  const int d = static_cast<int>(m.rows());
  PolarFrame f;
  f.m = m;
  f.H = HermitianMatrix::symmetrize(m.adjoint() * m).matrix();
  const EigenFrame ef = hermitian_eigen(HermitianMatrix::from_lower(f.H), 0.0);
  const double top = std::max(1e-300, ef.values(d - 1));
  if (ef.values(0) <= 1e-14 * top) throw SingularError("polar_parts: m is singular");
  if (gap_tol > 0.0 && d > 1 && ef.min_gap() < gap_tol)
    throw SpectralGapError("polar_parts: eigenvalues of m*m are not separated");
  f.x = ef.values.cwiseSqrt();
  f.U = ef.vectors;
  if (anchor) anchor_phases(f.U, *anchor);
  f.N = f.U * f.D() * f.U.adjoint();
  f.V = m * f.U * f.x.cwiseInverse().cast<cplx>().asDiagonal() * f.U.adjoint();
  f.W = f.V * f.U;
  for (int k = 0; k < d; ++k) f.Z.push_back(f.U.col(k) * f.U.col(k).adjoint());
  return f;
}

// r_ij = 2(x_i^2 + x_j^2)/(x_i^2 - x_j^2)^2 off the diagonal, r_ii = 0.
inline RealMatrix polar_r(const RealVector& x) {
  const int d = static_cast<int>(x.size());
  RealMatrix r = RealMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      const double a = x(i) * x(i), b = x(j) * x(j);
      r(i, j) = 2.0 * (a + b) / ((a - b) * (a - b));
    }
  return r;
}

// omega_ij = -r_ij off the diagonal, omega_ii = -1/x_i^2.
inline RealMatrix polar_omega(const RealVector& x) {
  RealMatrix w = -polar_r(x);
  for (int i = 0; i < x.size(); ++i) w(i, i) = -1.0 / (x(i) * x(i));
  return w;
}

// L(x_i) = 1/x_i + 4 x_i sum_{s != i} 1/(x_i^2 - x_s^2).
inline RealVector polar_radial_drift(const RealVector& x) {
  RealVector b(x.size());
  for (int i = 0; i < x.size(); ++i) {
    double s = 0.0;
    for (int k = 0; k < x.size(); ++k)
      if (k != i) s += 1.0 / (x(i) * x(i) - x(k) * x(k));
    b(i) = 1.0 / x(i) + 4.0 * x(i) * s;
  }
  return b;
}

// ---------------------------------------------------------------------------
// Closed forms at a frame. U is taken in whatever gauge the frame carries; the
// U and W identities hold in the gauge anchored at the evaluation point.

class PolarClosedForms {
 public:
  explicit PolarClosedForms(const PolarFrame& f)
      : f_(f), d_(f.d()), r_(polar_r(f.x)), w_(polar_omega(f.x)) {}

  const RealMatrix& r() const { return r_; }
  const RealMatrix& omega() const { return w_; }

  cplx gamma_H(int i, int j, int k, int l) const {
    cplx g = 0.0;
    if (j == k) g += 2.0 * f_.H(i, l);
    if (i == l) g += 2.0 * f_.H(k, j);
    return g;
  }
  cplx drift_H(int i, int j) const { return i == j ? 4.0 * d_ : 0.0; }

  cplx gamma_N(int i, int j, int k, int l) const {
    const RealVector& x = f_.x;
    const ComplexMatrix& U = f_.U;
    cplx g = 0.0;
    for (int r = 0; r < d_; ++r)
      for (int s = 0; s < d_; ++s)
        g += 2.0 * (x(r) * x(r) + x(s) * x(s)) / sq(x(r) + x(s)) * U(i, r) * std::conj(U(j, s)) * U(k, s) *
             std::conj(U(l, r));
    return g;
  }
  cplx drift_N(int i, int j) const {
    const RealVector& x = f_.x;
    cplx g = 0.0;
    for (int r = 0; r < d_; ++r)
      for (int s = 0; s < d_; ++s) g += 4.0 * x(s) / sq(x(r) + x(s)) * f_.U(i, r) * std::conj(f_.U(j, r));
    return g;
  }

  double gamma_x(int i, int j) const { return i == j ? 1.0 : 0.0; }
  double drift_x(int i) const { return polar_radial_drift(f_.x)(i); }

  cplx gamma_U(int i, int j, int k, int l) const { return -r_(l, j) * f_.U(i, l) * f_.U(k, j); }
  cplx gamma_U_bar(int i, int j, int k, int l) const {
    if (l != j) return 0.0;
    cplx g = 0.0;
    for (int s = 0; s < d_; ++s) g += r_(j, s) * f_.U(i, s) * std::conj(f_.U(k, s));
    return g;
  }
  cplx drift_U(int i, int j) const { return -f_.U(i, j) * r_.row(j).sum(); }

  cplx gamma_W(int i, int j, int k, int l) const { return w_(j, l) * f_.W(i, l) * f_.W(k, j); }
  cplx gamma_W_bar(int i, int j, int k, int l) const {
    if (l != j) return 0.0;
    cplx g = 0.0;
    for (int s = 0; s < d_; ++s) g -= w_(j, s) * f_.W(i, s) * std::conj(f_.W(k, s));
    return g;
  }
  // The sum includes s = j: omega_jj = -1/x_j^2 carries the drift of the V factor.
  cplx drift_W(int i, int j) const { return w_.col(j).sum() * f_.W(i, j); }

 private:
  static double sq(double v) { return v * v; }
  const PolarFrame& f_;
  int d_;
  RealMatrix r_, w_;
};

// ---------------------------------------------------------------------------
// Values at V = U = Id (m = diag(x)) for the V brackets, which are only available there.

struct PolarBase {
  RealVector x;

  int d() const { return static_cast<int>(x.size()); }
  double gamma_V(int i, int j, int k, int l) const {
    return (i == l && k == j) ? -4.0 / sq(x(i) + x(j)) : 0.0;
  }
  double drift_V(int i, int j) const {
    if (i != j) return 0.0;
    double s = 0.0;
    for (int k = 0; k < d(); ++k) s += 1.0 / sq(x(i) + x(k));
    return -4.0 * s;
  }
  // Gamma(U_ii, .) = 0 in the real-diagonal gauge.
  double gamma_U_V(int i, int j, int k, int l) const {
    return (i != j && i == l && k == j) ? 2.0 / sq(x(i) + x(j)) : 0.0;
  }
  double gamma_V_N(int i, int j, int k, int l) const {
    return (i == l && j == k) ? 2.0 * (x(i) - x(j)) / sq(x(i) + x(j)) : 0.0;
  }
  double gamma_Vbar_N(int i, int j, int k, int l) const {
    return (i == k && j == l) ? 2.0 * (x(i) - x(j)) / sq(x(i) + x(j)) : 0.0;
  }
  double gamma_U_W(int i, int j, int k, int l) const {
    if (i == j || i != l || k != j) return 0.0;
    return -4.0 * x(i) * x(j) / sq(x(i) * x(i) - x(j) * x(j));
  }

 private:
  static double sq(double v) { return v * v; }
};

// Frame of m = diag(x); x must be positive, distinct and ascending.
inline PolarFrame identity_frame(const RealVector& x) {
  for (int i = 0; i < x.size(); ++i)
    if (x(i) <= 0.0 || (i > 0 && x(i) <= x(i - 1)))
      throw InvalidArgument("identity_frame: x must be positive and strictly ascending");
  return polar_parts(x.cast<cplx>().asDiagonal().toDenseMatrix(), 0.0);
}

// ---------------------------------------------------------------------------
// Invariance: m -> P m Q with P, Q unitary preserves the ambient. Taking Q = U*, P = V U
// moves the base frame (Id, Id) to (V, U), under which
//   N -> U N U*, V -> (V U) V U*, U -> U U, W -> (V U) W.
// Each transported object is X' = P X Q with constant P, Q, so
//   Gamma(X'_ij, Y'_kl) = sum P_ip Q_qj P'_kr Q'_sl Gamma(X_pq, Y_rs),  L(X'_ij) = sum P_ip Q_qj L(X_pq).

class PolarTransport {
 public:
  struct Congruence {
    ComplexMatrix P, Q;
  };

  PolarTransport(const RealVector& x, const ComplexMatrix& V, const ComplexMatrix& U)
      : base_frame_(identity_frame(x)), base_{x}, d_(static_cast<int>(x.size())) {
    const ComplexMatrix id = ComplexMatrix::Identity(d_, d_);
    const ComplexMatrix A = V * U;
    N_ = {U, U.adjoint()};
    V_ = {A, U.adjoint()};
    Vbar_ = {A.conjugate(), U.transpose()};
    U_ = {U, id};
    Ubar_ = {U.conjugate(), id};
    W_ = {A, id};
    Wbar_ = {A.conjugate(), id};
  }

  cplx gamma_N(int i, int j, int k, int l) const {
    const PolarClosedForms c(base_frame_);
    return gamma(N_, N_, [&](int p, int q, int r, int s) { return c.gamma_N(p, q, r, s); }, i, j, k, l);
  }
  cplx drift_N(int i, int j) const {
    const PolarClosedForms c(base_frame_);
    return drift(N_, [&](int p, int q) { return c.drift_N(p, q); }, i, j);
  }
  cplx gamma_U(int i, int j, int k, int l) const {
    const PolarClosedForms c(base_frame_);
    return gamma(U_, U_, [&](int p, int q, int r, int s) { return c.gamma_U(p, q, r, s); }, i, j, k, l);
  }
  cplx gamma_U_bar(int i, int j, int k, int l) const {
    const PolarClosedForms c(base_frame_);
    return gamma(U_, Ubar_, [&](int p, int q, int r, int s) { return c.gamma_U_bar(p, q, r, s); }, i, j, k, l);
  }
  cplx drift_U(int i, int j) const {
    const PolarClosedForms c(base_frame_);
    return drift(U_, [&](int p, int q) { return c.drift_U(p, q); }, i, j);
  }
  cplx gamma_W(int i, int j, int k, int l) const {
    const PolarClosedForms c(base_frame_);
    return gamma(W_, W_, [&](int p, int q, int r, int s) { return c.gamma_W(p, q, r, s); }, i, j, k, l);
  }
  cplx gamma_W_bar(int i, int j, int k, int l) const {
    const PolarClosedForms c(base_frame_);
    return gamma(W_, Wbar_, [&](int p, int q, int r, int s) { return c.gamma_W_bar(p, q, r, s); }, i, j, k, l);
  }
  cplx drift_W(int i, int j) const {
    const PolarClosedForms c(base_frame_);
    return drift(W_, [&](int p, int q) { return c.drift_W(p, q); }, i, j);
  }
  cplx gamma_V(int i, int j, int k, int l) const {
    return gamma(V_, V_, [&](int p, int q, int r, int s) { return base_.gamma_V(p, q, r, s); }, i, j, k, l);
  }
  cplx drift_V(int i, int j) const {
    return drift(V_, [&](int p, int q) { return base_.drift_V(p, q); }, i, j);
  }
  cplx gamma_U_V(int i, int j, int k, int l) const {
    return gamma(U_, V_, [&](int p, int q, int r, int s) { return base_.gamma_U_V(p, q, r, s); }, i, j, k, l);
  }
  cplx gamma_V_N(int i, int j, int k, int l) const {
    return gamma(V_, N_, [&](int p, int q, int r, int s) { return base_.gamma_V_N(p, q, r, s); }, i, j, k, l);
  }
  cplx gamma_Vbar_N(int i, int j, int k, int l) const {
    return gamma(Vbar_, N_, [&](int p, int q, int r, int s) { return base_.gamma_Vbar_N(p, q, r, s); }, i, j, k,
                 l);
  }
  cplx gamma_U_W(int i, int j, int k, int l) const {
    return gamma(U_, W_, [&](int p, int q, int r, int s) { return base_.gamma_U_W(p, q, r, s); }, i, j, k, l);
  }

 private:
  template <class Fn>
  cplx gamma(const Congruence& a, const Congruence& b, Fn base, int i, int j, int k, int l) const {
    cplx g = 0.0;
    for (int p = 0; p < d_; ++p)
      for (int q = 0; q < d_; ++q) {
        const cplx left = a.P(i, p) * a.Q(q, j);
        if (left == 0.0) continue;
        for (int r = 0; r < d_; ++r)
          for (int s = 0; s < d_; ++s) {
            const cplx v = base(p, q, r, s);
            if (v != 0.0) g += left * b.P(k, r) * b.Q(s, l) * v;
          }
      }
    return g;
  }
  template <class Fn>
  cplx drift(const Congruence& a, Fn base, int i, int j) const {
    cplx g = 0.0;
    for (int p = 0; p < d_; ++p)
      for (int q = 0; q < d_; ++q) g += a.P(i, p) * a.Q(q, j) * base(p, q);
    return g;
  }

  PolarFrame base_frame_;
  PolarBase base_;
  int d_;
  Congruence N_, V_, Vbar_, U_, Ubar_, W_, Wbar_;
};

// ---------------------------------------------------------------------------
// Degenerate rank-one model: (x, Z^(1..d-1)) with the radial part above and model I on the
// rank-one projectors, A_pq = r_pq.

struct DegenerateDirichlet {
  ModelIParams model;        // n = d - 1; only well-formed for d >= 2
  RealVector radial_drift;
  bool integrable = false;   // reversible measure has finite mass
};

inline DegenerateDirichlet degenerate_dirichlet_params(const PolarFrame& f) {
  const int d = f.d();
  DegenerateDirichlet out;
  out.model.n = d - 1;
  out.model.d = d;
  out.model.A = polar_r(f.x);
  out.model.a = RealVector::Constant(d, 2.0 - d);
  out.radial_drift = polar_radial_drift(f.x);
  out.integrable = d == 1;
  return out;
}

inline MatrixPoint projector_point(const std::vector<ComplexMatrix>& z) {
  MatrixPoint out;
  for (const auto& m : z) out.push_back(HermitianMatrix::symmetrize(m));
  return out;
}

// Projectors Y^(k) = W_k W_k* onto the columns of W.
inline std::vector<ComplexMatrix> w_projectors(const PolarFrame& f) {
  std::vector<ComplexMatrix> y;
  for (int k = 0; k < f.d(); ++k) y.push_back(f.W.col(k) * f.W.col(k).adjoint());
  return y;
}

// (Z^(1)_11, ..., Z^(d-1)_11) = (|U_11|^2, ..., |U_1,d-1|^2).
inline RealVector scalar_projection_v(const PolarFrame& f) {
  RealVector v(f.d() - 1);
  for (int k = 0; k + 1 < f.d(); ++k) v(k) = f.Z[k](0, 0).real();
  return v;
}

// Operator of v from the model I template at d = 1: twice the scalar L_{A,a} with A = r, a = 1.
inline Pushforward scalar_v_operator(const PolarFrame& f) {
  const int n = f.d() - 1;
  if (n < 1) throw InvalidArgument("scalar_v_operator: need d >= 2");
  const RealVector v = scalar_projection_v(f);
  const RealMatrix A = polar_r(f.x);
  return {2.0 * gamma_simplex(A, v), 2.0 * drift_simplex(A, RealVector::Ones(n + 1), v)};
}

// ---------------------------------------------------------------------------
// Verification

// Ginibre matrix with min_i x_i > min_ratio * max x and eigenvalue gaps of H above rel_gap * max X.
inline ComplexMatrix sample_separated_ginibre(int d, Rng& rng, double rel_gap = 0.05, double min_ratio = 0.1) {
  for (;;) {
    const ComplexMatrix m = complex_gaussian(d, d, rng);
    const EigenFrame ef = hermitian_eigen(HermitianMatrix::symmetrize(m.adjoint() * m), 0.0);
    const double top = ef.values(d - 1);
    if (ef.values(0) <= min_ratio * min_ratio * top) continue;
    if (d == 1 || ef.min_gap() > rel_gap * top) return m;
  }
}

namespace detail {

struct PolarIndex {
  int d;
  int block(int b) const { return b * d * d; }
  int m() const { return block(0); }
  int H() const { return block(1); }
  int N() const { return block(2); }
  int U() const { return block(3); }
  int Ubar() const { return block(4); }
  int W() const { return block(5); }
  int Wbar() const { return block(6); }
  int V() const { return block(7); }
  int Z(int p) const { return block(8 + p); }
  int Y(int p) const { return block(8 + d + p); }
  int x() const { return block(8 + 2 * d); }
  int size() const { return x() + d; }
  int at(int base, int i, int j) const { return base + i * d + j; }
};

inline ComplexVector polar_flatten(const PolarFrame& f, const PolarIndex& ix) {
  const int d = f.d();
  ComplexVector v(ix.size());
  auto put = [&](int base, const ComplexMatrix& a) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) v(ix.at(base, i, j)) = a(i, j);
  };
  put(ix.m(), f.m);
  put(ix.H(), f.H);
  put(ix.N(), f.N);
  put(ix.U(), f.U);
  put(ix.Ubar(), f.U.conjugate());
  put(ix.W(), f.W);
  put(ix.Wbar(), f.W.conjugate());
  put(ix.V(), f.V);
  const auto y = w_projectors(f);
  for (int p = 0; p < d; ++p) {
    put(ix.Z(p), f.Z[p]);
    put(ix.Y(p), y[p]);
  }
  for (int i = 0; i < d; ++i) v(ix.x() + i) = f.x(i);
  return v;
}

}  // namespace detail

// Every closed form of the polar system against the pushforward of the complex Brownian
// matrix at random Ginibre frames, U anchored at each base point.
inline VerificationReport verify_polar_system(int d, int n_frames, Rng& rng, double tol_gamma = 1e-6,
                                              double tol_drift = 1e-4) {
  if (d < 1) throw InvalidArgument("verify_polar_system: d must be >= 1");
  const detail::PolarIndex ix{d};
  const DiffusionModel ambient = complex_bm_ambient(d);

  struct Point {
    PolarFrame frame;
  };
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

  std::vector<Spec> specs;
  auto add = [&](std::string id, std::string formula, double tol, auto fn) {
    specs.push_back({std::move(id), std::move(formula), tol, [fn](const Point& pt, const ComplexTable& t, Residual& r) {
                       fn(pt.frame, PolarClosedForms(pt.frame), t, r);
                     }});
  };
  using F = const PolarFrame&;
  using C = const PolarClosedForms&;
  using T = const ComplexTable&;

  add("polar.m.gamma", "Gamma(m_ij, m_kl) = 0, Gamma(m_ij, conj m_kl) = 2 delta_ik delta_jl", tol_gamma,
      [=](F, C, T t, Residual& r) {
        entries4([&](int i, int j, int k, int l) {
          r.add(0.0, t.gamma(ix.at(ix.m(), i, j), ix.at(ix.m(), k, l)));
          r.add(i == k && j == l ? 2.0 : 0.0, t.gamma_bar(ix.at(ix.m(), i, j), ix.at(ix.m(), k, l)));
        });
      });
  add("polar.m.generator", "L(m_ij) = 0", tol_drift,
      [=](F, C, T t, Residual& r) { entries2([&](int i, int j) { r.add(0.0, t.drift(ix.at(ix.m(), i, j))); }); });
  add("polar.H.gamma", "Gamma(H_ij, H_kl) = 2(delta_jk H_il + delta_il H_kj)", tol_gamma,
      [=](F, C c, T t, Residual& r) {
        entries4([&](int i, int j, int k, int l) {
          r.add(c.gamma_H(i, j, k, l), t.gamma(ix.at(ix.H(), i, j), ix.at(ix.H(), k, l)));
        });
      });
  add("polar.H.generator", "L(H_ij) = 4 d delta_ij", tol_drift, [=](F, C c, T t, Residual& r) {
    entries2([&](int i, int j) { r.add(c.drift_H(i, j), t.drift(ix.at(ix.H(), i, j))); });
  });
  add("polar.N.gamma", "Gamma(N_ij, N_kl) = sum_rs 2(x_r^2+x_s^2)/(x_r+x_s)^2 U_ir conj(U_js) U_ks conj(U_lr)",
      tol_gamma, [=](F, C c, T t, Residual& r) {
        entries4([&](int i, int j, int k, int l) {
          r.add(c.gamma_N(i, j, k, l), t.gamma(ix.at(ix.N(), i, j), ix.at(ix.N(), k, l)));
        });
      });
  add("polar.N.generator", "L(N_ij) = 4 sum_rs x_s/(x_r+x_s)^2 U_ir conj(U_jr)", tol_drift,
      [=](F, C c, T t, Residual& r) {
        entries2([&](int i, int j) { r.add(c.drift_N(i, j), t.drift(ix.at(ix.N(), i, j))); });
      });
  add("polar.x.gamma", "Gamma(x_i, x_j) = delta_ij", tol_gamma, [=](F, C c, T t, Residual& r) {
    entries2([&](int i, int j) { r.add(c.gamma_x(i, j), t.gamma(ix.x() + i, ix.x() + j)); });
  });
  add("polar.x.generator", "L(x_i) = 1/x_i + 4 x_i sum_{s!=i} 1/(x_i^2 - x_s^2)", tol_drift,
      [=](F, C c, T t, Residual& r) {
        for (int i = 0; i < d; ++i) r.add(c.drift_x(i), t.drift(ix.x() + i));
      });
  add("polar.U.gamma", "Gamma(U_ij, U_kl) = -r_lj U_il U_kj", tol_gamma, [=](F, C c, T t, Residual& r) {
    entries4([&](int i, int j, int k, int l) {
      r.add(c.gamma_U(i, j, k, l), t.gamma(ix.at(ix.U(), i, j), ix.at(ix.U(), k, l)));
    });
  });
  add("polar.U.gamma_bar", "Gamma(U_ij, conj U_kl) = delta_lj sum_s r_js U_is conj(U_ks)", tol_gamma,
      [=](F, C c, T t, Residual& r) {
        entries4([&](int i, int j, int k, int l) {
          r.add(c.gamma_U_bar(i, j, k, l), t.gamma(ix.at(ix.U(), i, j), ix.at(ix.Ubar(), k, l)));
        });
      });
  add("polar.U.generator", "L(U_ij) = -U_ij sum_{s!=j} r_js", tol_drift, [=](F, C c, T t, Residual& r) {
    entries2([&](int i, int j) { r.add(c.drift_U(i, j), t.drift(ix.at(ix.U(), i, j))); });
  });
  add("polar.Ubar.generator", "L(conj U_ij) = -conj(U_ij) sum_{s!=j} r_js", tol_drift,
      [=](F, C c, T t, Residual& r) {
        entries2([&](int i, int j) { r.add(std::conj(c.drift_U(i, j)), t.drift(ix.at(ix.Ubar(), i, j))); });
      });
  add("polar.W.gamma", "Gamma(W_ij, W_kl) = omega_jl W_il W_kj", tol_gamma, [=](F, C c, T t, Residual& r) {
    entries4([&](int i, int j, int k, int l) {
      r.add(c.gamma_W(i, j, k, l), t.gamma(ix.at(ix.W(), i, j), ix.at(ix.W(), k, l)));
    });
  });
  add("polar.W.gamma_bar", "Gamma(W_ij, conj W_kl) = -delta_jl sum_s omega_js W_is conj(W_ks)", tol_gamma,
      [=](F, C c, T t, Residual& r) {
        entries4([&](int i, int j, int k, int l) {
          r.add(c.gamma_W_bar(i, j, k, l), t.gamma(ix.at(ix.W(), i, j), ix.at(ix.Wbar(), k, l)));
        });
      });
  add("polar.W.generator", "L(W_ij) = sum_s omega_sj W_ij", tol_drift, [=](F, C c, T t, Residual& r) {
    entries2([&](int i, int j) { r.add(c.drift_W(i, j), t.drift(ix.at(ix.W(), i, j))); });
  });
  add("polar.Wbar.generator", "L(conj W_ij) = sum_s omega_sj conj(W_ij)", tol_drift,
      [=](F, C c, T t, Residual& r) {
        entries2([&](int i, int j) { r.add(std::conj(c.drift_W(i, j)), t.drift(ix.at(ix.Wbar(), i, j))); });
      });
  add("polar.W_x.gamma", "Gamma(W_ij, x_k) = 0", tol_gamma, [=](F, C, T t, Residual& r) {
    entries2([&](int i, int j) {
      for (int k = 0; k < d; ++k) r.add(0.0, t.gamma(ix.at(ix.W(), i, j), ix.x() + k));
    });
  });
  add("polar.U_x.gamma", "Gamma(U_ij, x_k) = 0", tol_gamma, [=](F, C, T t, Residual& r) {
    entries2([&](int i, int j) {
      for (int k = 0; k < d; ++k) r.add(0.0, t.gamma(ix.at(ix.U(), i, j), ix.x() + k));
    });
  });

  // V brackets are known at (Id, Id) and transported.
  auto add_t = [&](std::string id, std::string formula, double tol, auto fn) {
    specs.push_back({std::move(id), std::move(formula), tol, [fn](const Point& pt, const ComplexTable& t, Residual& r) {
                       fn(PolarTransport(pt.frame.x, pt.frame.V, pt.frame.U), t, r);
                     }});
  };
  using P = const PolarTransport&;
  add_t("polar.V.gamma", "Gamma(V_ij, V_kl) = -4/(x_i+x_j)^2 delta_il delta_kj at (Id, Id), transported", tol_gamma,
        [=](P c, T t, Residual& r) {
          entries4([&](int i, int j, int k, int l) {
            r.add(c.gamma_V(i, j, k, l), t.gamma(ix.at(ix.V(), i, j), ix.at(ix.V(), k, l)));
          });
        });
  add_t("polar.V.generator", "L(V_ij) = -4 sum_s 1/(x_i+x_s)^2 delta_ij at (Id, Id), transported", tol_drift,
        [=](P c, T t, Residual& r) {
          entries2([&](int i, int j) { r.add(c.drift_V(i, j), t.drift(ix.at(ix.V(), i, j))); });
        });
  add_t("polar.U_V.gamma", "Gamma(U_ij, V_kl) = 2/(x_i+x_j)^2 delta_il delta_kj (i != j) at (Id, Id), transported",
        tol_gamma, [=](P c, T t, Residual& r) {
          entries4([&](int i, int j, int k, int l) {
            r.add(c.gamma_U_V(i, j, k, l), t.gamma(ix.at(ix.U(), i, j), ix.at(ix.V(), k, l)));
          });
        });
  add_t("polar.V_N.gamma", "Gamma(V_ij, N_kl) = 2(x_i-x_j)/(x_i+x_j)^2 delta_il delta_jk at (Id, Id), transported",
        tol_gamma, [=](P c, T t, Residual& r) {
          entries4([&](int i, int j, int k, int l) {
            r.add(c.gamma_V_N(i, j, k, l), t.gamma(ix.at(ix.V(), i, j), ix.at(ix.N(), k, l)));
          });
        });
  add_t("polar.Vbar_N.gamma",
        "Gamma(conj V_ij, N_kl) = 2(x_i-x_j)/(x_i+x_j)^2 delta_ik delta_jl at (Id, Id), transported", tol_gamma,
        [=](P c, T t, Residual& r) {
          // Gamma(conj V, N) = conj Gamma(V, conj N).
          entries4([&](int i, int j, int k, int l) {
            r.add(c.gamma_Vbar_N(i, j, k, l), std::conj(t.gamma_bar(ix.at(ix.V(), i, j), ix.at(ix.N(), k, l))));
          });
        });
  add_t("polar.U_W.gamma",
        "Gamma(U_ij, W_kl) = -4 x_i x_j/(x_i^2-x_j^2)^2 delta_il delta_kj (i != j) at (Id, Id), transported",
        tol_gamma, [=](P c, T t, Residual& r) {
          entries4([&](int i, int j, int k, int l) {
            r.add(c.gamma_U_W(i, j, k, l), t.gamma(ix.at(ix.U(), i, j), ix.at(ix.W(), k, l)));
          });
        });

  // Rank-one model on Z and the same template on Y.
  auto add_rank_one = [&](std::string id, bool use_w) {
    auto pick = [use_w, ix](int p) { return use_w ? ix.Y(p) : ix.Z(p); };
    specs.push_back({id + ".gamma", "model I Gamma on rank-one projectors with A_pq = r_pq", tol_gamma,
                     [=](const Point& pt, const ComplexTable& t, Residual& r) {
                       const DegenerateDirichlet dd = degenerate_dirichlet_params(pt.frame);
                       const MatrixPoint full = projector_point(use_w ? w_projectors(pt.frame) : pt.frame.Z);
                       for (int p = 0; p < d; ++p)
                         for (int q = 0; q < d; ++q)
                           entries4([&](int i, int j, int k, int l) {
                             r.add(model1_gamma(dd.model, full, p, i, j, q, k, l),
                                   t.gamma(ix.at(pick(p), i, j), ix.at(pick(q), k, l)));
                           });
                     }});
    specs.push_back({id + ".generator", "L(Z^p_ij) = 2 sum_q r_pq (Z^q_ij - Z^p_ij), model I with a_p = 2 - d",
                     tol_drift,
                     [=](const Point& pt, const ComplexTable& t, Residual& r) {
                       const DegenerateDirichlet dd = degenerate_dirichlet_params(pt.frame);
                       const MatrixPoint full = projector_point(use_w ? w_projectors(pt.frame) : pt.frame.Z);
                       for (int p = 0; p < d; ++p)
                         entries2([&](int i, int j) {
                           r.add(model1_drift(dd.model, full, p, i, j), t.drift(ix.at(pick(p), i, j)));
                         });
                     }});
  };
  if (d >= 2) {
    add_rank_one("polar.Z", false);
    add_rank_one("polar.Y", true);
    add("polar.Z_x.gamma", "Gamma(Z^p_ij, x_k) = 0", tol_gamma, [=](F, C, T t, Residual& r) {
      for (int p = 0; p < d; ++p)
        entries2([&](int i, int j) {
          for (int k = 0; k < d; ++k) r.add(0.0, t.gamma(ix.at(ix.Z(p), i, j), ix.x() + k));
        });
    });
    add("polar.v.gamma", "Gamma(v_p, v_q) = 2 Gamma_simplex(A = r) at v_p = Z^p_11", tol_gamma,
        [=](F f, C, T t, Residual& r) {
          const RealMatrix g = scalar_v_operator(f).gamma;
          for (int p = 0; p + 1 < d; ++p)
            for (int q = 0; q + 1 < d; ++q) r.add(g(p, q), t.gamma(ix.at(ix.Z(p), 0, 0), ix.at(ix.Z(q), 0, 0)));
        });
    add("polar.v.generator", "L(v_p) = 2 sum_q r_pq (v_q - v_p)", tol_drift, [=](F f, C, T t, Residual& r) {
      const RealVector b = scalar_v_operator(f).drift;
      for (int p = 0; p + 1 < d; ++p) r.add(b(p), t.drift(ix.at(ix.Z(p), 0, 0)));
    });
  }

  std::function<Point(int)> sample = [&](int) { return Point{polar_parts(sample_separated_ginibre(d, rng), 0.0)}; };
  std::function<ComplexTable(const Point&)> push = [&](const Point& pt) {
    const ComplexMatrix anchor = pt.frame.U;
    return complex_pushforward(
        ambient,
        [&](const RealVector& y) { return detail::polar_flatten(polar_parts(unrealify_general(y, d, d), 0.0, &anchor), ix); },
        realify_general(pt.frame.m));
  };
  return run_identity_specs<Point>("polar", specs, sample, push, n_frames);
}

}  // namespace mdp
