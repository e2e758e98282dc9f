#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include "mdp/errors.hpp"
#include "mdp/rng.hpp"

namespace mdp {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kDefaultGapTol = 1e-8;

// Hermitian by construction: every writer goes through set(), which mirrors the
// entry and keeps the diagonal real.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(int d) : m_(ComplexMatrix::Zero(d, d)) {}

  // Reads only the lower triangle and the real part of the diagonal.
  static HermitianMatrix from_lower(const ComplexMatrix& m) {
    HermitianMatrix h(static_cast<int>(m.rows()));
    for (int j = 0; j < m.cols(); ++j)
      for (int i = j; i < m.rows(); ++i) h.set(i, j, m(i, j));
    return h;
  }

  // Hermitian part (m + m*)/2; use when m is Hermitian up to rounding.
  static HermitianMatrix symmetrize(const ComplexMatrix& m) {
    return from_lower(0.5 * (m + m.adjoint()));
  }

  static HermitianMatrix identity(int d) {
    HermitianMatrix h(d);
    for (int i = 0; i < d; ++i) h.set(i, i, 1.0);
    return h;
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const ComplexMatrix& matrix() const { return m_; }
  cplx operator()(int i, int j) const { return m_(i, j); }

  void set(int i, int j, cplx v) {
    if (i == j) {
      m_(i, i) = cplx(v.real(), 0.0);
    } else {
      m_(i, j) = v;
      m_(j, i) = std::conj(v);
    }
  }

  HermitianMatrix operator+(const HermitianMatrix& o) const { return wrap(m_ + o.m_); }
  HermitianMatrix operator-(const HermitianMatrix& o) const { return wrap(m_ - o.m_); }
  HermitianMatrix operator*(double s) const { return wrap(m_ * s); }
  HermitianMatrix& operator+=(const HermitianMatrix& o) {
    m_ += o.m_;
    return *this;
  }

 private:
  static HermitianMatrix wrap(ComplexMatrix m) {
    HermitianMatrix h;
    h.m_ = std::move(m);
    return h;
  }
  ComplexMatrix m_;
};

// H = U diag(values) U*, values ascending, each column of U phase-fixed.
struct EigenFrame {
  RealVector values;
  ComplexMatrix vectors;

  int dim() const { return static_cast<int>(values.size()); }

  // Rank-one spectral projector U_p U_p*.
  HermitianMatrix projector(int p) const {
    return HermitianMatrix::from_lower(vectors.col(p) * vectors.col(p).adjoint());
  }

  double min_gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < dim(); ++i) g = std::min(g, values(i + 1) - values(i));
    return g;
  }
};

namespace detail {

inline void rotate_column_phase(ComplexMatrix& u, int k, cplx pivot) {
  const double r = std::abs(pivot);
  if (r == 0.0) return;
  u.col(k) *= std::conj(pivot) / r;
}

inline int largest_modulus_row(const ComplexMatrix& u, int k) {
  int best = 0;
  for (int i = 1; i < u.rows(); ++i)
    if (std::abs(u(i, k)) > std::abs(u(best, k))) best = i;
  return best;
}

}  // namespace detail

// Column k made to have a real non-negative entry at row k; when that entry is
// below 1e-14 in modulus the first largest-modulus entry is used instead.
inline void phase_fix_columns(ComplexMatrix& u) {
  for (int k = 0; k < u.cols(); ++k) {
    int row = (k < u.rows() && std::abs(u(k, k)) >= 1e-14) ? k : detail::largest_modulus_row(u, k);
    detail::rotate_column_phase(u, k, u(row, k));
    u(row, k) = cplx(u(row, k).real(), 0.0);
  }
}

// Re-phases each column so that (ref* u)_kk is real non-negative. With ref the
// frame at a base point this is a smooth gauge in a neighbourhood of it that
// coincides with phase_fix_columns at the base point.
inline void anchor_phases(ComplexMatrix& u, const ComplexMatrix& ref) {
  for (int k = 0; k < u.cols(); ++k) {
    cplx overlap = ref.col(k).dot(u.col(k));
    if (std::abs(overlap) < 1e-8) throw SpectralGapError("anchor frame too far from evaluation point");
    detail::rotate_column_phase(u, k, overlap);
  }
}

// Cyclic Jacobi rotations; stops once the off-diagonal Frobenius norm is below
// 1e-14 ||H|| and then runs one polishing sweep. gap_tol <= 0 disables the gap check.
inline EigenFrame hermitian_eigen(const HermitianMatrix& h, double gap_tol = kDefaultGapTol) {
  const int d = h.dim();
  ComplexMatrix a = h.matrix();
  ComplexMatrix v = ComplexMatrix::Identity(d, d);
  const double scale = a.norm();

  auto off_norm = [&] {
    double s = 0.0;
    for (int q = 1; q < d; ++q)
      for (int p = 0; p < q; ++p) s += std::norm(a(p, q));
    return std::sqrt(2.0 * s);
  };

  bool polished = false;
  for (int sweep = 0;; ++sweep) {
    if (off_norm() <= 1e-14 * scale) {
      if (polished) break;
      polished = true;
    }
    if (sweep > 100) throw Error("hermitian_eigen: Jacobi sweeps did not converge");
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const cplx apq = a(p, q);
        const double mod = std::abs(apq);
        if (mod == 0.0) continue;
        const cplx e = apq / mod;
        const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * mod);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const cplx gpp = c, gpq = s * e, gqp = -s * std::conj(e), gqq = c;
        for (int k = 0; k < d; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * gpp + akq * gqp;
          a(k, q) = akp * gpq + akq * gqq;
        }
        for (int k = 0; k < d; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(gpp) * apk + std::conj(gqp) * aqk;
          a(q, k) = std::conj(gpq) * apk + std::conj(gqq) * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (int k = 0; k < d; ++k) {
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * gpp + vkq * gqp;
          v(k, q) = vkp * gpq + vkq * gqq;
        }
      }
    }
  }

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i).real() < a(j, j).real(); });
  EigenFrame f{RealVector(d), ComplexMatrix(d, d)};
  for (int k = 0; k < d; ++k) {
    f.values(k) = a(order[k], order[k]).real();
    f.vectors.col(k) = v.col(order[k]);
  }
  phase_fix_columns(f.vectors);
  if (gap_tol > 0.0 && f.min_gap() < gap_tol)
    throw SpectralGapError("hermitian_eigen: eigenvalue gap below tolerance");
  return f;
}

inline ComplexMatrix reconstruct(const EigenFrame& f) {
  return f.vectors * f.values.cast<cplx>().asDiagonal() * f.vectors.adjoint();
}

inline HermitianMatrix spectral_apply(const EigenFrame& f, const RealVector& g) {
  return HermitianMatrix::symmetrize(f.vectors * g.cast<cplx>().asDiagonal() * f.vectors.adjoint());
}

// Principal square root; eigenvalues in [-1e-12 ||S||, 0) are clamped to zero.
inline HermitianMatrix sqrtm_psd(const HermitianMatrix& s) {
  EigenFrame f = hermitian_eigen(s, 0.0);
  const double tol = 1e-12 * std::max(1.0, f.values.cwiseAbs().maxCoeff());
  if (f.values.minCoeff() < -tol) throw NotPsdError("sqrtm_psd: matrix has a negative eigenvalue");
  return spectral_apply(f, f.values.cwiseMax(0.0).cwiseSqrt());
}

inline HermitianMatrix inverse_sqrtm_pd(const HermitianMatrix& s) {
  EigenFrame f = hermitian_eigen(s, 0.0);
  if (f.values.minCoeff() <= 1e-300) throw SingularError("inverse_sqrtm_pd: matrix is not positive definite");
  return spectral_apply(f, f.values.cwiseSqrt().cwiseInverse());
}

// Unitary polar factor M (M*M)^{-1/2}; with special=true the determinant phase is
// divided out so the result lies in SU(N).
inline ComplexMatrix unitary_retract(const ComplexMatrix& m, bool special = false) {
  EigenFrame f = hermitian_eigen(HermitianMatrix::symmetrize(m.adjoint() * m), 0.0);
  if (f.values.minCoeff() < 1e-24) throw SingularError("unitary_retract: smallest singular value below 1e-12");
  ComplexMatrix q = m * f.vectors * f.values.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() *
                    f.vectors.adjoint();
  if (special) {
    const cplx det = q.determinant();
    q *= std::polar(1.0, -std::arg(det) / static_cast<double>(q.rows()));
  }
  return q;
}

// Scaling and squaring with a Taylor series summed to machine precision.
inline ComplexMatrix expm(const ComplexMatrix& a) {
  const int n = static_cast<int>(a.rows());
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const ComplexMatrix b = a / std::ldexp(1.0, squarings);
  ComplexMatrix sum = ComplexMatrix::Identity(n, n);
  ComplexMatrix term = ComplexMatrix::Identity(n, n);
  for (int k = 1; k < 40; ++k) {
    term = term * b / static_cast<double>(k);
    sum += term;
    if (term.norm() <= 1e-18 * sum.norm()) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

// Entries (g1 + i g2)/sqrt(2), so E|z|^2 = 1.
inline ComplexMatrix complex_gaussian(int rows, int cols, Rng& rng) {
  ComplexMatrix g(rows, cols);
  const double s = std::sqrt(0.5);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      const double re = rng.gaussian();
      const double im = rng.gaussian();
      g(i, j) = cplx(s * re, s * im);
    }
  return g;
}

inline HermitianMatrix random_hermitian(int d, Rng& rng) {
  return HermitianMatrix::symmetrize(complex_gaussian(d, d, rng));
}

// Haar measure on U(N): QR of a Ginibre matrix with the phases of diag(R) removed.
inline ComplexMatrix haar_unitary(int n, Rng& rng) {
  Eigen::HouseholderQR<ComplexMatrix> qr(complex_gaussian(n, n, rng));
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& r = qr.matrixQR();
  for (int k = 0; k < n; ++k) {
    const cplx rk = r(k, k);
    if (std::abs(rk) > 0.0) q.col(k) *= rk / std::abs(rk);
  }
  return q;
}

inline double max_abs(const ComplexMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const RealMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace mdp
