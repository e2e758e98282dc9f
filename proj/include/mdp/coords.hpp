#pragma once

#include <string>
#include <vector>

#include "mdp/linalg.hpp"

namespace mdp {

// Real coordinates of a tuple of d x d Hermitian matrices. Per matrix: the d
// diagonal entries, then (Re, Im) of entry (i, j) for i < j in lexicographic order.
class HermitianLayout {
 public:
  struct Coord {
    int block, i, j;
    bool imaginary;
  };

  HermitianLayout(int blocks, int d) : blocks_(blocks), d_(d) {
    for (int k = 0; k < blocks; ++k) {
      for (int i = 0; i < d; ++i) coords_.push_back({k, i, i, false});
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          coords_.push_back({k, i, j, false});
          coords_.push_back({k, i, j, true});
        }
    }
  }

  int blocks() const { return blocks_; }
  int d() const { return d_; }
  int dim() const { return static_cast<int>(coords_.size()); }
  const Coord& coord(int a) const { return coords_[a]; }
  const std::vector<Coord>& coords() const { return coords_; }

  RealVector realify(const std::vector<HermitianMatrix>& z) const {
    if (static_cast<int>(z.size()) < blocks_) throw InvalidArgument("realify: too few blocks");
    RealVector x(dim());
    for (int a = 0; a < dim(); ++a) {
      const Coord& c = coords_[a];
      const cplx v = z[c.block](c.i, c.j);
      x(a) = c.imaginary ? v.imag() : v.real();
    }
    return x;
  }

  std::vector<HermitianMatrix> unrealify(const RealVector& x) const {
    if (x.size() != dim()) throw InvalidArgument("unrealify: dimension mismatch");
    std::vector<HermitianMatrix> z(blocks_, HermitianMatrix(d_));
    for (int a = 0; a < dim(); ++a) {
      const Coord& c = coords_[a];
      if (c.i == c.j) {
        z[c.block].set(c.i, c.i, x(a));
      } else if (!c.imaginary) {
        z[c.block].set(c.i, c.j, cplx(x(a), x(a + 1)));
      }
    }
    return z;
  }

  std::string name(int a, const std::string& prefix = "Z") const {
    const Coord& c = coords_[a];
    std::string s = prefix + std::to_string(c.block + 1) + "_" + std::to_string(c.i + 1) +
                    std::to_string(c.j + 1);
    if (c.i != c.j) s += c.imaginary ? "im" : "re";
    return s;
  }

  // Real co-metric and drift from complex entry formulas.
  // gamma(p,i,j,q,k,l) = Gamma(Z^p_ij, Z^q_kl), drift(p,i,j) = L(Z^p_ij).
  template <class GammaFn, class DriftFn>
  void realify_operator(GammaFn gamma, DriftFn drift, RealMatrix& g, RealVector& b) const;

 private:
  int blocks_, d_;
  std::vector<Coord> coords_;
};

// Real and imaginary parts of Gamma(X_a + iY_a, X_b + iY_b) from the two complex
// brackets gzz = Gamma(z_a, z_b) and gzc = Gamma(z_a, conj z_b).
struct RealBrackets {
  double xx, xy, yx, yy;
};

inline RealBrackets real_brackets(cplx gzz, cplx gzc) {
  return {0.5 * (gzz.real() + gzc.real()), 0.5 * (gzz.imag() - gzc.imag()),
          0.5 * (gzz.imag() + gzc.imag()), 0.5 * (gzc.real() - gzz.real())};
}

template <class GammaFn, class DriftFn>
void HermitianLayout::realify_operator(GammaFn gamma, DriftFn drift, RealMatrix& g, RealVector& b) const {
  const int n = dim();
  g.resize(n, n);
  b.resize(n);
  for (int a = 0; a < n; ++a) {
    const Coord& ca = coords_[a];
    const cplx la = drift(ca.block, ca.i, ca.j);
    b(a) = ca.imaginary ? la.imag() : la.real();
    for (int c = 0; c < n; ++c) {
      const Coord& cb = coords_[c];
      const cplx gzz = gamma(ca.block, ca.i, ca.j, cb.block, cb.i, cb.j);
      const cplx gzc = gamma(ca.block, ca.i, ca.j, cb.block, cb.j, cb.i);
      const RealBrackets r = real_brackets(gzz, gzc);
      g(a, c) = ca.imaginary ? (cb.imaginary ? r.yy : r.yx) : (cb.imaginary ? r.xy : r.xx);
    }
  }
}

// General complex matrix: (Re, Im) of each entry, row-major.
inline RealVector realify_general(const ComplexMatrix& m) {
  RealVector x(2 * m.size());
  int a = 0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      x(a++) = m(i, j).real();
      x(a++) = m(i, j).imag();
    }
  return x;
}

inline ComplexMatrix unrealify_general(const RealVector& x, int rows, int cols) {
  if (x.size() != 2 * rows * cols) throw InvalidArgument("unrealify_general: dimension mismatch");
  ComplexMatrix m(rows, cols);
  int a = 0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j, a += 2) m(i, j) = cplx(x(a), x(a + 1));
  return m;
}

// Real co-metric and drift of the entries of a general complex matrix, given
// gamma(i,j,k,l) = Gamma(u_ij, u_kl), gamma_bar(i,j,k,l) = Gamma(u_ij, conj u_kl)
// and drift(i,j) = L(u_ij).
template <class GammaFn, class GammaBarFn, class DriftFn>
void realify_general_operator(int rows, int cols, GammaFn gamma, GammaBarFn gamma_bar, DriftFn drift,
                              RealMatrix& g, RealVector& b) {
  const int n = 2 * rows * cols;
  g.resize(n, n);
  b.resize(n);
  for (int a = 0; a < rows * cols; ++a) {
    const int i = a / cols, j = a % cols;
    const cplx la = drift(i, j);
    b(2 * a) = la.real();
    b(2 * a + 1) = la.imag();
    for (int c = 0; c < rows * cols; ++c) {
      const int k = c / cols, l = c % cols;
      const RealBrackets r = real_brackets(gamma(i, j, k, l), gamma_bar(i, j, k, l));
      g(2 * a, 2 * c) = r.xx;
      g(2 * a, 2 * c + 1) = r.xy;
      g(2 * a + 1, 2 * c) = r.yx;
      g(2 * a + 1, 2 * c + 1) = r.yy;
    }
  }
}

// Complex brackets of K complex-valued functions whose real images are stored
// as (Re f_0, Im f_0, Re f_1, ...).
struct ComplexTable {
  ComplexMatrix gamma;      // Gamma(f_a, f_b)
  ComplexMatrix gamma_bar;  // Gamma(f_a, conj f_b)
  ComplexVector drift;      // L(f_a)

  static ComplexTable from_real(const RealMatrix& g, const RealVector& l) {
    const int k = static_cast<int>(l.size()) / 2;
    ComplexTable t{ComplexMatrix(k, k), ComplexMatrix(k, k), ComplexVector(k)};
    for (int a = 0; a < k; ++a) {
      t.drift(a) = cplx(l(2 * a), l(2 * a + 1));
      for (int b = 0; b < k; ++b) {
        const double rr = g(2 * a, 2 * b), ii = g(2 * a + 1, 2 * b + 1);
        const double ri = g(2 * a, 2 * b + 1), ir = g(2 * a + 1, 2 * b);
        t.gamma(a, b) = cplx(rr - ii, ri + ir);
        t.gamma_bar(a, b) = cplx(rr + ii, ir - ri);
      }
    }
    return t;
  }
};

inline RealVector split_complex(const ComplexVector& f) {
  RealVector x(2 * f.size());
  for (int a = 0; a < f.size(); ++a) {
    x(2 * a) = f(a).real();
    x(2 * a + 1) = f(a).imag();
  }
  return x;
}

}  // namespace mdp
