#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "mdp/calculus.hpp"
#include "mdp/poly.hpp"

namespace mdp {

// Scalar Dirichlet model on {x_i > 0, sum_{i<=n} x_i < 1} with x_{n+1} = 1 - sum x.
// A is (n+1) x (n+1) symmetric with non-negative off-diagonal entries (its diagonal
// never enters), a has n+1 positive entries.
struct SimplexParams {
  RealMatrix A;
  RealVector a;

  int n() const { return static_cast<int>(a.size()) - 1; }

  void validate() const {
    const int m = static_cast<int>(a.size());
    if (m < 2 || A.rows() != m || A.cols() != m) throw InvalidArgument("simplex: A must be (n+1)x(n+1)");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw InvalidArgument("simplex: A must be symmetric");
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j && A(i, j) < 0.0) throw InvalidArgument("simplex: A must be non-negative off the diagonal");
  }
};

inline RealVector simplex_full(const RealVector& x) {
  RealVector full(x.size() + 1);
  full.head(x.size()) = x;
  full(x.size()) = 1.0 - x.sum();
  return full;
}

inline bool in_open_simplex(const RealVector& x) {
  return (x.array() > 0.0).all() && x.sum() < 1.0;
}

// Gamma(x_i, x_j) = -A_ij x_i x_j + delta_ij x_i sum_k A_ik x_k, k up to n+1.
inline RealMatrix gamma_simplex(const RealMatrix& A, const RealVector& x) {
  const int n = static_cast<int>(x.size());
  const RealVector full = simplex_full(x);
  RealMatrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = -A(i, j) * x(i) * x(j);
  for (int i = 0; i < n; ++i) g(i, i) += x(i) * A.row(i).dot(full);
  return g;
}

// L(x_i) = sum_j A_ij (a_i x_j - a_j x_i), j up to n+1.
inline RealVector drift_simplex(const RealMatrix& A, const RealVector& a, const RealVector& x) {
  const int n = static_cast<int>(x.size());
  const RealVector full = simplex_full(x);
  RealVector b(n);
  for (int i = 0; i < n; ++i) b(i) = a(i) * A.row(i).dot(full) - x(i) * A.row(i).dot(a);
  return b;
}

inline double log_multivariate_beta(const RealVector& a) {
  double s = -std::lgamma(a.sum());
  for (int i = 0; i < a.size(); ++i) s += std::lgamma(a(i));
  return s;
}

inline double dirichlet_log_density(const RealVector& a, const RealVector& x) {
  if (!in_open_simplex(x)) throw DomainError("dirichlet density: point outside the open simplex");
  const RealVector full = simplex_full(x);
  double s = -log_multivariate_beta(a);
  for (int i = 0; i < full.size(); ++i) s += (a(i) - 1.0) * std::log(full(i));
  return s;
}

inline double dirichlet_density(const RealVector& a, const RealVector& x) {
  return std::exp(dirichlet_log_density(a, x));
}

inline RealVector dirichlet_grad_log_density(const RealVector& a, const RealVector& x) {
  const int n = static_cast<int>(x.size());
  const double last = 1.0 - x.sum();
  RealVector g(n);
  for (int i = 0; i < n; ++i) g(i) = (a(i) - 1.0) / x(i) - (a(n) - 1.0) / last;
  return g;
}

inline DiffusionModel make_simplex_model(const SimplexParams& p) {
  p.validate();
  return {p.n(), [A = p.A](const RealVector& x) { return gamma_simplex(A, x); },
          [A = p.A, a = p.a](const RealVector& x) { return drift_simplex(A, a, x); }, in_open_simplex};
}

// Uniform point of the open simplex conditioned to stay `margin` away from every face.
inline RealVector sample_simplex_interior(int n, Rng& rng, double margin = 0.02) {
  for (;;) {
    RealVector e(n + 1);
    for (int i = 0; i <= n; ++i) e(i) = -std::log(rng.uniform());
    e /= e.sum();
    if (e.minCoeff() > margin) return e.head(n);
  }
}

// Exact polynomial form of the scalar model in variables x1..xn.
inline PolyOperator simplex_poly_operator(const std::vector<std::vector<Rational>>& A,
                                          const std::vector<Rational>& a) {
  const int n = static_cast<int>(a.size()) - 1;
  std::vector<std::string> vars;
  for (int i = 0; i < n; ++i) vars.push_back("x" + std::to_string(i + 1));
  std::vector<MultiPoly> x;
  MultiPoly last = MultiPoly::constant(vars, 1);
  for (int i = 0; i < n; ++i) {
    x.push_back(MultiPoly::variable(vars, i));
    last = last - x.back();
  }
  x.push_back(last);
  PolyOperator op;
  op.gamma.assign(n, std::vector<MultiPoly>(n, MultiPoly(vars)));
  op.drift.assign(n, MultiPoly(vars));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) op.gamma[i][j] = x[i] * x[j] * Rational(-A[i][j]);
    for (int k = 0; k <= n; ++k) {
      op.gamma[i][i] = op.gamma[i][i] + x[i] * x[k] * A[i][k];
      op.drift[i] = op.drift[i] + x[k] * (A[i][k] * a[i]) - x[i] * (A[i][k] * a[k]);
    }
  }
  return op;
}

// Faces x_1, ..., x_n and 1 - sum x of the simplex.
inline std::vector<MultiPoly> simplex_faces(int n) {
  std::vector<std::string> vars;
  for (int i = 0; i < n; ++i) vars.push_back("x" + std::to_string(i + 1));
  std::vector<MultiPoly> faces;
  MultiPoly last = MultiPoly::constant(vars, 1);
  for (int i = 0; i < n; ++i) {
    faces.push_back(MultiPoly::variable(vars, i));
    last = last - faces.back();
  }
  faces.push_back(last);
  return faces;
}

// ---------------------------------------------------------------------------
// Ambient constructions projecting onto the scalar model.

// Blocks I_1..I_k of {0..N-1} of the given sizes.
struct Partition {
  std::vector<int> sizes;

  int total() const { return std::accumulate(sizes.begin(), sizes.end(), 0); }
  int blocks() const { return static_cast<int>(sizes.size()); }
  std::vector<int> block_of() const {
    std::vector<int> b;
    for (int i = 0; i < blocks(); ++i) b.insert(b.end(), sizes[i], i);
    return b;
  }
};

namespace detail {

// Co-metric and drift of (1/4) sum_{i<j} A_ij sum_{p in I_i, q in I_j} (y_p d_q - y_q d_p)^2.
inline void block_rotation_operator(const Partition& part, const RealMatrix& A, const RealVector& y,
                                    RealMatrix& g, RealVector& b) {
  const int n = part.total();
  const std::vector<int> blk = part.block_of();
  g = RealMatrix::Zero(n, n);
  b = RealVector::Zero(n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      if (blk[p] >= blk[q]) continue;
      const double w = 0.25 * A(blk[p], blk[q]);
      RealVector v = RealVector::Zero(n);
      v(q) = y(p);
      v(p) = -y(q);
      g += w * v * v.transpose();
      b(p) -= w * y(p);
      b(q) -= w * y(q);
    }
}

}  // namespace detail

// Sphere S^{N-1} with (1/4) sum_{i<j} A_ij L_{i,j}; x_i = sum_{p in I_i} y_p^2 for
// i = 1..k-1 is the scalar model with the same A and a_i = |I_i| / 2.
inline DiffusionModel sphere_ambient(const Partition& part, const RealMatrix& A) {
  if (A.rows() != part.blocks()) throw InvalidArgument("sphere_ambient: A must match the partition");
  auto op = [part, A](const RealVector& y) {
    RealMatrix g;
    RealVector b;
    detail::block_rotation_operator(part, A, y, g, b);
    return std::make_pair(g, b);
  };
  return {part.total(), [op](const RealVector& y) { return op(y).first; },
          [op](const RealVector& y) { return op(y).second; },
          [](const RealVector& y) { return std::abs(y.norm() - 1.0) < 1e-9; }};
}

inline void require_on_sphere(const RealVector& y) {
  if (std::abs(y.norm() - 1.0) > 1e-9) throw OffSphereError("point is not on the unit sphere");
}

// Round spherical Laplacian on S^{N-1}.
inline DiffusionModel spherical_laplacian(int n) {
  return {n, [n](const RealVector& y) { return RealMatrix(RealMatrix::Identity(n, n) - y * y.transpose()); },
          [n](const RealVector& y) { return RealVector(-(n - 1) * y); }, nullptr};
}

inline ProjectionMap sphere_projection(const Partition& part) {
  const int k = part.blocks();
  const std::vector<int> blk = part.block_of();
  return {part.total(), k - 1, [k, blk](const RealVector& y) {
            RealVector x = RealVector::Zero(k - 1);
            for (int p = 0; p < y.size(); ++p)
              if (blk[p] < k - 1) x(blk[p]) += y(p) * y(p);
            return x;
          }};
}

inline RealVector sphere_parameters(const Partition& part) {
  RealVector a(part.blocks());
  for (int i = 0; i < part.blocks(); ++i) a(i) = 0.5 * part.sizes[i];
  return a;
}

inline RealVector sample_sphere(int n, Rng& rng) {
  RealVector y(n);
  for (int i = 0; i < n; ++i) y(i) = rng.gaussian();
  return y / y.norm();
}

// Product of Laguerre operators y d^2 + (a_i - y) d on (0, inf)^{n+1}.
inline DiffusionModel laguerre_ambient(const RealVector& a) {
  const int m = static_cast<int>(a.size());
  return {m, [](const RealVector& y) { return RealMatrix(y.asDiagonal()); },
          [a](const RealVector& y) { return RealVector(a - y); },
          [](const RealVector& y) { return (y.array() > 0.0).all(); }};
}

// (S, z_1..z_n) with S = sum y, z_i = y_i / S.
inline ProjectionMap laguerre_projection(int n) {
  return {n + 1, n + 1, [n](const RealVector& y) {
            RealVector out(n + 1);
            const double s = y.sum();
            out(0) = s;
            out.tail(n) = y.head(n) / s;
            return out;
          }};
}

// Warped product: Gamma(S,S) = S, L(S) = |a| - S, Gamma(S,z) = 0, and on z the
// scalar model with A = 1 divided by S.
inline void laguerre_image(const RealVector& a, const RealVector& y, RealMatrix& g, RealVector& b) {
  const int n = static_cast<int>(a.size()) - 1;
  const double s = y.sum();
  const RealVector z = y.head(n) / s;
  const RealMatrix ones = RealMatrix::Ones(n + 1, n + 1);
  g = RealMatrix::Zero(n + 1, n + 1);
  b = RealVector(n + 1);
  g(0, 0) = s;
  b(0) = a.sum() - s;
  g.bottomRightCorner(n, n) = gamma_simplex(ones, z) / s;
  b.tail(n) = drift_simplex(ones, a, z) / s;
}

// d_r^2 + ((N-1)/r - r) d_r + (1/(4 r^2)) sum_{i<j} A_ij L_{i,j} in Cartesian coordinates.
inline DiffusionModel ou_warped_ambient(const Partition& part, const RealMatrix& A) {
  const int n = part.total();
  auto op = [part, A, n](const RealVector& y, RealMatrix& g, RealVector& b) {
    const double r2 = y.squaredNorm();
    const double r = std::sqrt(r2);
    detail::block_rotation_operator(part, A, y, g, b);
    g /= r2;
    b /= r2;
    g += y * y.transpose() / r2;
    b += ((n - 1) / r - r) * y / r;
  };
  return {n,
          [op](const RealVector& y) {
            RealMatrix g;
            RealVector b;
            op(y, g, b);
            return g;
          },
          [op](const RealVector& y) {
            RealMatrix g;
            RealVector b;
            op(y, g, b);
            return b;
          },
          [](const RealVector& y) { return y.norm() > 0.0; }};
}

inline DiffusionModel ou_ambient(int n) {
  return {n, [n](const RealVector&) { return RealMatrix(RealMatrix::Identity(n, n)); },
          [](const RealVector& y) { return RealVector(-y); }, nullptr};
}

// (r, z_1..z_{k-1}) with z_i = sum_{p in I_i} y_p^2 / r^2.
inline ProjectionMap radial_projection(const Partition& part) {
  const int k = part.blocks();
  const std::vector<int> blk = part.block_of();
  return {part.total(), k, [k, blk](const RealVector& y) {
            RealVector out = RealVector::Zero(k);
            const double r2 = y.squaredNorm();
            out(0) = std::sqrt(r2);
            for (int p = 0; p < y.size(); ++p)
              if (blk[p] < k - 1) out(1 + blk[p]) += y(p) * y(p) / r2;
            return out;
          }};
}

// Image on (r, z): Gamma(r,r) = 1, L(r) = (N-1)/r - r, Gamma(r,z) = 0 and the scalar
// model with a_i = |I_i| / 2 divided by r^2.
inline void ou_warped_image(const Partition& part, const RealMatrix& A, const RealVector& y, RealMatrix& g,
                            RealVector& b) {
  const int k = part.blocks();
  const RealVector rz = radial_projection(part).eval(y);
  const double r = rz(0);
  const RealVector z = rz.tail(k - 1);
  const RealVector a = sphere_parameters(part);
  g = RealMatrix::Zero(k, k);
  b = RealVector(k);
  g(0, 0) = 1.0;
  b(0) = (part.total() - 1) / r - r;
  g.bottomRightCorner(k - 1, k - 1) = gamma_simplex(A, z) / (r * r);
  b.tail(k - 1) = drift_simplex(A, a, z) / (r * r);
}

// ---------------------------------------------------------------------------
// One-dimensional reference models with their reversible densities.

struct ReferenceModel {
  DiffusionModel model;
  std::function<double(const RealVector&)> log_density;  // unnormalised
  std::function<RealVector(const RealVector&)> grad_log_density;
};

// f'' - x f', standard Gaussian.
inline ReferenceModel ou_1d() {
  return {{1, [](const RealVector&) { return RealMatrix::Ones(1, 1).eval(); },
           [](const RealVector& x) { return RealVector(-x); }, nullptr},
          [](const RealVector& x) { return -0.5 * x(0) * x(0); },
          [](const RealVector& x) { return RealVector(-x); }};
}

// x f'' + (a - x) f' on (0, inf), density x^{a-1} e^{-x}.
inline ReferenceModel laguerre_1d(double a) {
  return {{1, [](const RealVector& x) { return RealMatrix::Constant(1, 1, x(0)).eval(); },
           [a](const RealVector& x) { return RealVector::Constant(1, a - x(0)).eval(); },
           [](const RealVector& x) { return x(0) > 0.0; }},
          [a](const RealVector& x) { return (a - 1.0) * std::log(x(0)) - x(0); },
          [a](const RealVector& x) { return RealVector::Constant(1, (a - 1.0) / x(0) - 1.0).eval(); }};
}

// (1 - x^2) f'' - (a - b + (a + b) x) f' on (-1, 1), density (1-x)^{a-1} (1+x)^{b-1}.
inline ReferenceModel jacobi_1d(double a, double b) {
  return {{1, [](const RealVector& x) { return RealMatrix::Constant(1, 1, 1.0 - x(0) * x(0)).eval(); },
           [a, b](const RealVector& x) { return RealVector::Constant(1, -(a - b + (a + b) * x(0))).eval(); },
           [](const RealVector& x) { return std::abs(x(0)) < 1.0; }},
          [a, b](const RealVector& x) { return (a - 1.0) * std::log1p(-x(0)) + (b - 1.0) * std::log1p(x(0)); },
          [a, b](const RealVector& x) {
            return RealVector::Constant(1, -(a - 1.0) / (1.0 - x(0)) + (b - 1.0) / (1.0 + x(0))).eval();
          }};
}

}  // namespace mdp
