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

inline void require_special_unitary(const ComplexMatrix& u, double tol_unitary = 1e-10, double tol_det = 1e-8) {
  const int n = static_cast<int>(u.rows());
  if (u.cols() != n) throw OffGroupError("SU(N): matrix is not square");
  if ((u * u.adjoint() - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff() > tol_unitary)
    throw OffGroupError("SU(N): matrix is not unitary");
  if (std::abs(u.determinant() - 1.0) > tol_det) throw OffGroupError("SU(N): determinant is not 1");
}

// Column split of an N x N unitary: keep the first d rows, cut columns into
// consecutive blocks I_1..I_{n+1} of the given sizes.
struct Extraction {
  int d = 1;
  std::vector<int> sizes;

  int N() const { return std::accumulate(sizes.begin(), sizes.end(), 0); }
  int blocks() const { return static_cast<int>(sizes.size()) - 1; }  // n
  int offset(int p) const { return std::accumulate(sizes.begin(), sizes.begin() + p, 0); }
  int block_of(int column) const {
    for (int p = 0, o = 0; p < static_cast<int>(sizes.size()); o += sizes[p++])
      if (column < o + sizes[p]) return p;
    throw InvalidArgument("extraction: column out of range");
  }
  // Exponents of the image law, d_i - d + 1.
  RealVector parameters() const {
    RealVector a(sizes.size());
    for (size_t i = 0; i < sizes.size(); ++i) a(i) = sizes[i] - d + 1;
    return a;
  }

  void validate() const {
    if (sizes.size() < 2) throw InvalidArgument("extraction: need at least two column blocks");
    for (int s : sizes)
      if (s < 1) throw InvalidArgument("extraction: block sizes must be >= 1");
    if (d < 1 || d > N()) throw InvalidArgument("extraction: need 1 <= d <= N");
  }
};

// Z^(p) = W^(p) W^(p)* for p = 0..n, computed directly (the last block is not Id - sum).
inline MatrixPoint extract_all(const ComplexMatrix& u, const Extraction& ext) {
  MatrixPoint z;
  for (int p = 0; p <= ext.blocks(); ++p) {
    const auto w = u.block(0, ext.offset(p), ext.d, ext.sizes[p]);
    z.push_back(HermitianMatrix::symmetrize(w * w.adjoint()));
  }
  return z;
}

// The n free blocks Z^(1)..Z^(n).
inline MatrixPoint extract_Z(const ComplexMatrix& u, const Extraction& ext) {
  MatrixPoint z = extract_all(u, ext);
  z.pop_back();
  return z;
}

// Realified u -> realified (Z^(1), ..., Z^(n)).
inline ProjectionMap extraction_projection(const Extraction& ext) {
  const int N = ext.N();
  const HermitianLayout layout(ext.blocks(), ext.d);
  return {2 * N * N, layout.dim(),
          [ext, N, layout](const RealVector& x) { return layout.realify(extract_Z(unrealify_general(x, N, N), ext)); }};
}

// ---------------------------------------------------------------------------
// Casimir operator in closed form

inline cplx sun_gamma(const ComplexMatrix& u, int i, int j, int k, int l) {
  const double N = static_cast<double>(u.rows());
  return -u(i, l) * u(k, j) / (2.0 * N) + u(i, j) * u(k, l) / (2.0 * N * N);
}

inline cplx sun_gamma_bar(const ComplexMatrix& u, int i, int j, int k, int l) {
  const double N = static_cast<double>(u.rows());
  return ((i == k && j == l) ? 1.0 / (2.0 * N) : 0.0) - u(i, j) * std::conj(u(k, l)) / (2.0 * N * N);
}

inline cplx sun_drift(const ComplexMatrix& u, int i, int j) {
  const double N = static_cast<double>(u.rows());
  return -(N * N - 1.0) / (2.0 * N * N) * u(i, j);
}

inline DiffusionModel sun_ambient(int N) {
  if (N < 2) throw InvalidArgument("SU(N): need N >= 2");
  auto assemble = [N](const RealVector& x, RealMatrix& g, RealVector& b) {
    const ComplexMatrix u = unrealify_general(x, N, N);
    require_special_unitary(u);
    realify_general_operator(
        N, N, [&](int i, int j, int k, int l) { return sun_gamma(u, i, j, k, l); },
        [&](int i, int j, int k, int l) { return sun_gamma_bar(u, i, j, k, l); },
        [&](int i, int j) { return sun_drift(u, i, j); }, g, b);
  };
  return {2 * N * N,
          [assemble](const RealVector& x) {
            RealMatrix g;
            RealVector b;
            assemble(x, g, b);
            return g;
          },
          [assemble](const RealVector& x) {
            RealMatrix g;
            RealVector b;
            assemble(x, g, b);
            return b;
          },
          nullptr};
}

// ---------------------------------------------------------------------------
// Left-invariant vector fields: V_X f(u) = d/dt f(u exp(tX)) at t = 0.

enum class FieldKind { R, S, D };

inline ComplexMatrix field_matrix(int N, FieldKind kind, int i, int j) {
  ComplexMatrix x = ComplexMatrix::Zero(N, N);
  const cplx I(0.0, 1.0);
  switch (kind) {
    case FieldKind::R:
      x(j, i) = 1.0;
      x(i, j) = -1.0;
      break;
    case FieldKind::S:
      x(i, j) = I;
      x(j, i) = I;
      break;
    case FieldKind::D:
      x(i, i) = I;
      x(j, j) = -I;
      break;
  }
  return x;
}

// An operator sum_k w_k V_{X_k}^2 with carre du champ sum_k w_k V_{X_k} f V_{X_k} g.
struct WeightedField {
  ComplexMatrix X;
  double weight;
};

// (1/4N) sum_{i<j} (V_R^2 + V_S^2 + (2/N) V_D^2).
inline std::vector<WeightedField> casimir_fields(int N) {
  std::vector<WeightedField> f;
  const double w = 1.0 / (4.0 * N);
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      f.push_back({field_matrix(N, FieldKind::R, i, j), w});
      f.push_back({field_matrix(N, FieldKind::S, i, j), w});
      f.push_back({field_matrix(N, FieldKind::D, i, j), w * 2.0 / N});
    }
  return f;
}

// L^(pq) = sum_{i in I_p, j in I_q} V_R^2 + V_S^2 (+ (2/N) V_D^2), scaled by `scale`.
inline std::vector<WeightedField> lpq_fields(const Extraction& ext, int p, int q, double scale = 1.0,
                                             bool with_d = true) {
  const int N = ext.N();
  std::vector<WeightedField> f;
  for (int i = ext.offset(p); i < ext.offset(p) + ext.sizes[p]; ++i)
    for (int j = ext.offset(q); j < ext.offset(q) + ext.sizes[q]; ++j) {
      f.push_back({field_matrix(N, FieldKind::R, i, j), scale});
      f.push_back({field_matrix(N, FieldKind::S, i, j), scale});
      if (with_d) f.push_back({field_matrix(N, FieldKind::D, i, j), scale * 2.0 / N});
    }
  return f;
}

// (1/2) sum_{p<q} A_pq L^(pq), blocks up to n+1.
inline std::vector<WeightedField> weighted_lpq_fields(const Extraction& ext, const RealMatrix& A, bool with_d = true) {
  const int m = ext.blocks() + 1;
  if (A.rows() != m || A.cols() != m) throw InvalidArgument("weighted L^(pq): A must be (n+1)x(n+1)");
  std::vector<WeightedField> f;
  for (int p = 0; p < m; ++p)
    for (int q = p + 1; q < m; ++q) {
      if (A(p, q) < 0.0) throw InvalidArgument("weighted L^(pq): weights must be non-negative");
      if (A(p, q) == 0.0) continue;
      auto part = lpq_fields(ext, p, q, 0.5 * A(p, q), with_d);
      f.insert(f.end(), part.begin(), part.end());
    }
  return f;
}

// The field operator on realified u entries (exact, no differencing).
inline DiffusionModel field_operator(int N, std::vector<WeightedField> fields) {
  auto assemble = [N, fields](const RealVector& x, RealMatrix& g, RealVector& b) {
    const ComplexMatrix u = unrealify_general(x, N, N);
    ComplexMatrix gzz = ComplexMatrix::Zero(N * N, N * N), gzc = gzz;
    ComplexVector l = ComplexVector::Zero(N * N);
    for (const auto& f : fields) {
      const ComplexMatrix y = u * f.X;
      const ComplexMatrix y2 = y * f.X;
      ComplexVector v(N * N), v2(N * N);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          v(i * N + j) = y(i, j);
          v2(i * N + j) = y2(i, j);
        }
      gzz += f.weight * v * v.transpose();
      gzc += f.weight * v * v.adjoint();
      l += f.weight * v2;
    }
    realify_general_operator(
        N, N, [&](int i, int j, int k, int m) { return gzz(i * N + j, k * N + m); },
        [&](int i, int j, int k, int m) { return gzc(i * N + j, k * N + m); },
        [&](int i, int j) { return l(i * N + j); }, g, b);
  };
  return {2 * N * N,
          [assemble](const RealVector& x) {
            RealMatrix g;
            RealVector b;
            assemble(x, g, b);
            return g;
          },
          [assemble](const RealVector& x) {
            RealMatrix g;
            RealVector b;
            assemble(x, g, b);
            return b;
          },
          nullptr};
}

// First and second derivatives of every extracted block along u exp(tX):
// Z' = W1 W* + W W1*, Z'' = W2 W* + 2 W1 W1* + W W2*, with W1 = (uX)_ext, W2 = (uX^2)_ext.
struct FieldAction {
  std::vector<ComplexMatrix> first;   // V_X Z^(p), p = 0..n
  std::vector<ComplexMatrix> second;  // V_X^2 Z^(p)
};

inline FieldAction field_action(const ComplexMatrix& u, const Extraction& ext, const ComplexMatrix& X) {
  const ComplexMatrix y = u * X, y2 = y * X;
  FieldAction a;
  for (int p = 0; p <= ext.blocks(); ++p) {
    const int o = ext.offset(p), s = ext.sizes[p];
    const ComplexMatrix w = u.block(0, o, ext.d, s);
    const ComplexMatrix w1 = y.block(0, o, ext.d, s);
    const ComplexMatrix w2 = y2.block(0, o, ext.d, s);
    a.first.push_back(w1 * w.adjoint() + w * w1.adjoint());
    a.second.push_back(w2 * w.adjoint() + 2.0 * w1 * w1.adjoint() + w * w2.adjoint());
  }
  return a;
}

// Complex brackets of the extracted entries under a field operator.
struct ExtractedBrackets {
  int d = 1;
  // gamma[p][q](i*d+j, k*d+l) = Gamma(Z^p_ij, Z^q_kl); drift[p](i, j) = L(Z^p_ij); p, q up to n+1.
  std::vector<std::vector<ComplexMatrix>> gamma;
  std::vector<ComplexMatrix> drift;

  cplx g(int p, int i, int j, int q, int k, int l) const { return gamma[p][q](i * d + j, k * d + l); }
};

inline ExtractedBrackets extracted_brackets(const ComplexMatrix& u, const Extraction& ext,
                                            const std::vector<WeightedField>& fields) {
  const int m = ext.blocks() + 1, d = ext.d;
  ExtractedBrackets out;
  out.d = d;
  out.gamma.assign(m, std::vector<ComplexMatrix>(m, ComplexMatrix::Zero(d * d, d * d)));
  out.drift.assign(m, ComplexMatrix::Zero(d, d));
  for (const auto& f : fields) {
    const FieldAction a = field_action(u, ext, f.X);
    std::vector<ComplexVector> v(m);
    for (int p = 0; p < m; ++p) {
      v[p] = ComplexVector(d * d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) v[p](i * d + j) = a.first[p](i, j);
      out.drift[p] += f.weight * a.second[p];
    }
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) out.gamma[p][q] += f.weight * v[p] * v[q].transpose();
  }
  return out;
}

// Realified image on (Z^(1), ..., Z^(n)) coordinates.
inline Pushforward realify_brackets(const ExtractedBrackets& br, int n) {
  const HermitianLayout layout(n, br.d);
  Pushforward out;
  layout.realify_operator([&](int p, int i, int j, int q, int k, int l) { return br.g(p, i, j, q, k, l); },
                          [&](int p, int i, int j) { return br.drift[p](i, j); }, out.gamma, out.drift);
  return out;
}

// Model I parameters identified for (1/2) sum A_pq L^(pq): same A, a_i = d_i - d + 1.
inline ModelIParams lpq_model_params(const Extraction& ext, const RealMatrix& A) {
  return {ext.blocks(), ext.d, A, ext.parameters()};
}

// Casimir image: A_pq = 1/(2N) for all p, q.
inline ModelIParams casimir_model_params(const Extraction& ext) {
  const int m = ext.blocks() + 1;
  return lpq_model_params(ext, RealMatrix::Constant(m, m, 1.0 / (2.0 * ext.N())));
}

inline DiffusionModel lpq_weighted_model(const Extraction& ext, const RealMatrix& A) {
  ext.validate();
  return make_model1(lpq_model_params(ext, A));
}

// ---------------------------------------------------------------------------
// Sampling

// Haar on SU(N): Haar on U(N) with the determinant phase divided out.
inline ComplexMatrix sun_haar(int N, Rng& rng) {
  ComplexMatrix u = haar_unitary(N, rng);
  return u * std::pow(u.determinant(), -1.0 / N);
}

// One step of Brownian motion with generator the Casimir operator:
// u exp(sqrt(dt / N) G), G traceless skew-Hermitian with E|G_ab|^2 = 1 off the diagonal.
// The increment covariance is 2 Gamma dt and the mean drift is Delta(u) dt to O(dt^2).
inline ComplexMatrix sun_brownian_step(const ComplexMatrix& u, double dt, Rng& rng) {
  if (dt < 0.0) throw InvalidArgument("SU(N) step: dt must be non-negative");
  if (dt == 0.0) return u;
  const int N = static_cast<int>(u.rows());
  const ComplexMatrix a = complex_gaussian(N, N, rng);
  ComplexMatrix g = (a - a.adjoint()) / std::sqrt(2.0);
  g -= (g.trace() / static_cast<double>(N)) * ComplexMatrix::Identity(N, N);
  return unitary_retract(u * expm(std::sqrt(dt / N) * g), true);
}

// ---------------------------------------------------------------------------
// Verification against closed forms

inline std::function<RealVector(Rng&)> sun_sampler(int N) {
  return [N](Rng& r) { return realify_general(sun_haar(N, r)); };
}

// Pushforward of the Casimir operator through the extraction against model I
// with A = 1/(2N), a_i = d_i - d + 1.
inline VerificationReport verify_casimir_image(const Extraction& ext, int n_samples, Rng& rng,
                                               double tol_gamma = 1e-6, double tol_drift = 1e-4) {
  ext.validate();
  const ModelIParams prm = casimir_model_params(ext);
  const DiffusionModel image = make_model1(prm);
  const ProjectionMap f = extraction_projection(ext);
  return check_identity(
      "sun.casimir_image", sun_ambient(ext.N()), f, [&](const RealVector& x) { return image.gamma(f.eval(x)); },
      [&](const RealVector& x) { return image.drift(f.eval(x)); }, sun_sampler(ext.N()), n_samples, tol_gamma,
      tol_drift, rng);
}

// Exact vector-field identities for the extracted blocks at random group points.
inline VerificationReport verify_field_lemma(const Extraction& ext, int n_samples, Rng& rng, double tol = 1e-8) {
  ext.validate();
  const int N = ext.N(), m = ext.blocks() + 1, d = ext.d;
  const cplx I(0.0, 1.0);
  Residual r_vr, r_vs, r_vd, r_vr2, r_vs2, r_cross, r_same, r_other, r_lpq, r_casimir_g, r_casimir_l;
  for (int s = 0; s < n_samples; ++s) {
    const ComplexMatrix u = sun_haar(N, rng);
    const MatrixPoint z = extract_all(u, ext);
    auto in = [&](int col, int r) { return ext.block_of(col) == r ? 1.0 : 0.0; };
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) {
        const FieldAction ar = field_action(u, ext, field_matrix(N, FieldKind::R, i, j));
        const FieldAction as = field_action(u, ext, field_matrix(N, FieldKind::S, i, j));
        const FieldAction ad = field_action(u, ext, field_matrix(N, FieldKind::D, i, j));
        for (int r = 0; r < m; ++r)
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
              const cplx x1 = u(a, j) * std::conj(u(b, i)), x2 = u(a, i) * std::conj(u(b, j));
              r_vr.add(in(i, r) * (x1 + x2) - in(j, r) * (x2 + x1), ar.first[r](a, b));
              r_vs.add(I * (in(i, r) * (x1 - x2) + in(j, r) * (x2 - x1)), as.first[r](a, b));
              r_vd.add(0.0, ad.first[r](a, b));
              const cplx sq = 2.0 * u(a, j) * std::conj(u(b, j)) - 2.0 * u(a, i) * std::conj(u(b, i));
              const cplx second = (in(i, r) - in(j, r)) * sq;
              r_vr2.add(second, ar.second[r](a, b));
              r_vs2.add(second, as.second[r](a, b));
            }
      }
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) {
        if (p == q) continue;
        const ExtractedBrackets br = extracted_brackets(u, ext, lpq_fields(ext, p, q));
        const double dp = ext.sizes[p], dq = ext.sizes[q];
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) {
            for (int c = 0; c < d; ++c)
              for (int e = 0; e < d; ++e) {
                const cplx mixed = 2.0 * z[p](c, b) * z[q](a, e) + 2.0 * z[p](a, e) * z[q](c, b);
                r_cross.add(-mixed, br.g(p, a, b, q, c, e));
                r_same.add(mixed, br.g(p, a, b, p, c, e));
                r_same.add(mixed, br.g(q, a, b, q, c, e));
                for (int rr = 0; rr < m; ++rr)
                  for (int ss = 0; ss < m; ++ss)
                    if ((rr != p && rr != q) || (ss != p && ss != q)) r_other.add(0.0, br.g(rr, a, b, ss, c, e));
              }
            for (int rr = 0; rr < m; ++rr) {
              const cplx v = 4.0 * (dp * z[q](a, b) - dq * z[p](a, b));
              r_lpq.add(rr == p ? v : (rr == q ? -v : cplx(0.0)), br.drift[rr](a, b));
            }
          }
      }
    // Casimir operator assembled from the fields against its closed form on the entries.
    const DiffusionModel from_fields = field_operator(N, casimir_fields(N));
    const DiffusionModel closed = sun_ambient(N);
    const RealVector x = realify_general(u);
    r_casimir_g.add_matrix(closed.gamma(x), from_fields.gamma(x));
    r_casimir_l.add_matrix(closed.drift(x), from_fields.drift(x));
  }
  VerificationReport rep;
  rep.suite = "sun.fields";
  auto push = [&](const char* id, const char* formula, const Residual& r) {
    rep.checks.push_back(make_result(id, formula, n_samples, r, tol));
  };
  push("sun.field.R_on_Z", "V_R Z_ab = 1_{i in I_p}(u_aj conj u_bi + u_ai conj u_bj) - 1_{j in I_p}(...)", r_vr);
  push("sun.field.S_on_Z", "V_S Z_ab = i(1_{i in I_p}(u_aj conj u_bi - u_ai conj u_bj) + 1_{j in I_p}(...))", r_vs);
  push("sun.field.D_on_Z", "V_D Z_ab = 0", r_vd);
  push("sun.field.R2_on_Z", "V_R^2 Z_ab = (1_{i in I_p} - 1_{j in I_p})(2 u_aj conj u_bj - 2 u_ai conj u_bi)", r_vr2);
  push("sun.field.S2_on_Z", "V_S^2 Z_ab = (1_{i in I_p} - 1_{j in I_p})(2 u_aj conj u_bj - 2 u_ai conj u_bi)", r_vs2);
  push("sun.lpq.gamma_cross", "Gamma^(pq)(Z^p_ab, Z^q_cd) = -2 Z^p_cb Z^q_ad - 2 Z^p_ad Z^q_cb", r_cross);
  push("sun.lpq.gamma_same", "Gamma^(pq)(Z^p_ab, Z^p_cd) = 2 Z^p_cb Z^q_ad + 2 Z^p_ad Z^q_cb", r_same);
  push("sun.lpq.gamma_other", "Gamma^(pq)(Z^r, Z^s) = 0 unless r, s in {p, q}", r_other);
  push("sun.lpq.generator", "L^(pq) Z^r = (1_{r=p} - 1_{r=q}) 4 (d_p Z^q - d_q Z^p)", r_lpq);
  push("sun.casimir.gamma", "Gamma(u_ij, u_kl), Gamma(u_ij, conj u_kl) closed forms", r_casimir_g);
  push("sun.casimir.generator", "Delta u_ij = -(N^2 - 1)/(2 N^2) u_ij", r_casimir_l);
  return rep;
}

// (1/2) sum_{p<q} A_pq L^(pq) on the extracted blocks against model I with a_i = d_i - d + 1.
inline VerificationReport verify_lpq_image(const Extraction& ext, const RealMatrix& A, int n_samples, Rng& rng,
                                           double tol = 1e-8) {
  ext.validate();
  const DiffusionModel model = lpq_weighted_model(ext, A);
  const HermitianLayout layout(ext.blocks(), ext.d);
  const auto with_d = weighted_lpq_fields(ext, A, true), without_d = weighted_lpq_fields(ext, A, false);
  Residual rg, rl, rd;
  for (int s = 0; s < n_samples; ++s) {
    const ComplexMatrix u = sun_haar(ext.N(), rng);
    const RealVector x = layout.realify(extract_Z(u, ext));
    const Pushforward img = realify_brackets(extracted_brackets(u, ext, with_d), ext.blocks());
    const Pushforward img_nd = realify_brackets(extracted_brackets(u, ext, without_d), ext.blocks());
    rg.add_matrix(model.gamma(x), img.gamma);
    rl.add_matrix(model.drift(x), img.drift);
    rd.add_matrix(img.gamma, img_nd.gamma);
    rd.add_matrix(img.drift, img_nd.drift);
  }
  VerificationReport rep;
  rep.suite = "sun.lpq";
  rep.checks.push_back(make_result("sun.lpq_image.gamma", "image of (1/2) sum A_pq L^(pq) is Gamma_A", n_samples, rg, tol));
  rep.checks.push_back(
      make_result("sun.lpq_image.generator", "image is L_{A,a} with a_i = d_i - d + 1", n_samples, rl, tol));
  rep.checks.push_back(make_result("sun.lpq_image.without_D", "dropping V_D leaves the image unchanged", n_samples, rd, tol));
  return rep;
}

}  // namespace mdp
