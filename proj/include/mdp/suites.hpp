#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdp/matrix_simplex.hpp"
#include "mdp/polar.hpp"
#include "mdp/poly.hpp"
#include "mdp/sde.hpp"
#include "mdp/simplex.hpp"
#include "mdp/stats.hpp"
#include "mdp/sun.hpp"
#include "mdp/wishart.hpp"

namespace mdp {

// ---------------------------------------------------------------------------
// Monte Carlo samplers of the matrix Dirichlet law, reduced to (x, x^2) of the
// realified first n blocks.

inline SampleMoments direct_dirichlet_moments(const WishartFamily& fam, long draws, Rng& rng) {
  const HermitianLayout layout(fam.blocks() - 1, fam.d);
  std::vector<RealVector> xs;
  xs.reserve(draws);
  for (long s = 0; s < draws; ++s) xs.push_back(with_squares(layout.realify(sample_matrix_dirichlet_direct(fam, rng))));
  return iid_moments(xs);
}

inline SampleMoments haar_image_moments(const Extraction& ext, long draws, Rng& rng) {
  const HermitianLayout layout(ext.blocks(), ext.d);
  std::vector<RealVector> xs;
  xs.reserve(draws);
  for (long s = 0; s < draws; ++s) xs.push_back(with_squares(layout.realify(extract_Z(sun_haar(ext.N(), rng), ext))));
  return iid_moments(xs);
}

// Recorded states of one long path; SE from batch means.
inline SampleMoments path_moments(const DiffusionModel& model, const RealVector& x0, SimConfig cfg, int batches = 50) {
  cfg.record_states = true;
  const PathSummary s = simulate(model, x0, cfg);
  std::vector<RealVector> xs;
  xs.reserve(s.states.size());
  for (const auto& x : s.states) xs.push_back(with_squares(x));
  return batch_moments(xs, batches);
}

// Model II with the Wishart-derived parameters frozen at S = Id: A = 2 S^{-1} = 2 Id,
// B_{ij,kl} = delta_ik delta_jl, a_p = d_p - d + 1. Constant A and B keep the matrix
// Dirichlet law reversible, so the path must reproduce the direct Wishart-ratio sampler.
inline ModelIIParams wishart_model2_params(const WishartFamily& fam) {
  fam.validate();
  const int d = fam.d;
  return {fam.blocks() - 1, d, 2.0 * ComplexMatrix::Identity(d, d), ComplexMatrix::Identity(d * d, d * d),
          fam.parameters()};
}

// Barycentre Z^(p) = Id / (n + 1).
inline RealVector barycenter(int n, int d) {
  return HermitianLayout(n, d).realify(MatrixPoint(n, HermitianMatrix::identity(d) * (1.0 / (n + 1))));
}

namespace detail {

inline RealMatrix positive_coupling(int m, Rng& rng) {
  RealMatrix A(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = 0.3 + rng.uniform();
  return A;
}

inline RealVector positive_exponents(int m, Rng& rng) {
  RealVector a(m);
  for (int i = 0; i < m; ++i) a(i) = 0.5 + 2.0 * rng.uniform();
  return a;
}

inline ComplexMatrix random_pd(int d, Rng& rng) {
  const ComplexMatrix g = complex_gaussian(d, d, rng);
  return g * g.adjoint() + 0.5 * ComplexMatrix::Identity(d, d);
}

inline ModelIParams model1_fixture(int n, int d, Rng& rng) {
  return {n, d, positive_coupling(n + 1, rng), positive_exponents(n + 1, rng)};
}

inline ModelIIParams model2_fixture(int n, int d, Rng& rng) {
  return {n, d, random_pd(d, rng), ModelIIParams::symmetrize_b(random_pd(d * d, rng), d),
          positive_exponents(n + 1, rng)};
}

inline RealVector matrix_simplex_x(const HermitianLayout& layout, Rng& rng) {
  return layout.realify(sample_matrix_simplex(layout.blocks(), layout.d(), rng, 0.05));
}

using GradLog = std::function<RealVector(const RealVector&)>;

inline double worst_reversibility(const DiffusionModel& m, const GradLog& grad, const std::function<RealVector(Rng&)>& sampler,
                                  int samples, Rng& rng) {
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) worst = std::max(worst, reversibility_residual(m, grad, sampler(rng)));
  return worst;
}

// Affine fit of Gamma(x, log det Z^q) for every q, compared with the closed-form affine map.
template <class Closed>
double worst_boundary_fit(const DiffusionModel& m, const HermitianLayout& layout, const Closed& closed, Rng& rng) {
  double worst = 0.0;
  const int n = layout.blocks();
  for (int q = 0; q <= n; ++q) {
    const AffineFit fit = check_boundary_affine_numeric(
        m, [&](const RealVector& x) { return logdet_gradient(layout, x, q); },
        [&](Rng& r) { return matrix_simplex_x(layout, r); }, 4 * (layout.dim() + 1), rng);
    worst = std::max(worst, fit.max_residual);
    for (int t = 0; t < 3; ++t) {
      const RealVector x = matrix_simplex_x(layout, rng);
      const MatrixPoint full = complete_simplex(layout.unrealify(x));
      const RealVector predicted = fit(x);
      for (int a = 0; a < layout.dim(); ++a) {
        const auto& c = layout.coord(a);
        const cplx v = closed(full, q, c.block, c.i, c.j);
        worst = std::max(worst, std::abs(predicted(a) - (c.imaginary ? v.imag() : v.real())));
      }
    }
  }
  return worst;
}

inline void add(VerificationReport& rep, const VerificationReport& part) { rep = merge_reports(rep, part); }
inline void add(VerificationReport& rep, const CheckResult& c) {
  VerificationReport one;
  one.checks.push_back(c);
  rep = merge_reports(rep, one);
}

// ---------------------------------------------------------------------------

inline VerificationReport scalar_suite(const Rng& root, int samples) {
  VerificationReport rep;
  {
    Rng rng = root.split(1);
    for (const std::vector<int>& sizes : {std::vector<int>{2, 2}, {1, 2, 2}, {2, 1, 3}}) {
      const Partition part{sizes};
      const RealMatrix A = positive_coupling(part.blocks(), rng);
      const RealVector a = sphere_parameters(part);
      const ProjectionMap f = sphere_projection(part);
      add(rep, check_identity(
                   "scalar.sphere", sphere_ambient(part, A), f,
                   [&](const RealVector& y) { return gamma_simplex(A, f.eval(y)); },
                   [&](const RealVector& y) { return drift_simplex(A, a, f.eval(y)); },
                   [&](Rng& r) { return sample_sphere(part.total(), r); }, samples, 1e-6, 1e-4, rng));
    }
  }
  {
    Rng rng = root.split(2);
    const Partition part{{1, 2}};
    const RealMatrix ones = RealMatrix::Ones(2, 2);
    const RealVector a = sphere_parameters(part);
    const ProjectionMap f = sphere_projection(part);
    add(rep, check_identity(
                 "scalar.round_sphere", spherical_laplacian(3), f,
                 [&](const RealVector& y) { return RealMatrix(4.0 * gamma_simplex(ones, f.eval(y))); },
                 [&](const RealVector& y) { return RealVector(4.0 * drift_simplex(ones, a, f.eval(y))); },
                 [](Rng& r) { return sample_sphere(3, r); }, samples, 1e-6, 1e-4, rng));
  }
  {
    Rng rng = root.split(3);
    const RealVector a = positive_exponents(3, rng);
    auto image = [&](const RealVector& y) {
      RealMatrix g;
      RealVector b;
      laguerre_image(a, y, g, b);
      return std::make_pair(g, b);
    };
    add(rep, check_identity(
                 "scalar.laguerre", laguerre_ambient(a), laguerre_projection(2),
                 [&](const RealVector& y) { return image(y).first; }, [&](const RealVector& y) { return image(y).second; },
                 [](Rng& r) {
                   RealVector y(3);
                   for (int i = 0; i < 3; ++i) y(i) = 0.3 + 3.0 * r.uniform();
                   return y;
                 },
                 samples, 1e-6, 1e-4, rng));
  }
  {
    Rng rng = root.split(4);
    const Partition part{{1, 2, 2}};
    const RealMatrix A = positive_coupling(3, rng);
    auto image = [&](const RealVector& y) {
      RealMatrix g;
      RealVector b;
      ou_warped_image(part, A, y, g, b);
      return std::make_pair(g, b);
    };
    add(rep, check_identity(
                 "scalar.ou_warped", ou_warped_ambient(part, A), radial_projection(part),
                 [&](const RealVector& y) { return image(y).first; }, [&](const RealVector& y) { return image(y).second; },
                 [](Rng& r) { return RealVector((0.5 + 2.0 * r.uniform()) * sample_sphere(5, r)); }, samples, 1e-6,
                 1e-4, rng));
  }
  {
    Rng rng = root.split(5);
    for (int n = 1; n <= 4; ++n) {
      const SimplexParams p{positive_coupling(n + 1, rng), positive_exponents(n + 1, rng)};
      const double r = worst_reversibility(
          make_simplex_model(p), [&](const RealVector& y) { return dirichlet_grad_log_density(p.a, y); },
          [n](Rng& g) { return sample_simplex_interior(n, g, 0.05); }, samples, rng);
      add(rep, scalar_result("scalar.reversibility", "b = div G + G grad log Dirichlet(a)", samples, r, 1e-8));
    }
  }
  {
    Rng rng = root.split(6);
    struct Ref {
      ReferenceModel m;
      double lo, hi;
    };
    for (const Ref& ref : {Ref{ou_1d(), -3.0, 3.0}, Ref{laguerre_1d(2.5), 0.1, 5.0}, Ref{jacobi_1d(2.0, 3.5), -0.95, 0.95}}) {
      const double r = worst_reversibility(
          ref.m.model, ref.m.grad_log_density,
          [&](Rng& g) {
            RealVector x(1);
            x << ref.lo + (ref.hi - ref.lo) * g.uniform();
            return x;
          },
          samples, rng);
      add(rep, scalar_result("scalar.reference_reversibility", "OU, Laguerre, Jacobi reversible for their laws", samples,
                             r, 1e-8));
    }
  }
  {
    // Exact rational arithmetic; the coefficients are fixed, not sampled.
    int faces = 0, failed = 0;
    for (int n = 1; n <= 3; ++n) {
      std::vector<std::vector<Rational>> A(n + 1, std::vector<Rational>(n + 1));
      std::vector<Rational> a(n + 1);
      for (int i = 0; i <= n; ++i) {
        a[i] = Rational(i + 1, 2);
        for (int j = 0; j <= i; ++j) A[i][j] = A[j][i] = Rational(1 + (i + j) % 3, 1 + i * j % 2);
      }
      const PolyOperator op = simplex_poly_operator(A, a);
      for (const MultiPoly& face : simplex_faces(n)) {
        ++faces;
        failed += !check_boundary_affine_exact(op, face).is_affine;
      }
    }
    add(rep, scalar_result("scalar.boundary_exact", "Gamma(x, log P) = P-affine quotient on every face, exact division",
                           faces, failed, 0.0));
  }
  return rep;
}

inline VerificationReport model1_suite(const Rng& root, int samples) {
  VerificationReport rep;
  {
    Rng rng = root.split(1);
    for (int n = 1; n <= 2; ++n)
      for (int d = 2; d <= 3; ++d) {
        const ModelIParams p = model1_fixture(n, d, rng);
        const HermitianLayout layout(n, d);
        const double r = worst_reversibility(
            make_model1(p), [&](const RealVector& y) { return matrix_dirichlet_grad_log_density(layout, p.a, y); },
            [&](Rng& g) { return matrix_simplex_x(layout, g); }, samples, rng);
        add(rep, scalar_result("model1.reversibility", "b = div G + G grad log matrix Dirichlet(a)", samples, r, 1e-8));
      }
  }
  {
    Rng rng = root.split(2);
    const ModelIParams p = model1_fixture(3, 1, rng);
    const DiffusionModel m = make_model1(p);
    Residual rg, rl;
    for (int s = 0; s < samples; ++s) {
      const RealVector x = sample_simplex_interior(3, rng);
      rg.add_matrix(2.0 * gamma_simplex(p.A, x), m.gamma(x));
      rl.add_matrix(2.0 * drift_simplex(p.A, p.a, x), m.drift(x));
    }
    add(rep, make_result("model1.scalar_reduction.gamma", "d = 1: Gamma_I = 2 Gamma_{A,a}", samples, rg, 1e-12));
    add(rep, make_result("model1.scalar_reduction.generator", "d = 1: L_I = 2 L_{A,a}", samples, rl, 1e-12));
  }
  {
    Rng rng = root.split(3);
    for (int d = 2; d <= 3; ++d) {
      ModelIParams p = model1_fixture(2, d, rng);
      p.A(0, 1) = p.A(1, 0) = 0.0;  // still connected through the last block
      std::vector<MatrixPoint> pts;
      for (int s = 0; s < samples; ++s) pts.push_back(sample_matrix_simplex(2, d, rng));
      const EllipticityResult e = ellipticity_check(p, pts);
      add(rep, lower_bound_result("model1.ellipticity.irreducible",
                                  "irreducible A >= 0: min eigenvalue of Gamma > 1e-12", samples,
                                  e.structural ? e.min_eigenvalue : 0.0, 1e-12));
    }
    // Reducible: blocks {1, 2} decouple from block 3 and the identity direction is null.
    ModelIParams p = model1_fixture(2, 2, rng);
    p.A(0, 2) = p.A(2, 0) = p.A(1, 2) = p.A(2, 1) = 0.0;
    std::vector<MatrixPoint> pts;
    for (int s = 0; s < samples; ++s) pts.push_back(sample_matrix_simplex(2, 2, rng));
    const EllipticityResult e = ellipticity_check(p, pts);
    CheckResult c = scalar_result("model1.ellipticity.reducible",
                                  "reducible A: explicit null direction, witness^T Gamma witness < 1e-12", samples,
                                  std::abs(e.witness_value), 1e-12);
    c.pass = c.pass && !e.structural && e.witness.size() > 0;
    add(rep, c);
  }
  {
    Rng rng = root.split(4);
    for (const auto& [n, d] : {std::pair{2, 2}, std::pair{1, 3}}) {
      const ModelIParams p = model1_fixture(n, d, rng);
      const double r = worst_boundary_fit(
          make_model1(p), HermitianLayout(n, d),
          [&](const MatrixPoint& full, int q, int b, int i, int j) { return model1_boundary(p, full, q, b, i, j); }, rng);
      add(rep, scalar_result("model1.boundary_affine", "Gamma(Z, log det Z^q) is affine and equals the closed form",
                             4 * (HermitianLayout(n, d).dim() + 1), r, 1e-8));
    }
  }
  {
    Rng rng = root.split(5);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      const MatrixPoint z = sample_matrix_simplex(1 + s % 3, 1 + (s / 3) % 3, rng, 0.0);
      worst = std::max(worst, (sylvester_spectrum(z) - sylvester_expected(z)).cwiseAbs().maxCoeff());
    }
    add(rep, scalar_result("model1.sylvester", "spectrum of Id - (Z^{-1/2} Y)(Z^{-1/2} Y)* is {1, spec Z^{n+1}}",
                           samples, worst, 1e-8));
  }
  return rep;
}

inline VerificationReport model2_suite(const Rng& root, int samples) {
  VerificationReport rep;
  {
    Rng rng = root.split(1);
    for (int n = 1; n <= 2; ++n)
      for (int d = 1; d <= 3; ++d) {
        const ModelIIParams p = model2_fixture(n, d, rng);
        const HermitianLayout layout(n, d);
        const double r = worst_reversibility(
            make_model2(p), [&](const RealVector& y) { return matrix_dirichlet_grad_log_density(layout, p.a, y); },
            [&](Rng& g) { return matrix_simplex_x(layout, g); }, samples, rng);
        add(rep, scalar_result("model2.reversibility", "b = div G + G grad log matrix Dirichlet(a)", samples, r, 1e-8));
      }
  }
  {
    Rng rng = root.split(2);
    for (int d = 1; d <= 3; ++d) {
      const ModelIIParams p = model2_fixture(2, d, rng);
      const DiffusionModel m = make_model2(p);
      const HermitianLayout layout(2, d);
      double lo = std::numeric_limits<double>::infinity(), asym = 0.0;
      for (int s = 0; s < samples; ++s) {
        const RealMatrix g = m.gamma(matrix_simplex_x(layout, rng));
        asym = std::max(asym, max_abs(RealMatrix(g - g.transpose())));
        lo = std::min(lo, Eigen::SelfAdjointEigenSolver<RealMatrix>(g).eigenvalues()(0));
      }
      add(rep, scalar_result("model2.cometric_symmetric", "Gamma_{A,B} is symmetric", samples, asym, 1e-12));
      add(rep, lower_bound_result("model2.cometric_positive", "A, B positive definite: min eigenvalue of Gamma > 0",
                                  samples, lo, 0.0));
    }
  }
  {
    Rng rng = root.split(3);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      const int n = 1 + s % 2, d = 1 + (s / 2) % 3;
      const ModelIIParams p = model2_fixture(n, d, rng);
      const MatrixPoint full = complete_simplex(sample_matrix_simplex(n, d, rng));
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          cplx t = 0.0;
          for (int k = 0; k <= n; ++k) t += model2_drift(p, full, k, i, j);
          worst = std::max(worst, std::abs(t));
        }
    }
    add(rep, scalar_result("model2.drift_sum", "sum over all n+1 blocks of L(Z^k) vanishes", samples, worst, 1e-12));
  }
  {
    Rng rng = root.split(4);
    for (const auto& [n, d] : {std::pair{2, 2}, std::pair{1, 3}}) {
      const ModelIIParams p = model2_fixture(n, d, rng);
      const double r = worst_boundary_fit(
          make_model2(p), HermitianLayout(n, d),
          [&](const MatrixPoint& full, int q, int b, int i, int j) { return model2_boundary(p, full, q, b, i, j); }, rng);
      add(rep, scalar_result("model2.boundary_affine", "Gamma(Z, log det Z^q) is affine and equals the closed form",
                             4 * (HermitianLayout(n, d).dim() + 1), r, 1e-8));
    }
  }
  return rep;
}

inline VerificationReport sun_suite(const Rng& root, int samples) {
  VerificationReport rep;
  {
    Rng rng = root.split(1);
    for (const Extraction& ext : {Extraction{1, {1, 1, 1}}, Extraction{2, {2, 2}}, Extraction{2, {2, 1, 3}},
                                  Extraction{3, {3, 3}}, Extraction{3, {3, 1, 2}}})
      add(rep, verify_casimir_image(ext, samples, rng));
  }
  {
    Rng rng = root.split(2);
    for (const Extraction& ext : {Extraction{2, {2, 1, 2}}, Extraction{3, {3, 3}}})
      add(rep, verify_field_lemma(ext, samples, rng));
  }
  {
    Rng rng = root.split(3);
    for (const Extraction& ext : {Extraction{2, {2, 3, 1}}, Extraction{3, {2, 2, 2}}})
      add(rep, verify_lpq_image(ext, positive_coupling(ext.blocks() + 1, rng), samples, rng));
  }
  return rep;
}

inline VerificationReport wishart_suite(const Rng& root, int samples) {
  VerificationReport rep;
  const std::vector<WishartFamily> families = {{2, {3, 3}}, {2, {2, 3, 2}}, {3, {3, 4}}, {3, {2, 3, 4}}};
  {
    Rng rng = root.split(1);
    for (const auto& fam : families) add(rep, verify_smz_system(fam, samples, rng));
  }
  {
    Rng rng = root.split(2);
    for (const auto& fam : families) add(rep, verify_theorem_image(fam, samples, rng));
  }
  {
    Rng rng = root.split(3);
    for (const auto& fam : {WishartFamily{2, {3, 3}}, WishartFamily{3, {3, 4}}}) {
      const double r = worst_reversibility(
          wishart_ambient(fam), [&](const RealVector& y) { return wishart_grad_log_density(fam, y); },
          [&](Rng& g) { return fam.layout().realify(sample_wishart_family(fam, g)); }, samples, rng);
      add(rep, scalar_result("wishart.reversibility", "ambient reversible for the product Wishart law", samples, r, 1e-8));
    }
  }
  {
    Rng rng = root.split(4);
    double worst = 0.0;
    for (const auto& fam : {WishartFamily{2, {2, 3}}, WishartFamily{3, {3, 3}}})
      for (int s = 0; s < samples; ++s)
        worst = std::max(worst, sqrt_derivative_fd_residual(build_smz(fam, sample_separated_family(fam, rng), 0.0), rng));
    add(rep, scalar_result("wishart.sqrt_derivative", "derivative of S^{1/2} against central differences, relative",
                           2 * samples, worst, 1e-6));
  }
  {
    // d = 1: S = W^1 + W^2 is independent of W^1 / S.
    Rng rng = root.split(5);
    const long m = 20000;
    std::vector<double> s;
    std::vector<RealVector> x;
    for (long t = 0; t < m; ++t) {
      const double w1 = sample_wishart(1, 2, rng)(0, 0).real(), w2 = sample_wishart(1, 3, rng)(0, 0).real();
      s.push_back(w1 + w2);
      x.push_back(RealVector::Constant(1, w1 / (w1 + w2)));
    }
    const IndependenceReport ind = independence_check(s, x);
    add(rep, CheckResult{"wishart.independence", "d = 1: corr(S, W^1 / S) within 3 / sqrt(M)", static_cast<int>(m),
                         ind.max_abs_corr, ind.max_abs_corr, ind.threshold, ind.pass});
  }
  {
    Rng rng = root.split(6);
    const long draws = 20000;
    const SampleMoments a = direct_dirichlet_moments({2, {3, 3}}, draws, rng);
    const SampleMoments b = haar_image_moments({2, {3, 3}}, draws, rng);
    add(rep, moment_result("wishart.direct_vs_haar",
                           "Wishart ratio and SU(6) extraction share first and second moments", 2 * draws,
                           moment_test(a, b)));
  }
  return rep;
}

inline VerificationReport polar_suite(const Rng& root, int samples) {
  VerificationReport rep;
  Rng rng = root.split(1);
  for (int d = 2; d <= 3; ++d) add(rep, verify_polar_system(d, samples, rng));
  return rep;
}

using SuiteFn = VerificationReport (*)(const Rng&, int);

inline const std::vector<std::pair<std::string, SuiteFn>>& suite_table() {
  static const std::vector<std::pair<std::string, SuiteFn>> t = {
      {"scalar", scalar_suite}, {"model1", model1_suite}, {"model2", model2_suite},
      {"sun", sun_suite},       {"wishart", wishart_suite}, {"polar", polar_suite}};
  return t;
}

}  // namespace detail

inline std::vector<std::string> suite_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, fn] : detail::suite_table()) ids.push_back(id);
  ids.push_back("all");
  return ids;
}

inline bool is_suite_id(const std::string& id) {
  const auto ids = suite_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

// Every check of the suite with `samples` random points per identity. The report is a
// deterministic function of (suite, seed, samples); each suite draws from its own stream.
inline VerificationReport run_suite(const std::string& id, std::uint64_t seed = 0, int samples = 30) {
  if (!is_suite_id(id)) throw InvalidArgument("run_suite: unknown suite '" + id + "'");
  if (samples < 1) throw InvalidArgument("run_suite: samples must be >= 1");
  const Rng root(seed);
  VerificationReport rep;
  const auto& table = detail::suite_table();
  for (size_t k = 0; k < table.size(); ++k)
    if (id == "all" || id == table[k].first) rep = merge_reports(rep, table[k].second(root.split(100 + k), samples));
  rep.suite = id;
  rep.seed = seed;
  return rep;
}

}  // namespace mdp
