#pragma once

#include <Eigen/Eigenvalues>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mdp/coords.hpp"
#include "mdp/linalg.hpp"

namespace mdp {

// L f = sum g^{ij} d_ij f + sum b^i d_i f in real coordinates.
struct DiffusionModel {
  int dim = 0;
  std::function<RealMatrix(const RealVector&)> gamma;
  std::function<RealVector(const RealVector&)> drift;
  std::function<bool(const RealVector&)> in_domain;  // empty means everywhere

  bool contains(const RealVector& x) const { return !in_domain || in_domain(x); }
};

// Smooth map of ambient coordinates; may throw mdp::Error off its domain.
struct ProjectionMap {
  int in_dim = 0;
  int out_dim = 0;
  std::function<RealVector(const RealVector&)> eval;
};

struct DerivativeOptions {
  double jacobian_step = 1e-5;  // scaled by 1 + |x_i|
  double hessian_step = 1e-3;   // scaled by 1 + max|x_i|
  bool richardson = true;
  int max_shrinks = 8;
};

struct Pushforward {
  RealMatrix gamma;
  RealVector drift;
};

namespace detail {

inline std::optional<RealVector> try_eval(const ProjectionMap& f, const RealVector& x) {
  try {
    RealVector y = f.eval(x);
    if (!y.allFinite()) return std::nullopt;
    return y;
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Central second difference along unit direction e, Richardson-extrapolated.
inline RealVector second_directional(const ProjectionMap& f, const RealVector& x, const RealVector& e,
                                     const RealVector& f0, double h, const DerivativeOptions& opt) {
  for (int attempt = 0; attempt <= opt.max_shrinks; ++attempt, h *= 0.5) {
    auto fp = try_eval(f, x + h * e), fm = try_eval(f, x - h * e);
    if (!fp || !fm) continue;
    RealVector d_h = (*fp - 2.0 * f0 + *fm) / (h * h);
    if (!opt.richardson) return d_h;
    auto fp2 = try_eval(f, x + 0.5 * h * e), fm2 = try_eval(f, x - 0.5 * h * e);
    if (!fp2 || !fm2) continue;
    RealVector d_h2 = (*fp2 - 2.0 * f0 + *fm2) / (0.25 * h * h);
    return (4.0 * d_h2 - d_h) / 3.0;
  }
  throw DerivativeError("second difference stencil leaves the domain of the map");
}

}  // namespace detail

// Central differences with h_i = step (1 + |x_i|); error O(h^2).
inline RealMatrix jacobian_fd(const ProjectionMap& f, const RealVector& x, double step,
                              int max_shrinks = 8) {
  RealMatrix j(f.out_dim, x.size());
  for (int i = 0; i < x.size(); ++i) {
    double h = step * (1.0 + std::abs(x(i)));
    bool done = false;
    for (int attempt = 0; attempt <= max_shrinks && !done; ++attempt, h *= 0.5) {
      RealVector xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      auto fp = detail::try_eval(f, xp), fm = detail::try_eval(f, xm);
      if (!fp || !fm) continue;
      j.col(i) = (*fp - *fm) / (xp(i) - xm(i));
      done = true;
    }
    if (!done) throw DerivativeError("jacobian stencil leaves the domain of the map");
  }
  return j;
}

// Image of the ambient operator under F at x: Gamma' = J G J^T and
// L' = J b + sum_k mu_k D^2_{e_k} F where G = sum_k mu_k e_k e_k^T.
inline Pushforward pushforward(const DiffusionModel& model, const ProjectionMap& f, const RealVector& x,
                               const DerivativeOptions& opt = {}) {
  const RealMatrix g = model.gamma(x);
  const RealVector b = model.drift(x);
  const RealMatrix j = jacobian_fd(f, x, opt.jacobian_step, opt.max_shrinks);
  Pushforward out{j * g * j.transpose(), j * b};

  auto f0 = detail::try_eval(f, x);
  if (!f0) throw DerivativeError("map undefined at the evaluation point");
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (g + g.transpose()));
  const double cutoff = 1e-14 * std::max(1e-300, es.eigenvalues().cwiseAbs().maxCoeff());
  const double h = opt.hessian_step * (1.0 + x.cwiseAbs().maxCoeff());
  for (int k = 0; k < g.rows(); ++k) {
    const double mu = es.eigenvalues()(k);
    if (std::abs(mu) <= cutoff) continue;
    out.drift += mu * detail::second_directional(f, x, es.eigenvectors().col(k), *f0, h, opt);
  }
  return out;
}

inline RealMatrix pushforward_gamma(const DiffusionModel& model, const ProjectionMap& f, const RealVector& x,
                                    const DerivativeOptions& opt = {}) {
  const RealMatrix j = jacobian_fd(f, x, opt.jacobian_step, opt.max_shrinks);
  return j * model.gamma(x) * j.transpose();
}

inline RealVector pushforward_generator(const DiffusionModel& model, const ProjectionMap& f,
                                        const RealVector& x, const DerivativeOptions& opt = {}) {
  return pushforward(model, f, x, opt).drift;
}

// Pushforward of complex-valued functions, returned as complex brackets.
inline ComplexTable complex_pushforward(const DiffusionModel& model,
                                        const std::function<ComplexVector(const RealVector&)>& f,
                                        const RealVector& x, const DerivativeOptions& opt = {}) {
  const int k = static_cast<int>(f(x).size());
  ProjectionMap real_map{model.dim, 2 * k, [&f](const RealVector& y) { return split_complex(f(y)); }};
  const Pushforward p = pushforward(model, real_map, x, opt);
  return ComplexTable::from_real(p.gamma, p.drift);
}

// ---------------------------------------------------------------------------
// Verification records

struct CheckResult {
  std::string id;
  std::string formula;
  int n_samples = 0;
  double max_abs_residual = 0.0;
  double max_rel_residual = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct VerificationReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }

  void append(const VerificationReport& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
  }

  const CheckResult* find(const std::string& id) const {
    for (const auto& c : checks)
      if (c.id == id) return &c;
    return nullptr;
  }
};

// Running maximum of |actual - expected|; the relative residual divides by max(1, |expected|).
struct Residual {
  double max_abs = 0.0;
  double max_rel = 0.0;

  void add(cplx expected, cplx actual) {
    const double diff = std::abs(actual - expected);
    max_abs = std::max(max_abs, diff);
    max_rel = std::max(max_rel, diff / std::max(1.0, std::abs(expected)));
  }
  void add(double expected, double actual) { add(cplx(expected), cplx(actual)); }
  void add_matrix(const RealMatrix& expected, const RealMatrix& actual) {
    for (int i = 0; i < expected.rows(); ++i)
      for (int j = 0; j < expected.cols(); ++j) add(expected(i, j), actual(i, j));
  }
};

inline CheckResult make_result(std::string id, std::string formula, int n, const Residual& r, double tol) {
  return {std::move(id), std::move(formula), n, r.max_abs, r.max_rel, tol, r.max_abs <= tol};
}

// Compares the pushforward of `model` through `f` with closed forms at n sampled points.
inline VerificationReport check_identity(const std::string& id, const DiffusionModel& model,
                                         const ProjectionMap& f,
                                         const std::function<RealMatrix(const RealVector&)>& closed_gamma,
                                         const std::function<RealVector(const RealVector&)>& closed_drift,
                                         const std::function<RealVector(Rng&)>& sampler, int n, double tol_gamma,
                                         double tol_drift, Rng& rng, const DerivativeOptions& opt = {}) {
  Residual rg, rl;
  for (int s = 0; s < n; ++s) {
    const RealVector x = sampler(rng);
    const Pushforward p = pushforward(model, f, x, opt);
    if (closed_gamma) rg.add_matrix(closed_gamma(x), p.gamma);
    if (closed_drift) rl.add_matrix(closed_drift(x), p.drift);
  }
  VerificationReport rep;
  rep.suite = id;
  if (closed_gamma) rep.checks.push_back(make_result(id + ".gamma", "carre du champ", n, rg, tol_gamma));
  if (closed_drift) rep.checks.push_back(make_result(id + ".generator", "generator", n, rl, tol_drift));
  return rep;
}

// One identity evaluated against a shared complex pushforward table.
template <class Point>
struct IdentitySpec {
  std::string id;
  std::string formula;
  double tol;
  std::function<void(const Point&, const ComplexTable&, Residual&)> eval;
};

template <class Point>
VerificationReport run_identity_specs(const std::string& suite, const std::vector<IdentitySpec<Point>>& specs,
                                      const std::function<Point(int)>& sample,
                                      const std::function<ComplexTable(const Point&)>& push, int n) {
  std::vector<Residual> acc(specs.size());
  for (int s = 0; s < n; ++s) {
    const Point p = sample(s);
    const ComplexTable t = push(p);
    for (size_t k = 0; k < specs.size(); ++k) specs[k].eval(p, t, acc[k]);
  }
  VerificationReport rep;
  rep.suite = suite;
  for (size_t k = 0; k < specs.size(); ++k)
    rep.checks.push_back(make_result(specs[k].id, specs[k].formula, n, acc[k], specs[k].tol));
  return rep;
}

// ---------------------------------------------------------------------------
// Reversibility

// Central-difference gradient, Richardson-extrapolated.
inline RealVector gradient_fd(const std::function<double(const RealVector&)>& f, const RealVector& x,
                              double step = 1e-4) {
  RealVector g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double h = step * (1.0 + std::abs(x(i)));
    auto diff = [&](double hh) {
      RealVector xp = x, xm = x;
      xp(i) += hh;
      xm(i) -= hh;
      return (f(xp) - f(xm)) / (2.0 * hh);
    };
    g(i) = (4.0 * diff(0.5 * h) - diff(h)) / 3.0;
  }
  return g;
}

// div(G)_i = sum_j d_j G_ij by central differences.
inline RealVector divergence_fd(const DiffusionModel& model, const RealVector& x, double step = 1e-4) {
  RealVector div = RealVector::Zero(x.size());
  for (int j = 0; j < x.size(); ++j) {
    const double h = step * (1.0 + std::abs(x(j)));
    RealVector xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    div += (model.gamma(xp).col(j) - model.gamma(xm).col(j)) / (xp(j) - xm(j));
  }
  return div;
}

// max_i |b_i - sum_j d_j g^{ij} - sum_j g^{ij} d_j log rho|; zero iff rho is reversible.
inline double reversibility_residual(const DiffusionModel& model,
                                     const std::function<RealVector(const RealVector&)>& grad_log_density,
                                     const RealVector& x) {
  const RealVector r = model.drift(x) - divergence_fd(model, x) - model.gamma(x) * grad_log_density(x);
  return r.cwiseAbs().maxCoeff();
}

inline double reversibility_residual(const DiffusionModel& model,
                                     const std::function<double(const RealVector&)>& log_density,
                                     const RealVector& x) {
  return reversibility_residual(
      model, std::function<RealVector(const RealVector&)>([&](const RealVector& y) { return gradient_fd(log_density, y); }),
      x);
}

// ---------------------------------------------------------------------------
// Boundary equations

struct AffineFit {
  RealMatrix slope;   // outputs x inputs
  RealVector offset;  // outputs
  double max_residual = 0.0;
  int n_samples = 0;

  RealVector operator()(const RealVector& x) const { return offset + slope * x; }
};

// Least-squares y ~ offset + slope x.
inline AffineFit fit_affine(const std::vector<RealVector>& xs, const std::vector<RealVector>& ys) {
  const int n = static_cast<int>(xs.size());
  if (n == 0) throw RankDeficientFit("fit_affine: no samples");
  const int dim = static_cast<int>(xs[0].size());
  const int out = static_cast<int>(ys[0].size());
  if (n < dim + 2) throw RankDeficientFit("fit_affine: need at least dim + 2 samples");
  RealMatrix design(n, dim + 1), rhs(n, out);
  for (int s = 0; s < n; ++s) {
    design(s, 0) = 1.0;
    design.row(s).tail(dim) = xs[s].transpose();
    rhs.row(s) = ys[s].transpose();
  }
  Eigen::ColPivHouseholderQR<RealMatrix> qr(design);
  if (qr.rank() < dim + 1) throw RankDeficientFit("fit_affine: sample points do not span an affine basis");
  const RealMatrix coef = qr.solve(rhs);
  AffineFit fit{coef.bottomRows(dim).transpose(), coef.row(0).transpose(), 0.0, n};
  for (int s = 0; s < n; ++s)
    fit.max_residual = std::max(fit.max_residual, (fit(xs[s]) - ys[s]).cwiseAbs().maxCoeff());
  return fit;
}

// Fits x -> Gamma(x, log P) = G(x) grad log P(x) by an affine map over sampled points.
// A small max_residual means the boundary {P = 0} satisfies the boundary equation.
inline AffineFit check_boundary_affine_numeric(const DiffusionModel& model,
                                               const std::function<RealVector(const RealVector&)>& grad_log_p,
                                               const std::function<RealVector(Rng&)>& sampler, int n, Rng& rng) {
  std::vector<RealVector> xs, ys;
  for (int s = 0; s < n; ++s) {
    RealVector x = sampler(rng);
    ys.push_back(model.gamma(x) * grad_log_p(x));
    xs.push_back(std::move(x));
  }
  return fit_affine(xs, ys);
}

}  // namespace mdp
