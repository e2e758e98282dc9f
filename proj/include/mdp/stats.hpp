#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mdp/calculus.hpp"
#include "mdp/errors.hpp"

namespace mdp {

// ---------------------------------------------------------------------------
// Monte Carlo moment comparisons. Every comparison uses a 3-SE band.

inline constexpr double kSeBand = 3.0;

struct SampleMoments {
  RealVector mean;
  RealVector se;
  long count = 0;
};

// Mean and standard error of i.i.d. vectors.
inline SampleMoments iid_moments(const std::vector<RealVector>& xs) {
  if (xs.size() < 2) throw InvalidArgument("iid_moments: need at least two samples");
  const int k = static_cast<int>(xs[0].size());
  const double n = static_cast<double>(xs.size());
  RealVector s = RealVector::Zero(k), s2 = RealVector::Zero(k);
  for (const auto& x : xs) {
    s += x;
    s2 += x.cwiseAbs2();
  }
  SampleMoments m;
  m.count = static_cast<long>(xs.size());
  m.mean = s / n;
  const RealVector var = ((s2 - n * m.mean.cwiseAbs2()) / (n - 1.0)).cwiseMax(0.0);
  m.se = (var / n).cwiseSqrt();
  return m;
}

// Mean of a correlated sequence with the standard error taken from `batches` batch means.
// Trailing samples that do not fill a batch are dropped from the SE but kept in the mean.
inline SampleMoments batch_moments(const std::vector<RealVector>& xs, int batches = 50) {
  if (batches < 2) throw InvalidArgument("batch_moments: need at least two batches");
  const long size = static_cast<long>(xs.size()) / batches;
  if (size < 1) throw InvalidArgument("batch_moments: fewer samples than batches");
  const int k = static_cast<int>(xs[0].size());
  std::vector<RealVector> means;
  RealVector total = RealVector::Zero(k);
  for (int b = 0; b < batches; ++b) {
    RealVector s = RealVector::Zero(k);
    for (long t = b * size; t < (b + 1) * size; ++t) s += xs[t];
    means.push_back(s / static_cast<double>(size));
  }
  for (const auto& x : xs) total += x;
  SampleMoments m;
  m.count = static_cast<long>(xs.size());
  m.mean = total / static_cast<double>(xs.size());
  m.se = iid_moments(means).se;
  return m;
}

// (x, x_1^2, ..., x_k^2): first and second moments compared coordinate by coordinate.
inline RealVector with_squares(const RealVector& x) {
  RealVector f(2 * x.size());
  f << x, x.cwiseAbs2();
  return f;
}

struct MomentTest {
  RealVector z;
  double max_abs_z = 0.0;
  bool pass = false;
};

// z = (a - b) / sqrt(se_a^2 + se_b^2) per coordinate; pass iff max |z| < 3.
// One side may have zero SE (an exact target); both zero is an error.
inline MomentTest moment_test(const RealVector& mean_a, const RealVector& se_a, const RealVector& mean_b,
                              const RealVector& se_b) {
  const auto n = mean_a.size();
  if (se_a.size() != n || mean_b.size() != n || se_b.size() != n)
    throw InvalidArgument("moment_test: size mismatch");
  MomentTest t;
  t.z = RealVector(n);
  for (int i = 0; i < n; ++i) {
    if (se_a(i) < 0.0 || se_b(i) < 0.0) throw InvalidArgument("moment_test: negative standard error");
    const double se = std::hypot(se_a(i), se_b(i));
    if (!(se > 0.0)) throw InvalidArgument("moment_test: standard errors must not both vanish");
    t.z(i) = (mean_a(i) - mean_b(i)) / se;
  }
  t.max_abs_z = n ? t.z.cwiseAbs().maxCoeff() : 0.0;
  t.pass = t.max_abs_z < kSeBand;
  return t;
}

inline MomentTest moment_test(const SampleMoments& a, const SampleMoments& b) {
  return moment_test(a.mean, a.se, b.mean, b.se);
}

inline MomentTest moment_test(const SampleMoments& a, const RealVector& exact) {
  return moment_test(a.mean, a.se, exact, RealVector::Zero(exact.size()));
}

struct IndependenceReport {
  RealVector corr;
  double threshold = 0.0;  // 3 / sqrt(M)
  double max_abs_corr = 0.0;
  long count = 0;
  bool pass = false;
};

// Sample correlation of S with each coordinate of x; under independence
// sqrt(M) corr is approximately standard normal.
inline IndependenceReport independence_check(const std::vector<double>& s, const std::vector<RealVector>& x) {
  const long m = static_cast<long>(s.size());
  if (static_cast<long>(x.size()) != m) throw InvalidArgument("independence_check: size mismatch");
  if (m < 10000) throw InvalidArgument("independence_check: need at least 1e4 samples");
  const int k = static_cast<int>(x[0].size());
  double ms = 0.0;
  RealVector mx = RealVector::Zero(k);
  for (long t = 0; t < m; ++t) {
    ms += s[t];
    mx += x[t];
  }
  ms /= m;
  mx /= m;
  double vs = 0.0;
  RealVector vx = RealVector::Zero(k), cov = RealVector::Zero(k);
  for (long t = 0; t < m; ++t) {
    const double ds = s[t] - ms;
    const RealVector dx = x[t] - mx;
    vs += ds * ds;
    vx += dx.cwiseAbs2();
    cov += ds * dx;
  }
  IndependenceReport r;
  r.count = m;
  r.corr = RealVector(k);
  for (int i = 0; i < k; ++i) r.corr(i) = vs > 0.0 && vx(i) > 0.0 ? cov(i) / std::sqrt(vs * vx(i)) : 0.0;
  r.threshold = kSeBand / std::sqrt(static_cast<double>(m));
  r.max_abs_corr = k ? r.corr.cwiseAbs().maxCoeff() : 0.0;
  r.pass = r.max_abs_corr < r.threshold;
  return r;
}

// ---------------------------------------------------------------------------
// Report records for checks that are not "residual <= tol".

// Residual is the max |z|, tolerance the band.
inline CheckResult moment_result(std::string id, std::string formula, long n, const MomentTest& t) {
  return {std::move(id), std::move(formula), static_cast<int>(n), t.max_abs_z, t.max_abs_z, kSeBand, t.pass};
}

// A quantity that must stay above `bound` (smallest eigenvalues). The value is reported
// in the residual slot.
inline CheckResult lower_bound_result(std::string id, std::string formula, int n, double value, double bound) {
  return {std::move(id), std::move(formula), n, value, value, bound, value > bound};
}

inline CheckResult scalar_result(std::string id, std::string formula, int n, double residual, double tol) {
  Residual r;
  r.add(0.0, residual);
  return make_result(std::move(id), std::move(formula), n, r, tol);
}

// ---------------------------------------------------------------------------
// Aggregation: checks with the same id are merged by taking the worst residual, so the
// result does not depend on the order in which parts are combined.

inline CheckResult merge_check(const CheckResult& a, const CheckResult& b) {
  CheckResult c = a;
  c.formula = std::min(a.formula, b.formula);
  c.n_samples = a.n_samples + b.n_samples;
  c.max_abs_residual = std::max(a.max_abs_residual, b.max_abs_residual);
  c.max_rel_residual = std::max(a.max_rel_residual, b.max_rel_residual);
  c.tol = std::min(a.tol, b.tol);
  c.pass = a.pass && b.pass;
  return c;
}

inline VerificationReport merge_reports(const VerificationReport& a, const VerificationReport& b) {
  std::map<std::string, CheckResult> by_id;
  for (const auto* rep : {&a, &b})
    for (const auto& c : rep->checks) {
      auto it = by_id.find(c.id);
      if (it == by_id.end()) by_id.emplace(c.id, c);
      else it->second = merge_check(it->second, c);
    }
  VerificationReport out;
  out.suite = a.suite.empty() ? b.suite : a.suite;
  out.seed = a.seed;
  for (auto& [id, c] : by_id) out.checks.push_back(std::move(c));
  return out;
}

inline VerificationReport merge_reports(const std::vector<VerificationReport>& parts) {
  VerificationReport out;
  for (const auto& p : parts) out = merge_reports(out, p);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const CheckResult& c) {
  j = nlohmann::json{{"id", c.id},
                     {"formula", c.formula},
                     {"n_samples", c.n_samples},
                     {"max_abs_residual", c.max_abs_residual},
                     {"tol", c.tol},
                     {"pass", c.pass}};
}

inline nlohmann::json report_json(const VerificationReport& rep) {
  return nlohmann::json{{"suite", rep.suite}, {"seed", rep.seed}, {"checks", rep.checks}, {"pass", rep.pass()}};
}

}  // namespace mdp
