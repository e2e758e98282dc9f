#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mdp/errors.hpp"

namespace mdp {

using Rational = boost::multiprecision::cpp_rational;

// Polynomial over the rationals in a fixed, named list of variables.
// Terms with zero coefficient are never stored.
class MultiPoly {
 public:
  using Exponent = std::vector<int>;

  MultiPoly() = default;
  explicit MultiPoly(std::vector<std::string> vars) : vars_(std::move(vars)) {}

  static MultiPoly constant(const std::vector<std::string>& vars, const Rational& c) {
    MultiPoly p(vars);
    p.add_term(Exponent(vars.size(), 0), c);
    return p;
  }

  static MultiPoly variable(const std::vector<std::string>& vars, int i) {
    MultiPoly p(vars);
    Exponent e(vars.size(), 0);
    e.at(i) = 1;
    p.add_term(e, 1);
    return p;
  }

  const std::vector<std::string>& vars() const { return vars_; }
  const std::map<Exponent, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  void add_term(const Exponent& e, const Rational& c) {
    if (c == 0) return;
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      terms_.emplace(e, c);
    } else {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  // Total degree; -1 for the zero polynomial.
  int degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, total(e));
    return d;
  }

  MultiPoly operator+(const MultiPoly& o) const {
    check_vars(o);
    MultiPoly r = *this;
    for (const auto& [e, c] : o.terms_) r.add_term(e, c);
    return r;
  }

  MultiPoly operator-() const {
    MultiPoly r(vars_);
    for (const auto& [e, c] : terms_) r.terms_.emplace(e, -c);
    return r;
  }

  MultiPoly operator-(const MultiPoly& o) const { return *this + (-o); }

  MultiPoly operator*(const MultiPoly& o) const {
    check_vars(o);
    MultiPoly r(vars_);
    for (const auto& [e1, c1] : terms_)
      for (const auto& [e2, c2] : o.terms_) {
        Exponent e(e1.size());
        for (size_t i = 0; i < e.size(); ++i) e[i] = e1[i] + e2[i];
        r.add_term(e, c1 * c2);
      }
    return r;
  }

  MultiPoly operator*(const Rational& s) const {
    MultiPoly r(vars_);
    for (const auto& [e, c] : terms_) r.add_term(e, c * s);
    return r;
  }

  bool operator==(const MultiPoly& o) const { return vars_ == o.vars_ && terms_ == o.terms_; }

  MultiPoly derivative(int i) const {
    MultiPoly r(vars_);
    for (const auto& [e, c] : terms_) {
      if (e.at(i) == 0) continue;
      Exponent f = e;
      f[i] -= 1;
      r.add_term(f, c * e[i]);
    }
    return r;
  }

  Rational evaluate(const std::vector<Rational>& x) const {
    if (x.size() != vars_.size()) throw VariableMismatch("evaluate: wrong number of values");
    Rational s = 0;
    for (const auto& [e, c] : terms_) {
      Rational t = c;
      for (size_t i = 0; i < e.size(); ++i)
        for (int k = 0; k < e[i]; ++k) t *= x[i];
      s += t;
    }
    return s;
  }

  double evaluate(const std::vector<double>& x) const {
    if (x.size() != vars_.size()) throw VariableMismatch("evaluate: wrong number of values");
    double s = 0.0;
    for (const auto& [e, c] : terms_) {
      double t = static_cast<double>(c);
      for (size_t i = 0; i < e.size(); ++i)
        for (int k = 0; k < e[i]; ++k) t *= x[i];
      s += t;
    }
    return s;
  }

  // Division by a single polynomial in graded-lex order: *this = q * g + r with no
  // term of r divisible by the leading term of g. For one divisor r == 0 iff g | *this.
  std::pair<MultiPoly, MultiPoly> divide(const MultiPoly& g) const {
    check_vars(g);
    if (g.is_zero()) throw InvalidArgument("divide: division by the zero polynomial");
    const auto [lg, lc] = g.leading();
    MultiPoly q(vars_), r(vars_), p = *this;
    while (!p.is_zero()) {
      const auto [lp, cp] = p.leading();
      bool divisible = true;
      Exponent t(lp.size());
      for (size_t i = 0; i < lp.size(); ++i) {
        t[i] = lp[i] - lg[i];
        if (t[i] < 0) divisible = false;
      }
      MultiPoly step(vars_);
      if (divisible) {
        step.add_term(t, cp / lc);
        q = q + step;
        p = p - step * g;
      } else {
        step.add_term(lp, cp);
        r = r + step;
        p = p - step;
      }
    }
    return {q, r};
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string s;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      if (!s.empty()) s += " + ";
      s += it->second.str();
      for (size_t i = 0; i < it->first.size(); ++i)
        if (it->first[i] > 0)
          s += "*" + vars_[i] + (it->first[i] > 1 ? "^" + std::to_string(it->first[i]) : "");
    }
    return s;
  }

 private:
  static int total(const Exponent& e) {
    int t = 0;
    for (int v : e) t += v;
    return t;
  }

  static bool grlex_less(const Exponent& a, const Exponent& b) {
    const int ta = total(a), tb = total(b);
    return ta != tb ? ta < tb : a < b;
  }

  std::pair<Exponent, Rational> leading() const {
    auto best = terms_.begin();
    for (auto it = terms_.begin(); it != terms_.end(); ++it)
      if (grlex_less(best->first, it->first)) best = it;
    return {best->first, best->second};
  }

  void check_vars(const MultiPoly& o) const {
    if (vars_ != o.vars_) throw VariableMismatch("polynomials use different variable lists");
  }

  std::vector<std::string> vars_;
  std::map<Exponent, Rational> terms_;
};

// Co-metric and drift of a polynomial diffusion, one polynomial per entry.
struct PolyOperator {
  std::vector<std::vector<MultiPoly>> gamma;  // g^{ij}
  std::vector<MultiPoly> drift;               // b^i
};

// Gamma(f, g) = sum g^{ij} d_i f d_j g.
inline MultiPoly poly_gamma_apply(const PolyOperator& op, const MultiPoly& f, const MultiPoly& g) {
  MultiPoly out(f.vars());
  const int n = static_cast<int>(op.gamma.size());
  for (int i = 0; i < n; ++i) {
    const MultiPoly fi = f.derivative(i);
    if (fi.is_zero()) continue;
    for (int j = 0; j < n; ++j) out = out + op.gamma[i][j] * fi * g.derivative(j);
  }
  return out;
}

inline MultiPoly poly_generator_apply(const PolyOperator& op, const MultiPoly& f) {
  MultiPoly out(f.vars());
  const int n = static_cast<int>(op.gamma.size());
  for (int i = 0; i < n; ++i) {
    const MultiPoly fi = f.derivative(i);
    out = out + op.drift[i] * fi;
    for (int j = 0; j < n; ++j) out = out + op.gamma[i][j] * fi.derivative(j);
  }
  return out;
}

struct BoundaryDivision {
  std::vector<MultiPoly> quotients;  // Gamma(x_i, P) / P for each coordinate
  bool is_affine = false;            // all divisions exact with quotients of degree <= 1
};

// Exact test of the boundary equation Gamma(x_i, P) = L_i P with L_i affine.
inline BoundaryDivision check_boundary_affine_exact(const PolyOperator& op, const MultiPoly& p) {
  BoundaryDivision out;
  out.is_affine = true;
  const auto& vars = p.vars();
  for (size_t i = 0; i < vars.size(); ++i) {
    const MultiPoly gi = poly_gamma_apply(op, MultiPoly::variable(vars, static_cast<int>(i)), p);
    auto [q, r] = gi.divide(p);
    if (!r.is_zero() || q.degree() > 1) out.is_affine = false;
    out.quotients.push_back(std::move(q));
  }
  return out;
}

}  // namespace mdp
