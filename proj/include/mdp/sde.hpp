#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mdp/calculus.hpp"
#include "mdp/errors.hpp"
#include "mdp/rng.hpp"

namespace mdp {

// sigma with sigma sigma^T = 2 G. The generator has no 1/2 on the second-order term,
// so dX = b dt + sigma dB has quadratic covariation 2 G dt.
inline RealMatrix diffusion_factor(const RealMatrix& G) {
  if (G.rows() != G.cols()) throw InvalidArgument("diffusion_factor: G must be square");
  const int n = static_cast<int>(G.rows());
  if (n == 0) return RealMatrix(0, 0);
  const RealMatrix g2 = G + G.transpose();  // 2G, symmetrised
  const double scale = std::max(1.0, g2.cwiseAbs().maxCoeff());

  Eigen::LLT<RealMatrix> llt(g2);
  if (llt.info() == Eigen::Success) {
    RealMatrix s = llt.matrixL();
    if ((s * s.transpose() - g2).cwiseAbs().maxCoeff() < 1e-10 * scale) return s;
  }

  // Semidefinite: P^T L D L^T P with diagonal pivoting, D clamped at zero.
  Eigen::LDLT<RealMatrix> ldlt(g2);
  const RealVector dvec = ldlt.vectorD();
  if (dvec.minCoeff() < -2e-10 * scale) throw NotPsdError("diffusion_factor: G is not positive semidefinite");
  const RealMatrix L = ldlt.matrixL();
  RealMatrix s = ldlt.transpositionsP().transpose() * (L * dvec.cwiseMax(0.0).cwiseSqrt().asDiagonal());
  if ((s * s.transpose() - g2).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw NotPsdError("diffusion_factor: G is not positive semidefinite");
  return s;
}

// ---------------------------------------------------------------------------
// Euler-Maruyama with step halving: a proposal outside the domain is redrawn with half
// the step; accepted sub-steps are chained until the full dt is consumed.

struct StepStats {
  long accepted = 0;
  long rejected = 0;
};

inline RealVector em_step(const DiffusionModel& model, const RealVector& x0, double dt, Rng& rng, int max_retries = 20,
                          StepStats* stats = nullptr) {
  if (!(dt >= 0.0)) throw InvalidArgument("em_step: dt must be non-negative");
  if (max_retries < 0) throw InvalidArgument("em_step: retries must be non-negative");
  RealVector x = x0;
  double remaining = dt;
  while (remaining > 0.0) {
    const RealMatrix sigma = diffusion_factor(model.gamma(x));
    const RealVector b = model.drift(x);
    double h = remaining;
    for (int attempt = 0;; ++attempt) {
      RealVector xi(x.size());
      for (int i = 0; i < xi.size(); ++i) xi(i) = rng.gaussian();
      const RealVector y = x + b * h + sigma * xi * std::sqrt(h);
      if (y.allFinite() && model.contains(y)) {
        x = y;
        remaining -= h;
        if (stats) ++stats->accepted;
        break;
      }
      if (stats) ++stats->rejected;
      if (attempt >= max_retries) {
        std::ostringstream msg;
        msg << "em_step: proposal left the domain after " << max_retries << " halvings; position ("
            << x.transpose() << "), last step " << h;
        throw StepRejectedError(msg.str());
      }
      h *= 0.5;
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Simulation with streaming moments.

struct SimConfig {
  double dt = 1e-3;
  long n_steps = 1000;
  long thin = 1;
  std::uint64_t seed = 0;
  int max_step_retries = 20;
  long burn_in = 0;
  bool record_states = false;

  void validate() const {
    if (!(dt > 0.0)) throw InvalidArgument("simulate: dt must be positive");
    if (thin < 1) throw InvalidArgument("simulate: thin must be >= 1");
    if (max_step_retries < 0) throw InvalidArgument("simulate: retries must be >= 0");
    if (n_steps < 0 || burn_in < 0) throw InvalidArgument("simulate: step counts must be non-negative");
  }
};

// Standard error of the overall mean from the spread of k batch means.
inline RealVector batch_std_error(const std::vector<RealVector>& batches, int dim) {
  const int k = static_cast<int>(batches.size());
  if (k < 2) return RealVector::Constant(dim, std::numeric_limits<double>::quiet_NaN());
  RealVector bm = RealVector::Zero(dim);
  for (const auto& b : batches) bm += b;
  bm /= k;
  RealVector var = RealVector::Zero(dim);
  for (const auto& b : batches) var += (b - bm).cwiseAbs2();
  return (var / (static_cast<double>(k) * (k - 1))).cwiseSqrt();
}

struct PathSummary {
  static constexpr int kBatches = 20;

  std::uint64_t seed = 0;
  long count = 0;            // floor((n_steps - burn_in) / thin)
  RealVector mean;
  RealMatrix second_moment;  // E[x x^T]
  std::vector<RealVector> batch_means;
  std::vector<RealVector> batch_squares;  // batch means of x_i^2
  StepStats steps;
  std::vector<RealVector> states;  // only with record_states
  RealVector final_state;

  RealMatrix covariance() const { return second_moment - mean * mean.transpose(); }

  RealVector std_error() const { return batch_std_error(batch_means, static_cast<int>(mean.size())); }
  RealVector second_moment_std_error() const {
    return batch_std_error(batch_squares, static_cast<int>(mean.size()));
  }

  // count * Var(x) / (batch size * Var(batch means)), per coordinate.
  RealVector effective_sample_size() const {
    const RealVector se = std_error();
    const RealVector var = covariance().diagonal();
    RealVector ess(mean.size());
    for (int i = 0; i < ess.size(); ++i) ess(i) = se(i) > 0.0 ? var(i) / (se(i) * se(i)) : static_cast<double>(count);
    return ess;
  }

  double rejection_fraction() const {
    const long total = steps.accepted + steps.rejected;
    return total ? static_cast<double>(steps.rejected) / total : 0.0;
  }
};

inline PathSummary simulate(const DiffusionModel& model, const RealVector& x0, const SimConfig& cfg) {
  cfg.validate();
  if (x0.size() != model.dim) throw InvalidArgument("simulate: x0 has the wrong dimension");
  if (!model.contains(x0)) throw DomainError("simulate: x0 is outside the domain");
  Rng rng(cfg.seed);
  const int n = model.dim;
  PathSummary out;
  out.seed = cfg.seed;
  out.count = cfg.n_steps > cfg.burn_in ? (cfg.n_steps - cfg.burn_in) / cfg.thin : 0;
  const long batch = out.count / PathSummary::kBatches;
  RealVector sum = RealVector::Zero(n), bsum = RealVector::Zero(n), bsum2 = RealVector::Zero(n);
  RealMatrix sum2 = RealMatrix::Zero(n, n);
  long recorded = 0;

  RealVector x = x0;
  for (long step = 1; step <= cfg.n_steps; ++step) {
    x = em_step(model, x, cfg.dt, rng, cfg.max_step_retries, &out.steps);
    if (step <= cfg.burn_in || (step - cfg.burn_in) % cfg.thin != 0) continue;
    sum += x;
    sum2 += x * x.transpose();
    if (cfg.record_states) out.states.push_back(x);
    ++recorded;
    if (batch > 0 && static_cast<int>(out.batch_means.size()) < PathSummary::kBatches) {
      bsum += x;
      bsum2 += x.cwiseAbs2();
      if (recorded % batch == 0) {
        out.batch_means.push_back(bsum / static_cast<double>(batch));
        out.batch_squares.push_back(bsum2 / static_cast<double>(batch));
        bsum.setZero();
        bsum2.setZero();
      }
    }
  }
  out.final_state = x;
  out.mean = recorded ? RealVector(sum / recorded) : RealVector::Zero(n);
  out.second_moment = recorded ? RealMatrix(sum2 / recorded) : RealMatrix::Zero(n, n);
  return out;
}

// Sample mean and covariance of one Euler-Maruyama increment over `replicas` draws.
struct IncrementMoments {
  RealVector mean;
  RealMatrix cov;
  RealVector mean_se;
};

inline IncrementMoments one_step_moments(const DiffusionModel& model, const RealVector& x, double dt, long replicas,
                                         Rng& rng) {
  const int n = model.dim;
  RealVector s = RealVector::Zero(n);
  RealMatrix s2 = RealMatrix::Zero(n, n);
  for (long r = 0; r < replicas; ++r) {
    const RealVector dx = em_step(model, x, dt, rng) - x;
    s += dx;
    s2 += dx * dx.transpose();
  }
  IncrementMoments m;
  m.mean = s / replicas;
  m.cov = (s2 - replicas * m.mean * m.mean.transpose()) / (replicas - 1);
  m.mean_se = (m.cov.diagonal() / replicas).cwiseSqrt();
  return m;
}

// CSV with a header of coordinate names, one recorded state per row.
inline void write_states_csv(std::ostream& os, const PathSummary& s, const std::vector<std::string>& names) {
  for (size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
  os << "\n";
  os.precision(17);
  for (const auto& x : s.states) {
    for (int i = 0; i < x.size(); ++i) os << (i ? "," : "") << x(i);
    os << "\n";
  }
}

}  // namespace mdp
