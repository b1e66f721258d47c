#pragma once

// Generalized power method for phase synchronization, fixed-point checks and
// leave-one-out diagnostic sequences.

#include <cmath>
#include <utility>
#include <vector>

#include "lowrank/numerics.hpp"
#include "lowrank/problems.hpp"

namespace lowrank {

/// Point of the torus {z : |z_1| = ... = |z_n| = 1}.
class TorusPoint {
 public:
  TorusPoint() = default;

  const CVector& vector() const { return z_; }
  Index size() const { return z_.size(); }

  /// Entrywise phase z_k / |z_k|, with 0/0 = 1.
  static TorusPoint project(const CVector& z) {
    TorusPoint out;
    out.z_.resize(z.size());
    for (Index k = 0; k < z.size(); ++k) {
      const double mag = std::abs(z(k));
      out.z_(k) = mag == 0.0 ? Complex(1.0, 0.0) : z(k) / mag;
    }
    return out;
  }

 private:
  CVector z_;
};

inline TorusPoint torus_project(const CVector& z) { return TorusPoint::project(z); }

/// ||P(C z) - z||.
inline double fixed_point_residual(const HermitianMatrix& C, const TorusPoint& z) {
  if (C.dim() != z.size()) throw InvalidDimension("fixed_point_residual: size mismatch");
  return (torus_project(C * z.vector()).vector() - z.vector()).norm();
}

/// z^* C z (real for Hermitian C).
inline double mle_objective(const HermitianMatrix& C, const TorusPoint& z) {
  if (C.dim() != z.size()) throw InvalidDimension("mle_objective: size mismatch");
  const Complex value = z.vector().dot(C * z.vector());
  if (std::abs(value.imag()) > 1e-10 * std::max(1.0, std::abs(value))) {
    throw NumericFailure("mle_objective: non-real quadratic form");
  }
  return value.real();
}

inline constexpr std::uint64_t kGpmInitSeed = 0x6E9A11ULL;

/// Unit-norm leading eigenvector of C (the power-method starting point).
inline CVector principal_eigenvector(const HermitianMatrix& C,
                                     RngStream rng = RngStream(kGpmInitSeed)) {
  return dominant_eigenvector(C, 1e-10, 200000, rng, Spectrum::LargestAlgebraic).vector;
}

struct GpmConfig {
  int max_iter = 1000;
  double tol = 1e-10;  // on fixed_point_residual
};

struct GpmResult {
  SolveReport report;
  std::vector<TorusPoint> history;  // z^(1), z^(2), ... up to the returned iterate
};

/// z^(0) = leading eigenvector of C, z^(t+1) = P(C z^(t)). Stops at the
/// first iterate whose fixed-point residual is below tol. residual_trace[i]
/// is the residual of history[i]; objective_trace[i] its z^* C z.
inline GpmResult gpm(const SyncInstance& inst, const GpmConfig& config = {}) {
  if (inst.n() < 2) throw InvalidDimension("gpm: need n >= 2");
  const HermitianMatrix& C = inst.C;
  GpmResult result;
  SolveReport& report = result.report;

  TorusPoint z = torus_project(C * principal_eigenvector(C));
  for (int t = 1; t <= config.max_iter; ++t) {
    TorusPoint next = torus_project(C * z.vector());
    const double residual = (next.vector() - z.vector()).norm();
    report.iterations = t;
    report.residual_trace.push_back(residual);
    report.objective_trace.push_back(mle_objective(C, z));
    result.history.push_back(z);
    if (residual < config.tol) {
      report.converged = true;
      break;
    }
    z = std::move(next);
  }
  report.estimate = z.vector();
  report.rel_error_mod_phase = relative_error(report.estimate, inst.z_true, Field::Complex);
  return result;
}

// ---------------------------------------------------------------------------
// Leave-one-out diagnostics
// ---------------------------------------------------------------------------

struct LooDiagnostics {
  std::vector<double> max_dist_aux;   // max_k dist(z^(t), z^(k,t))
  std::vector<double> max_corr_main;  // max_k |<W_:,k, z^(t)>|
  std::vector<double> max_corr_aux;   // max_k |<W_:,k, z^(k,t)>|

  std::size_t size() const { return max_dist_aux.size(); }
};

/// C^(k) v without forming C^(k) = C - (k-th row and column of W).
inline CVector leave_one_out_apply(const SyncInstance& inst, Index k, const CVector& v) {
  CVector out = inst.C * v;
  const auto wk = inst.W.dense().col(k);
  out -= wk * v(k);
  out(k) -= wk.dot(v);
  return out;
}

inline HermitianMatrix leave_one_out_matrix(const SyncInstance& inst, Index k) {
  CMatrix C = inst.C.dense();
  C.col(k) -= inst.W.dense().col(k);
  C.row(k) -= inst.W.dense().row(k);
  return HermitianMatrix(std::move(C));
}

/// Runs the main GPM sequence and the n leave-one-out sequences in lockstep
/// (each started from the leading eigenvector of its own matrix) until the
/// main sequence reaches its fixed-point tolerance or max_iter.
inline LooDiagnostics loo_run(const SyncInstance& inst, int max_iter, double tol = 1e-10) {
  const Index n = inst.n();
  if (inst.W.dim() != n) throw InvalidDimension("loo_run: instance carries no noise matrix");
  const CMatrix& W = inst.W.dense();

  TorusPoint main = torus_project(inst.C * principal_eigenvector(inst.C));
  std::vector<TorusPoint> aux;
  aux.reserve(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) {
    const HermitianMatrix Ck = leave_one_out_matrix(inst, k);
    aux.push_back(torus_project(Ck * principal_eigenvector(Ck, RngStream(kGpmInitSeed).split(k))));
  }

  LooDiagnostics diag;
  for (int t = 1; t <= max_iter; ++t) {
    const RVector corr_main = (W * main.vector()).cwiseAbs();
    double dist = 0.0;
    double corr_aux = 0.0;
    for (Index k = 0; k < n; ++k) {
      const CVector& zk = aux[static_cast<std::size_t>(k)].vector();
      dist = std::max(dist, dist_mod_phase(main.vector(), zk));
      corr_aux = std::max(corr_aux, std::abs(W.col(k).dot(zk)));
    }
    diag.max_dist_aux.push_back(dist);
    diag.max_corr_main.push_back(corr_main.maxCoeff());
    diag.max_corr_aux.push_back(corr_aux);

    TorusPoint next = torus_project(inst.C * main.vector());
    const double residual = (next.vector() - main.vector()).norm();
    if (residual < tol || t == max_iter) break;
    main = std::move(next);
    for (Index k = 0; k < n; ++k) {
      auto& zk = aux[static_cast<std::size_t>(k)];
      zk = torus_project(leave_one_out_apply(inst, k, zk.vector()));
    }
  }
  return diag;
}

// ---------------------------------------------------------------------------
// Rate fitting
// ---------------------------------------------------------------------------

struct GeometricFit {
  double rate = 0.0;  // rho in residual ~ A rho^t
  double r2 = 0.0;    // coefficient of determination of the log-linear fit
  int points = 0;
};

/// Least-squares fit of log(trace[t]) = a + t log(rho) over the entries
/// strictly above floor.
inline GeometricFit geometric_fit(const std::vector<double>& trace, double floor = 0.0) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    if (trace[t] > floor && std::isfinite(trace[t])) {
      pts.emplace_back(static_cast<double>(t), std::log(trace[t]));
    }
  }
  GeometricFit fit;
  fit.points = static_cast<int>(pts.size());
  if (pts.size() < 2) return fit;
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  const double slope = sxy / sxx;
  fit.rate = std::exp(slope);
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace lowrank
