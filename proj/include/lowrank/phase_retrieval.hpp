#pragma once

// Non-convex phase retrieval solvers: alternating projections
// (Gerchberg-Saxton / error reduction) and Wirtinger Flow with spectral
// initialization.

#include <cmath>
#include <limits>
#include <optional>

#include "lowrank/numerics.hpp"
#include "lowrank/problems.hpp"

namespace lowrank {

/// Projection onto E = {y : |y_k| = b_k}; zero entries get phase 1.
inline CVector project_modulus(const CVector& y, const RVector& b) {
  if (y.size() != b.size()) throw InvalidDimension("project_modulus: size mismatch");
  CVector out(y.size());
  for (Index k = 0; k < y.size(); ++k) {
    const double mag = std::abs(y(k));
    out(k) = mag == 0.0 ? Complex(b(k), 0.0) : y(k) * (b(k) / mag);
  }
  return out;
}

inline void fill_error(SolveReport& report, const PhaseRetrievalInstance& inst) {
  if (inst.x_true) report.rel_error_mod_phase = relative_error(report.estimate, *inst.x_true, inst.field);
}

// ---------------------------------------------------------------------------
// Alternating projections
// ---------------------------------------------------------------------------

struct APConfig {
  int max_iter = 3000;
  double tol = 1e-9;  // relative iterate change ||y_t - y_{t-1}|| / ||y_t||
};

/// One alternating-projections step mapped to signal space:
/// x = B^+ P_E(y).
inline CVector ap_signal_step(const PhaseRetrievalInstance& inst, const LeastSquaresSolver& solver,
                              const CVector& y) {
  return solver.solve(project_modulus(y, inst.b));
}

/// Alternating projections y_t = P_Range(B)(P_E(y_{t-1})) from a given y_0.
/// A pre-factorized solver for B may be passed to amortize it across runs.
inline SolveReport alternating_projections_from(const PhaseRetrievalInstance& inst,
                                                const CVector& y0, const APConfig& config = {},
                                                const LeastSquaresSolver* solver = nullptr) {
  if (y0.size() != inst.m()) throw InvalidDimension("alternating_projections: y0 has wrong size");
  std::optional<LeastSquaresSolver> owned;
  if (solver == nullptr) solver = &owned.emplace(inst.B());

  SolveReport report;
  CVector y = y0;
  CVector x = CVector::Zero(inst.n());
  for (int t = 1; t <= config.max_iter; ++t) {
    x = ap_signal_step(inst, *solver, y);
    CVector next = inst.B() * x;
    const double scale = next.norm();
    const double change = (next - y).norm();
    y = std::move(next);
    report.iterations = t;
    report.residual_trace.push_back((y.cwiseAbs() - inst.b).norm());
    if (change <= config.tol * scale) {
      report.converged = true;
      break;
    }
  }
  report.estimate = std::move(x);
  fill_error(report, inst);
  return report;
}

/// Alternating projections from a random Gaussian y_0 in the instance's
/// field.
inline SolveReport alternating_projections(const PhaseRetrievalInstance& inst, RngStream& rng,
                                           const APConfig& config = {},
                                           const LeastSquaresSolver* solver = nullptr) {
  if (inst.m() < inst.n()) throw RankDeficient("alternating_projections: need m >= n");
  const CVector y0 = sample_gaussian(rng, inst.m(), inst.field);
  return alternating_projections_from(inst, y0, config, solver);
}

// ---------------------------------------------------------------------------
// Wirtinger Flow
// ---------------------------------------------------------------------------

struct WFConfig {
  double step_scale = 0.1;
  int max_iter = 5000;
  double grad_tol = 1e-9;
  bool backtracking = true;
};

/// f(x) = 1/(2m) sum_k (|<v_k, x>|^2 - b_k^2)^2.
inline double wf_loss(const PhaseRetrievalInstance& inst, const CVector& x) {
  if (x.size() != inst.n()) throw InvalidDimension("wf_loss: size mismatch");
  const RVector residual = (inst.B() * x).cwiseAbs2() - inst.b.cwiseAbs2();
  return residual.squaredNorm() / (2.0 * static_cast<double>(inst.m()));
}

/// Wirtinger gradient 1/m sum_r (|<v_r, x>|^2 - b_r^2) v_r v_r^* x.
/// Directional derivatives are 2 Re<grad, h>.
inline CVector wf_grad(const PhaseRetrievalInstance& inst, const CVector& x) {
  if (x.size() != inst.n()) throw InvalidDimension("wf_grad: size mismatch");
  const CVector Bx = inst.B() * x;
  const RVector weight = Bx.cwiseAbs2() - inst.b.cwiseAbs2();
  return inst.B().adjoint() * (weight.cast<Complex>().cwiseProduct(Bx)) /
         static_cast<double>(inst.m());
}

/// M = 1/m sum_r b_r^2 v_r v_r^*.
inline HermitianMatrix spectral_matrix(const PhaseRetrievalInstance& inst) {
  const CMatrix weighted = inst.b.cwiseAbs2().cast<Complex>().asDiagonal() * inst.B();
  return HermitianMatrix(CMatrix(inst.B().adjoint() * weighted / static_cast<double>(inst.m())));
}

/// sqrt(1/m sum b_r^2), the norm estimate of the signal.
inline double signal_scale(const PhaseRetrievalInstance& inst) {
  return std::sqrt(inst.b.squaredNorm() / static_cast<double>(inst.m()));
}

inline constexpr std::uint64_t kSpectralInitSeed = 0x5EC7A1ULL;

/// Dominant eigenvector of M scaled to norm signal_scale().
inline CVector wf_spectral_init(const PhaseRetrievalInstance& inst,
                                RngStream rng = RngStream(kSpectralInitSeed)) {
  if (inst.m() < 1) throw InvalidDimension("wf_spectral_init: need m >= 1");
  const EigenPair top =
      dominant_eigenvector(spectral_matrix(inst), 1e-10, 200000, rng, Spectrum::LargestAlgebraic);
  CVector x0 = top.vector * signal_scale(inst);
  if (inst.field == Field::Real) {
    // Remove the arbitrary global phase picked up by the complex power
    // iteration so that the iterate stays real.
    Index pivot = 0;
    x0.cwiseAbs().maxCoeff(&pivot);
    x0 *= std::conj(x0(pivot)) / std::abs(x0(pivot));
    x0 = x0.real().cast<Complex>();
  }
  return x0;
}

/// Gradient descent x_{t+1} = x_t - mu grad f(x_t) with mu =
/// step_scale / scale^2, halving mu (persistently) whenever f would
/// increase. Starts from the spectral initialization unless x0 is given.
inline SolveReport wirtinger_flow(const PhaseRetrievalInstance& inst, const WFConfig& config = {},
                                  const std::optional<CVector>& x0 = std::nullopt) {
  if (!(config.step_scale > 0.0) || !(config.grad_tol > 0.0)) {
    throw ConfigError("wirtinger_flow: step_scale and grad_tol must be positive");
  }
  const double scale = signal_scale(inst);
  const double scale2 = std::max(scale * scale, std::numeric_limits<double>::min());
  const double grad_stop = config.grad_tol * scale2 * scale;
  double mu = config.step_scale / scale2;

  SolveReport report;
  CVector x = x0 ? *x0 : wf_spectral_init(inst);
  double f = wf_loss(inst, x);
  CVector g = wf_grad(inst, x);
  report.objective_trace.push_back(f);
  report.residual_trace.push_back(g.norm());

  for (int it = 0; it < config.max_iter; ++it) {
    if (g.norm() < grad_stop) {
      report.converged = true;
      break;
    }
    CVector next = x - mu * g;
    double f_next = wf_loss(inst, next);
    if (config.backtracking) {
      int halvings = 0;
      while (f_next > f && halvings < 60) {
        mu *= 0.5;
        next = x - mu * g;
        f_next = wf_loss(inst, next);
        ++halvings;
      }
      if (f_next > f) break;  // no descent possible at machine precision
    }
    x = std::move(next);
    f = f_next;
    g = wf_grad(inst, x);
    report.iterations = it + 1;
    report.objective_trace.push_back(f);
    report.residual_trace.push_back(g.norm());
  }
  if (!report.converged && g.norm() < grad_stop) report.converged = true;
  report.estimate = std::move(x);
  fill_error(report, inst);
  return report;
}

}  // namespace lowrank
