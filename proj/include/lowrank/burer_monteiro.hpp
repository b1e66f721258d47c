#pragma once

// Factorized unit-diagonal SDPs: min Re Tr(C V V^*) over matrices V whose
// rows have unit norm, solved by Riemannian gradient descent with Armijo
// backtracking. Includes the PhaseCut and synchronization cost matrices,
// rounding to a vector solution and a sampled second-order probe.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lowrank/numerics.hpp"
#include "lowrank/phase_sync.hpp"
#include "lowrank/problems.hpp"

namespace lowrank {

enum class Provenance { PhaseCut, Sync, Raw };

inline std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::PhaseCut: return "phasecut";
    case Provenance::Sync: return "sync";
    case Provenance::Raw: return "raw";
  }
  return "raw";
}

inline Provenance provenance_from_string(const std::string& name) {
  if (name == "phasecut") return Provenance::PhaseCut;
  if (name == "sync") return Provenance::Sync;
  if (name == "raw") return Provenance::Raw;
  throw ConfigError("unknown provenance '" + name + "'");
}

/// C = Diag(s) (I - Q Q^*) Diag(s) with Q orthonormal columns, kept
/// alongside the dense cost when available so that products with tall
/// factors cost O(N r p) instead of O(N^2 p).
struct ScaledProjector {
  RVector s;
  CMatrix Q;

  /// R = (I - Q Q^*) Diag(s) V, so that C V = Diag(s) R and
  /// Re Tr(V^* C V) = ||R||^2 without cancellation.
  CMatrix residual(const CMatrix& V) const {
    CMatrix R = s.cast<Complex>().asDiagonal() * V;
    R.noalias() -= Q * (Q.adjoint() * R);
    return R;
  }
};

/// min Re Tr(C U) subject to U >= 0, U_kk = 1.
struct UnitDiagSDP {
  HermitianMatrix cost;
  Provenance provenance = Provenance::Raw;
  std::optional<ScaledProjector> factored;

  Index dim() const { return cost.dim(); }

  /// C V.
  CMatrix apply(const CMatrix& V) const {
    if (!factored) return cost.dense() * V;
    return factored->s.cast<Complex>().asDiagonal() * factored->residual(V);
  }

  /// Re Tr(V^* C V) together with C V.
  std::pair<double, CMatrix> evaluate(const CMatrix& V) const {
    if (!factored) {
      CMatrix CV = cost.dense() * V;
      const double f = (V.conjugate().cwiseProduct(CV)).sum().real();
      return {f, std::move(CV)};
    }
    const CMatrix R = factored->residual(V);
    return {R.squaredNorm(), factored->s.cast<Complex>().asDiagonal() * R};
  }
};

/// N x p matrix with unit-norm rows.
class ObliqueFactor {
 public:
  static constexpr double kRowTolerance = 1e-12;

  ObliqueFactor() = default;

  /// Takes V as is; every row must already have unit norm.
  explicit ObliqueFactor(CMatrix V) : V_(std::move(V)) {
    if (V_.rows() < 1 || V_.cols() < 1) throw InvalidDimension("ObliqueFactor: empty matrix");
    for (Index k = 0; k < V_.rows(); ++k) {
      if (std::abs(V_.row(k).norm() - 1.0) > kRowTolerance) {
        throw ConfigError("ObliqueFactor: row " + std::to_string(k) + " is not unit norm");
      }
    }
  }

  /// Rows of V rescaled to unit norm; zero rows become the first standard
  /// direction.
  static ObliqueFactor normalize(CMatrix V) {
    for (Index k = 0; k < V.rows(); ++k) {
      const double norm = V.row(k).norm();
      if (norm == 0.0) {
        V.row(k).setZero();
        V(k, 0) = 1.0;
      } else {
        V.row(k) /= norm;
      }
    }
    ObliqueFactor out;
    out.V_ = std::move(V);
    return out;
  }

  static ObliqueFactor random(Index N, Index p, RngStream& rng) {
    return normalize(sample_gaussian_matrix(rng, N, p, Field::Complex));
  }

  const CMatrix& matrix() const { return V_; }
  Index rows() const { return V_.rows(); }
  Index cols() const { return V_.cols(); }

 private:
  CMatrix V_;
};

// ---------------------------------------------------------------------------
// Cost matrices
// ---------------------------------------------------------------------------

/// M = Diag(b) (I - B B^+) Diag(b), so that for unit-modulus u
/// u^* M u = min_x sum_k |b_k u_k - <v_k, x>|^2.
inline UnitDiagSDP phasecut_cost(const PhaseRetrievalInstance& inst) {
  const LeastSquaresSolver solver(inst.B());
  CMatrix Q = solver.range_basis();
  const CMatrix DQ = inst.b.cast<Complex>().asDiagonal() * Q;
  CMatrix M = -DQ * DQ.adjoint();
  M.diagonal() += inst.b.cwiseAbs2().cast<Complex>();
  return {HermitianMatrix(std::move(M)), Provenance::PhaseCut, ScaledProjector{inst.b, std::move(Q)}};
}

inline UnitDiagSDP sync_cost(const SyncInstance& inst) { return {-inst.C, Provenance::Sync, {}}; }

/// Symmetric C with i.i.d. N(0, 1) entries above the diagonal and N(0, 2)
/// on it.
inline UnitDiagSDP random_unit_diag_sdp(Index N, RngStream& rng) {
  if (N < 1) throw InvalidDimension("random_unit_diag_sdp: need N >= 1");
  CMatrix C(N, N);
  for (Index k = 0; k < N; ++k) {
    C(k, k) = std::numbers::sqrt2 * rng.normal();
    for (Index l = k + 1; l < N; ++l) C(k, l) = rng.normal();
  }
  return {HermitianMatrix(std::move(C)), Provenance::Raw, {}};
}

// ---------------------------------------------------------------------------
// Manifold geometry
// ---------------------------------------------------------------------------

inline void check_dims(const UnitDiagSDP& problem, const CMatrix& V, const char* where) {
  if (V.rows() != problem.dim()) throw InvalidDimension(std::string(where) + ": dimension mismatch");
}

/// f_C(V) = Re Tr(C V V^*).
inline double f_C(const UnitDiagSDP& problem, const ObliqueFactor& V) {
  check_dims(problem, V.matrix(), "f_C");
  return problem.evaluate(V.matrix()).first;
}

/// Rowwise removal of the normal component: h_k = g_k - Re<v_k, g_k> v_k.
inline CMatrix project_tangent(const ObliqueFactor& V, CMatrix G) {
  if (G.rows() != V.rows() || G.cols() != V.cols()) {
    throw InvalidDimension("project_tangent: dimension mismatch");
  }
  for (Index k = 0; k < G.rows(); ++k) {
    const double normal = V.matrix().row(k).conjugate().cwiseProduct(G.row(k)).sum().real();
    G.row(k) -= normal * V.matrix().row(k);
  }
  return G;
}

/// Riemannian gradient: the tangent projection of 2 C V.
inline CMatrix riemannian_grad(const UnitDiagSDP& problem, const ObliqueFactor& V) {
  check_dims(problem, V.matrix(), "riemannian_grad");
  return project_tangent(V, 2.0 * problem.apply(V.matrix()));
}

/// Row-renormalization retraction of V + H.
inline ObliqueFactor retract(const ObliqueFactor& V, const CMatrix& H) {
  if (H.rows() != V.rows() || H.cols() != V.cols()) throw InvalidDimension("retract: dimension mismatch");
  return ObliqueFactor::normalize(V.matrix() + H);
}

// ---------------------------------------------------------------------------
// Riemannian gradient descent
// ---------------------------------------------------------------------------

/// First trial step of each Armijo search after the first iteration.
enum class StepRule {
  Fixed,            // always step0
  Grow,             // twice the last accepted step
  BarzilaiBorwein,  // ||s||^2 / Re<s, y> from the last accepted step
};

struct GdConfig {
  double step0 = 0.0;  // initial Armijo step; <= 0 means 1 / (2 ||C||_op)
  int max_iter = 20000;
  double grad_tol = 1e-6;  // stop when ||grad||_F < grad_tol * N
  double armijo_c = 1e-4;
  StepRule step_rule = StepRule::BarzilaiBorwein;
};

struct GdResult {
  ObliqueFactor V;
  SolveReport report;  // estimate left empty; see round_factor
};

inline constexpr std::uint64_t kNormEstimateSeed = 0x0B11E7ULL;

/// ||C||_op by power iteration (loose tolerance).
inline double operator_norm_estimate(const HermitianMatrix& C) {
  RngStream rng(kNormEstimateSeed);
  const double norm = std::abs(dominant_eigenvector(C, 1e-4, 100000, rng).value);
  return norm;
}

/// Armijo line search along -grad with retraction. objective_trace holds
/// f_C(V_0) followed by f_C after each accepted step (accumulated from the
/// per-step differences), residual_trace the gradient norms.
inline GdResult riemannian_gd(const UnitDiagSDP& problem, Index p, RngStream& rng,
                              const GdConfig& config = {},
                              const std::optional<ObliqueFactor>& V0 = std::nullopt) {
  const Index N = problem.dim();
  if (p < 1 || p > N) throw InvalidDimension("riemannian_gd: need 1 <= p <= N");
  if (!(config.grad_tol > 0.0)) throw ConfigError("riemannian_gd: grad_tol must be positive");
  if (V0 && (V0->rows() != N || V0->cols() != p)) {
    throw InvalidDimension("riemannian_gd: initial factor has wrong shape");
  }

  double step0 = config.step0;
  if (!(step0 > 0.0)) {
    const double norm = operator_norm_estimate(problem.cost);
    step0 = norm > 0.0 ? 1.0 / (2.0 * norm) : 1.0;
  }
  const double grad_stop = config.grad_tol * static_cast<double>(N);

  GdResult result{V0 ? *V0 : ObliqueFactor::random(N, p, rng), {}};
  SolveReport& report = result.report;
  ObliqueFactor& V = result.V;
  // f and the gradient share the product C V.
  auto [f, CV] = problem.evaluate(V.matrix());
  CMatrix G = project_tangent(V, 2.0 * CV);
  double gnorm = G.norm();
  report.objective_trace.push_back(f);
  report.residual_trace.push_back(gnorm);

  double step = step0;
  for (int it = 0; it < config.max_iter; ++it) {
    if (gnorm < grad_stop) break;
    const double decrease = config.armijo_c * gnorm * gnorm;
    const RVector lambda = (V.matrix().conjugate().cwiseProduct(CV)).rowwise().sum().real();
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      ObliqueFactor trial = retract(V, -step * G);
      const CMatrix s = trial.matrix() - V.matrix();
      // With unit rows before and after, f(V + s) - f(V) equals
      // Re<s, G> + Re<s, C s> - sum_k lambda_k |s_k|^2, where lambda_k =
      // Re<v_k, (C V)_k>. Unlike a difference of two f values this keeps its
      // relative accuracy near a critical point.
      const CMatrix Cs = problem.apply(s);
      const double delta = (s.conjugate().cwiseProduct(G + Cs)).sum().real() -
                           lambda.dot(s.rowwise().squaredNorm());
      if (delta <= -step * decrease) {
        V = std::move(trial);
        CV = problem.apply(V.matrix());
        f += delta;
        CMatrix G_next = project_tangent(V, 2.0 * CV);
        if (config.step_rule == StepRule::BarzilaiBorwein) {
          const double sy = (s.conjugate().cwiseProduct(G_next - G)).sum().real();
          const double bb = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * step;
          step = std::clamp(bb, 1e-3 * step0, 1e6 * step0);
        } else if (config.step_rule == StepRule::Grow) {
          step *= 2.0;
        } else {
          step = step0;
        }
        G = std::move(G_next);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    gnorm = G.norm();
    report.iterations = it + 1;
    report.objective_trace.push_back(f);
    report.residual_trace.push_back(gnorm);
  }
  report.converged = gnorm < grad_stop;
  return result;
}

// ---------------------------------------------------------------------------
// Rounding
// ---------------------------------------------------------------------------

/// Leading eigenvector of V V^* scaled by the square root of its eigenvalue,
/// obtained from the small p x p Gram matrix V^* V.
inline CVector leading_factor_direction(const ObliqueFactor& V) {
  const CMatrix gram = V.matrix().adjoint() * V.matrix();
  const EigenDecomposition eig = hermitian_eigen(HermitianMatrix(gram));
  const Index top = eig.values.size() - 1;
  return V.matrix() * eig.vectors.col(top);
}

/// Rounds a factor to a vector solution: the torus projection of the
/// leading direction of V V^*. For PhaseCut problems the signal is then
/// recovered as x = B^+ (b .* z), which needs the instance.
inline CVector round_factor(const UnitDiagSDP& problem, const ObliqueFactor& V,
                            const PhaseRetrievalInstance* inst = nullptr) {
  check_dims(problem, V.matrix(), "round_factor");
  const TorusPoint z = torus_project(leading_factor_direction(V));
  if (problem.provenance != Provenance::PhaseCut) return z.vector();
  if (inst == nullptr) throw ConfigError("round_factor: PhaseCut rounding needs the instance");
  if (inst->m() != problem.dim()) throw InvalidDimension("round_factor: instance does not match problem");
  return least_squares(inst->B(), inst->b.cast<Complex>().cwiseProduct(z.vector()));
}

// ---------------------------------------------------------------------------
// Second-order probe
// ---------------------------------------------------------------------------

struct SOSPCertificate {
  double riemannian_grad_norm = 0.0;
  double min_quadform = 0.0;  // sampled, not certified
  int trials = 0;
  int factor_rank = 0;
};

/// Numerical rank at a relative singular-value threshold.
inline int numerical_rank(const CMatrix& V, double rel = 1e-8) {
  const RVector sv = Eigen::JacobiSVD<CMatrix>(V).singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int rank = 0;
  for (Index i = 0; i < sv.size(); ++i) rank += sv(i) > rel * sv(0) ? 1 : 0;
  return rank;
}

/// q(H) = 2 [Re Tr(H^* C H) - sum_k lambda_k ||h_k||^2], lambda_k =
/// Re<v_k, (C V)_k>. Equals the second derivative of f_C along the
/// retraction curve t -> retract(V, t H) at t = 0.
inline double hessian_quadform(const UnitDiagSDP& problem, const ObliqueFactor& V, const CMatrix& H) {
  check_dims(problem, V.matrix(), "hessian_quadform");
  const CMatrix& C = problem.cost.dense();
  const CMatrix CV = C * V.matrix();
  double value = (H.conjugate().cwiseProduct(C * H)).sum().real();
  for (Index k = 0; k < H.rows(); ++k) {
    const double lambda = V.matrix().row(k).conjugate().cwiseProduct(CV.row(k)).sum().real();
    value -= lambda * H.row(k).squaredNorm();
  }
  return 2.0 * value;
}

/// Second central difference of f_C along the retraction curve.
inline double retraction_second_difference(const UnitDiagSDP& problem, const ObliqueFactor& V,
                                           const CMatrix& H, double t) {
  const double f0 = f_C(problem, V);
  const double fp = f_C(problem, retract(V, t * H));
  const double fm = f_C(problem, retract(V, -t * H));
  return (fp - 2.0 * f0 + fm) / (t * t);
}

/// Random unit-Frobenius-norm tangent direction at V.
inline CMatrix random_tangent(const ObliqueFactor& V, RngStream& rng) {
  CMatrix H = project_tangent(V, sample_gaussian_matrix(rng, V.rows(), V.cols(), Field::Complex));
  return H / H.norm();
}

/// Checks q(H) against finite differences along the retraction; returns q(H)
/// or throws FDInconsistent when no step in 1e-2 .. 1e-2 / 2^11 agrees
/// within rel_tol.
inline double checked_quadform(const UnitDiagSDP& problem, const ObliqueFactor& V, const CMatrix& H,
                               double rel_tol = 0.05) {
  const double q = hessian_quadform(problem, V, H);
  const double floor = 1e-7 * problem.cost.dense().norm() * H.squaredNorm();
  double t = 1e-2 / std::max(1.0, H.norm());
  for (int attempt = 0; attempt < 12; ++attempt, t *= 0.5) {
    const double fd = retraction_second_difference(problem, V, H, t);
    if (std::abs(fd - q) <= rel_tol * std::max(std::abs(q), std::abs(fd)) + floor) return q;
  }
  throw FDInconsistent("sosp_probe: quadratic form disagrees with finite differences");
}

inline SOSPCertificate sosp_probe(const UnitDiagSDP& problem, const ObliqueFactor& V, int trials,
                                  RngStream& rng) {
  if (trials < 1) throw ConfigError("sosp_probe: need trials >= 1");
  SOSPCertificate cert;
  cert.riemannian_grad_norm = riemannian_grad(problem, V).norm();
  cert.trials = trials;
  cert.factor_rank = numerical_rank(V.matrix());
  for (int i = 0; i < trials; ++i) {
    const double q = checked_quadform(problem, V, random_tangent(V, rng));
    cert.min_quadform = i == 0 ? q : std::min(cert.min_quadform, q);
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Reference solver
// ---------------------------------------------------------------------------

/// Width for which every second-order critical point is a global optimum:
/// p(p+1)/2 > N, plus one.
inline Index reference_rank(Index N) {
  const Index p = static_cast<Index>(std::ceil(std::sqrt(2.0 * static_cast<double>(N)))) + 1;
  return std::min(p, N);
}

struct ReferenceSolution {
  double value = 0.0;
  ObliqueFactor V;
};

/// Best of `starts` runs of riemannian_gd at width reference_rank(N).
inline ReferenceSolution reference_sdp_solve(const UnitDiagSDP& problem, RngStream& rng,
                                             const GdConfig& config = {}, int starts = 3) {
  if (problem.dim() > 512) throw InvalidDimension("reference_sdp_solve: limited to N <= 512");
  if (starts < 1) throw ConfigError("reference_sdp_solve: need starts >= 1");
  const Index p = reference_rank(problem.dim());
  std::optional<ReferenceSolution> best;
  for (int s = 0; s < starts; ++s) {
    RngStream child = rng.split(static_cast<std::uint64_t>(s));
    GdResult run = riemannian_gd(problem, p, child, config);
    const double value = run.report.objective_trace.back();
    if (!best || value < best->value) best = ReferenceSolution{value, std::move(run.V)};
  }
  return std::move(*best);
}

}  // namespace lowrank
