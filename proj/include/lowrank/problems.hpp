#pragma once

// Instance generators and error metrics for phase retrieval and phase
// synchronization.

#include <bit>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lowrank/numerics.hpp"

namespace lowrank {

enum class EnsembleKind { ComplexGaussian, RealGaussian, StructuredFrame };

inline std::string to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::ComplexGaussian: return "complex-gaussian";
    case EnsembleKind::RealGaussian: return "real-gaussian";
    case EnsembleKind::StructuredFrame: return "structured-frame";
  }
  return "unknown";
}

inline EnsembleKind ensemble_from_string(const std::string& name) {
  if (name == "complex-gaussian" || name == "gaussian") return EnsembleKind::ComplexGaussian;
  if (name == "real-gaussian") return EnsembleKind::RealGaussian;
  if (name == "structured-frame" || name == "structured") return EnsembleKind::StructuredFrame;
  throw ConfigError("unknown ensemble '" + name + "'");
}

/// Measurement operator. Row k of B is v_k^*, so (B x)_k = <v_k, x>.
struct MeasurementEnsemble {
  EnsembleKind kind = EnsembleKind::ComplexGaussian;
  CMatrix B;

  Index m() const { return B.rows(); }
  Index n() const { return B.cols(); }
};

struct PhaseRetrievalInstance {
  MeasurementEnsemble ensemble;
  RVector b;                      // measured moduli
  std::optional<CVector> x_true;  // ground truth, when known
  Field field = Field::Complex;

  Index m() const { return ensemble.m(); }
  Index n() const { return ensemble.n(); }
  const CMatrix& B() const { return ensemble.B; }
};

struct SyncInstance {
  HermitianMatrix C;  // z_true z_true^* + W
  CVector z_true;     // unit-modulus entries
  double sigma = 0.0;
  HermitianMatrix W;  // noise, zero diagonal

  Index n() const { return C.dim(); }
};

struct SolveReport {
  CVector estimate;
  std::optional<double> rel_error_mod_phase;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_trace;
  std::vector<double> objective_trace;
};

/// inf over global phases of ||u - e^{i alpha} v||. For real-field
/// problems only the signs {+1, -1} are allowed.
inline double dist_mod_phase(const CVector& u, const CVector& v, Field field = Field::Complex) {
  if (u.size() != v.size()) throw InvalidDimension("dist_mod_phase: size mismatch");
  // Subtract the aligned vector explicitly; the expanded form
  // |u|^2 + |v|^2 - 2|<u,v>| loses half the digits near zero.
  const Complex inner = v.dot(u);
  Complex phase(1.0, 0.0);
  if (field == Field::Real) {
    if (inner.real() < 0.0) phase = -1.0;
  } else if (std::abs(inner) > 0.0) {
    phase = inner / std::abs(inner);
  }
  return (u - phase * v).norm();
}

/// Rotates v by the global phase (or sign) that best aligns it with u.
inline CVector align_phase(const CVector& u, const CVector& v, Field field = Field::Complex) {
  const Complex inner = v.dot(u);
  if (field == Field::Real) return inner.real() < 0.0 ? CVector(-v) : v;
  const double mag = std::abs(inner);
  return mag == 0.0 ? v : CVector(v * (inner / mag));
}

inline double relative_error(const CVector& estimate, const CVector& truth, Field field) {
  return dist_mod_phase(estimate, truth, field) / truth.norm();
}

inline bool success(const SolveReport& report, double tau = 1e-3) {
  if (!report.rel_error_mod_phase) {
    throw MissingGroundTruth("success: report carries no relative error");
  }
  return *report.rel_error_mod_phase < tau;
}

/// Multi-scale Haar frame (n a power of two). Each block of n rows is the
/// orthonormal Haar basis (constant vector, then every dyadic block of
/// length L = n / 2^j with +1 on its first half and -1 on its second half,
/// scaled by 1/sqrt(L)); repeat r multiplies coordinate k by
/// exp(2 pi i k r / n). Blocks are stacked until m rows exist.
inline CMatrix structured_frame(Index n, Index m) {
  if (n < 2 || !std::has_single_bit(static_cast<unsigned long long>(n))) {
    throw InvalidDimension("structured-frame requires n to be a power of two >= 2");
  }
  std::vector<RVector> haar;
  haar.emplace_back(RVector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))));
  for (Index len = n; len >= 2; len /= 2) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(len));
    for (Index start = 0; start < n; start += len) {
      RVector h = RVector::Zero(n);
      h.segment(start, len / 2).setConstant(scale);
      h.segment(start + len / 2, len / 2).setConstant(-scale);
      haar.push_back(std::move(h));
    }
  }
  CMatrix B(m, n);
  for (Index row = 0; row < m; ++row) {
    const Index repeat = row / n;
    const RVector& h = haar[static_cast<std::size_t>(row % n)];
    for (Index k = 0; k < n; ++k) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * repeat) % n) /
                           static_cast<double>(n);
      // B holds v^*, hence the conjugated modulation.
      B(row, k) = h(k) * std::polar(1.0, -angle);
    }
  }
  return B;
}

inline RVector measure_moduli(const CMatrix& B, const CVector& x) {
  return (B * x).cwiseAbs();
}

/// Random phase retrieval instance. The signal is Gaussian in the field of
/// the ensemble (real for real-gaussian, complex otherwise); with
/// unit_signal it is normalized to ||x_true|| = 1.
inline PhaseRetrievalInstance gen_phase_retrieval(Index n, Index m, EnsembleKind kind,
                                                  RngStream& rng, bool unit_signal = false) {
  if (n < 1 || m < 1) throw InvalidDimension("gen_phase_retrieval: need n >= 1 and m >= 1");
  PhaseRetrievalInstance inst;
  inst.field = kind == EnsembleKind::RealGaussian ? Field::Real : Field::Complex;
  inst.ensemble.kind = kind;
  if (kind == EnsembleKind::StructuredFrame) {
    inst.ensemble.B = structured_frame(n, m);
  } else {
    inst.ensemble.B = sample_gaussian_matrix(rng, m, n, inst.field);
  }
  CVector x = sample_gaussian(rng, n, inst.field);
  if (unit_signal) x /= x.norm();
  inst.b = measure_moduli(inst.ensemble.B, x);
  inst.x_true = std::move(x);
  return inst;
}

/// Phase synchronization instance with i.i.d. complex normal noise of
/// variance sigma^2 above the diagonal.
inline SyncInstance gen_sync(Index n, double sigma, RngStream& rng) {
  if (n < 2) throw InvalidDimension("gen_sync: need n >= 2");
  if (!(sigma >= 0.0)) throw ConfigError("gen_sync: sigma must be nonnegative");
  CVector z(n);
  for (Index k = 0; k < n; ++k) z(k) = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
  CMatrix W = CMatrix::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    for (Index l = k + 1; l < n; ++l) W(k, l) = sigma * rng.complex_normal();
  }
  HermitianMatrix noise(std::move(W));
  CMatrix C = z * z.adjoint() + noise.dense();
  for (Index k = 0; k < n; ++k) C(k, k) = 1.0;
  return {HermitianMatrix(std::move(C)), std::move(z), sigma, std::move(noise)};
}

}  // namespace lowrank
