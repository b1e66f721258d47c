#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library beyond its basic types and the RNG, so agreement with
// the library is a genuine cross-check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "lowrank/numerics.hpp"

namespace oracle {

using lowrank::CMatrix;
using lowrank::Complex;
using lowrank::CVector;
using lowrank::Index;
using lowrank::RngStream;
using lowrank::RVector;

/// (f(x + eps h) - f(x - eps h)) / (2 eps).
inline double central_difference(const std::function<double(const CVector&)>& f, const CVector& x,
                                  const CVector& h, double eps) {
  return (f(x + eps * h) - f(x - eps * h)) / (2.0 * eps);
}

inline double second_central_difference(const std::function<double(const CVector&)>& f,
                                        const CVector& x, const CVector& h, double eps) {
  return (f(x + eps * h) - 2.0 * f(x) + f(x - eps * h)) / (eps * eps);
}

/// min over alpha on a uniform grid of ||u - e^{i alpha} v||.
inline double grid_dist_mod_phase(const CVector& u, const CVector& v, int steps) {
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < steps; ++s) {
    const double alpha = 2.0 * std::numbers::pi * s / steps;
    best = std::min(best, (u - std::polar(1.0, alpha) * v).norm());
  }
  return best;
}

/// Solves B^* B x = B^* y by Cholesky (no QR, no pseudo-inverse).
inline CVector normal_equations(const CMatrix& B, const CVector& y) {
  const CMatrix gram = B.adjoint() * B;
  return gram.llt().solve(B.adjoint() * y);
}

/// Eigenvalues by the general (non-Hermitian) complex Schur solver, real
/// parts sorted ascending.
inline std::vector<double> schur_eigenvalues(const CMatrix& H) {
  Eigen::ComplexEigenSolver<CMatrix> solver(H, false);
  std::vector<double> out;
  for (Index i = 0; i < H.rows(); ++i) out.push_back(solver.eigenvalues()(i).real());
  std::sort(out.begin(), out.end());
  return out;
}

inline CMatrix random_hermitian(Index n, RngStream& rng) {
  CMatrix A(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) A(i, j) = rng.complex_normal();
  }
  return (A + A.adjoint()) / 2.0;
}

inline CMatrix random_unitary(Index p, RngStream& rng) {
  CMatrix A(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) A(i, j) = rng.complex_normal();
  }
  Eigen::HouseholderQR<CMatrix> qr(A);
  return qr.householderQ() * CMatrix::Identity(p, p);
}

inline CVector random_torus(Index n, RngStream& rng) {
  CVector u(n);
  for (Index k = 0; k < n; ++k) u(k) = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
  return u;
}

/// min_x sum_k |b_k u_k - (B x)_k|^2 via the normal equations.
inline double phasecut_residual(const CMatrix& B, const RVector& b, const CVector& u) {
  const CVector target = b.cast<Complex>().cwiseProduct(u);
  return (target - B * normal_equations(B, target)).squaredNorm();
}

/// max over z with z_0 = 1 and z_k in the `phases`-point grid of z^* C z.
inline double brute_force_sync_max(const CMatrix& C, int phases) {
  const Index n = C.rows();
  std::vector<int> digit(static_cast<std::size_t>(n), 0);
  CVector z(n);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    for (Index k = 0; k < n; ++k) {
      z(k) = std::polar(1.0, 2.0 * std::numbers::pi * digit[static_cast<std::size_t>(k)] / phases);
    }
    best = std::max(best, z.dot(C * z).real());
    Index k = 1;
    while (k < n && ++digit[static_cast<std::size_t>(k)] == phases) {
      digit[static_cast<std::size_t>(k)] = 0;
      ++k;
    }
    if (k == n) break;
  }
  return best;
}

/// Sample mean of 1/2 (|<v, x>|^2 - |<v, x_s>|^2)^2 over fresh complex
/// Gaussian v with E|v_k|^2 = 1.
inline double monte_carlo_loss(const CVector& x, const CVector& x_s, int samples, RngStream& rng) {
  double total = 0.0;
  CVector v(x.size());
  for (int s = 0; s < samples; ++s) {
    for (Index k = 0; k < v.size(); ++k) v(k) = rng.complex_normal();
    const double a = std::norm(v.dot(x));
    const double c = std::norm(v.dot(x_s));
    total += 0.5 * (a - c) * (a - c);
  }
  return total / samples;
}

}  // namespace oracle
