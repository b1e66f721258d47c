#pragma once

// Dense linear-algebra kernels and seeded random sampling shared by every
// other module.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>

#include "lowrank/errors.hpp"

namespace lowrank {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

enum class Field { Real, Complex };

inline std::string to_string(Field field) {
  return field == Field::Real ? "real" : "complex";
}

inline Field field_from_string(const std::string& name) {
  if (name == "real") return Field::Real;
  if (name == "complex") return Field::Complex;
  throw ConfigError("unknown field '" + name + "'");
}

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

/// splitmix64 finalizer, used to derive child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seeded random stream.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Uniforms take the top 53 bits; normals use the Box-Muller
/// transform (the standard library distributions are implementation
/// defined and therefore not used). Independent sub-streams are obtained
/// with split(), which hashes the parent seed with the child index.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Child stream determined only by (seed, index); the parent state is
  /// left untouched.
  RngStream split(std::uint64_t index) const {
    return RngStream(mix64(mix64(seed_) ^ mix64(index + 0x632BE59BD9B4E019ULL)));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Complex normal with independent N(0, 1/2) parts, so E|z|^2 = 1.
  Complex complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Gaussian vector: real N(0,1) entries, or complex entries with
/// E|entry|^2 = 1.
inline CVector sample_gaussian(RngStream& rng, Index n, Field field) {
  if (n < 1) throw InvalidDimension("sample_gaussian: n must be >= 1");
  CVector out(n);
  for (Index i = 0; i < n; ++i) {
    out(i) = field == Field::Real ? Complex(rng.normal(), 0.0) : rng.complex_normal();
  }
  return out;
}

inline CMatrix sample_gaussian_matrix(RngStream& rng, Index rows, Index cols, Field field) {
  CMatrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      out(i, j) = field == Field::Real ? Complex(rng.normal(), 0.0) : rng.complex_normal();
    }
  }
  return out;
}

/// Uniform point on the unit sphere of R^n (real) or C^n (complex).
inline CVector sample_unit_sphere(RngStream& rng, Index n, Field field) {
  CVector v = sample_gaussian(rng, n, field);
  return v / v.norm();
}

// ---------------------------------------------------------------------------
// Hermitian matrices
// ---------------------------------------------------------------------------

/// Dense Hermitian matrix. Symmetry is enforced on construction from the
/// upper triangle, so H(k,l) == conj(H(l,k)) holds bit for bit.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  explicit HermitianMatrix(CMatrix m) : data_(std::move(m)) {
    if (data_.rows() != data_.cols()) {
      throw InvalidDimension("HermitianMatrix: matrix must be square");
    }
    const Index n = data_.rows();
    for (Index k = 0; k < n; ++k) {
      data_(k, k) = Complex(data_(k, k).real(), 0.0);
      for (Index l = k + 1; l < n; ++l) data_(l, k) = std::conj(data_(k, l));
    }
  }

  static HermitianMatrix zero(Index n) { return HermitianMatrix(CMatrix::Zero(n, n)); }

  Index dim() const { return data_.rows(); }
  const CMatrix& dense() const { return data_; }
  Complex operator()(Index k, Index l) const { return data_(k, l); }

  CVector operator*(const CVector& v) const { return data_ * v; }

  HermitianMatrix operator-() const { return HermitianMatrix(CMatrix(-data_)); }

  /// Gershgorin bound on the spectral radius.
  double gershgorin_radius() const {
    return data_.cwiseAbs().rowwise().sum().maxCoeff();
  }

 private:
  CMatrix data_;
};

// ---------------------------------------------------------------------------
// Eigensolvers
// ---------------------------------------------------------------------------

struct EigenPair {
  double value = 0.0;
  CVector vector;
  int iterations = 0;
};

enum class Spectrum {
  LargestMagnitude,  // eigenvalue of largest |lambda|
  LargestAlgebraic,  // largest lambda
};

namespace detail {

// Power iteration on sign * H + shift * I, which is positive semidefinite
// for shift >= spectral radius, so it converges to the largest eigenvalue
// of sign * H.
inline EigenPair shifted_power_iteration(const CMatrix& H, double sign, double shift,
                                         double tol, int max_iter, RngStream& rng) {
  const Index n = H.rows();
  CVector v = sample_unit_sphere(rng, n, Field::Complex);
  double residual = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    CVector w = H * v;
    const double lambda = v.dot(w).real();
    residual = (w - lambda * v).norm();
    if (!std::isfinite(residual)) throw NumericFailure("power iteration produced non-finite values");
    if (residual <= tol * (1.0 + std::abs(lambda))) return {lambda, v, it};
    CVector next = sign * w + shift * v;
    const double norm = next.norm();
    if (norm == 0.0) return {lambda, v, it};
    v = next / norm;
  }
  throw NonConvergence("power iteration: residual " + std::to_string(residual) +
                       " after " + std::to_string(max_iter) + " iterations");
}

}  // namespace detail

/// Dominant eigenpair of a Hermitian matrix by shifted power iteration.
///
/// The returned pair satisfies ||H v - lambda v|| <= tol * (1 + |lambda|)
/// with ||v|| = 1. For LargestMagnitude both ends of the spectrum are
/// resolved and the one of larger modulus is returned.
inline EigenPair dominant_eigenvector(const HermitianMatrix& H, double tol, int max_iter,
                                      RngStream& rng,
                                      Spectrum which = Spectrum::LargestMagnitude) {
  if (H.dim() < 1) throw InvalidDimension("dominant_eigenvector: empty matrix");
  if (!(tol > 0.0)) throw ConfigError("dominant_eigenvector: tol must be positive");
  const double shift = H.gershgorin_radius();
  EigenPair top = detail::shifted_power_iteration(H.dense(), 1.0, shift, tol, max_iter, rng);
  if (which == Spectrum::LargestAlgebraic) return top;
  EigenPair bottom = detail::shifted_power_iteration(H.dense(), -1.0, shift, tol, max_iter, rng);
  return std::abs(bottom.value) > std::abs(top.value) ? bottom : top;
}

struct EigenDecomposition {
  RVector values;   // ascending
  CMatrix vectors;  // columns are orthonormal eigenvectors
};

/// Full eigendecomposition (Eigen's tridiagonal QR solver).
inline EigenDecomposition hermitian_eigen(const HermitianMatrix& H) {
  if (H.dim() > 2048) throw InvalidDimension("hermitian_eigen: dense path limited to n <= 2048");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(H.dense());
  if (solver.info() != Eigen::Success || !solver.eigenvalues().allFinite()) {
    throw NumericFailure("hermitian_eigen: decomposition failed");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// ---------------------------------------------------------------------------
// Least squares
// ---------------------------------------------------------------------------

/// Factorizes a tall full-column-rank matrix once and solves min ||Bx - y||
/// for many right-hand sides.
class LeastSquaresSolver {
 public:
  static constexpr double kRankTolerance = 1e-12;

  LeastSquaresSolver() = default;

  explicit LeastSquaresSolver(const CMatrix& B) {
    const Index m = B.rows();
    const Index n = B.cols();
    if (m < n || n < 1) {
      throw RankDeficient("least_squares: need m >= n >= 1 (got " + std::to_string(m) + "x" +
                          std::to_string(n) + ")");
    }
    Eigen::HouseholderQR<CMatrix> qr(B);
    const CMatrix R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    // Singular values of B are those of R.
    const RVector sv = Eigen::JacobiSVD<CMatrix>(R).singularValues();
    if (!sv.allFinite() || sv(0) == 0.0 || sv(n - 1) <= kRankTolerance * sv(0)) {
      throw RankDeficient("least_squares: matrix is numerically rank deficient");
    }
    q_ = qr.householderQ() * CMatrix::Identity(m, n);
    pinv_ = R.triangularView<Eigen::Upper>().solve(q_.adjoint());
  }

  Index rows() const { return q_.rows(); }
  Index cols() const { return pinv_.rows(); }

  CVector solve(const CVector& y) const { return pinv_ * y; }

  /// Orthonormal basis of Range(B).
  const CMatrix& range_basis() const { return q_; }
  const CMatrix& pseudo_inverse() const { return pinv_; }

 private:
  CMatrix q_;
  CMatrix pinv_;
};

inline CVector least_squares(const CMatrix& B, const CVector& y) {
  if (B.rows() != y.size()) throw InvalidDimension("least_squares: size mismatch");
  return LeastSquaresSolver(B).solve(y);
}

}  // namespace lowrank
