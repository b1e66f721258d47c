#pragma once

// Expected Wirtinger-Flow landscape under complex Gaussian measurements,
// an empirical Hessian probe, the one-step displacement probe and
// attraction-basin maps of alternating projections.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lowrank/numerics.hpp"
#include "lowrank/phase_retrieval.hpp"
#include "lowrank/problems.hpp"

namespace lowrank {

/// E f(x) = ||x||^4 - ||x||^2 ||x_s||^2 - |<x, x_s>|^2 + ||x_s||^4.
inline double expected_loss(const CVector& x, const CVector& x_s) {
  if (x.size() != x_s.size()) throw InvalidDimension("expected_loss: size mismatch");
  const double nx = x.squaredNorm();
  const double ns = x_s.squaredNorm();
  return nx * nx - nx * ns - std::norm(x.dot(x_s)) + ns * ns;
}

/// Real gradient of E f: 2((2||x||^2 - ||x_s||^2) x - <x_s, x> x_s), so that
/// d/dt E f(x + t h) = Re<grad, h>.
inline CVector expected_grad(const CVector& x, const CVector& x_s) {
  if (x.size() != x_s.size()) throw InvalidDimension("expected_grad: size mismatch");
  return 2.0 * ((2.0 * x.squaredNorm() - x_s.squaredNorm()) * x - x_s.dot(x) * x_s);
}

/// Hessian quadratic form of E f at x in direction h:
/// 2((2||x||^2 - ||x_s||^2)||h||^2 + 4 Re^2<x, h> - |<x_s, h>|^2).
inline double expected_hess_form(const CVector& x, const CVector& x_s, const CVector& h) {
  if (x.size() != x_s.size() || h.size() != x.size()) {
    throw InvalidDimension("expected_hess_form: size mismatch");
  }
  const double re = x.dot(h).real();
  return 2.0 * ((2.0 * x.squaredNorm() - x_s.squaredNorm()) * h.squaredNorm() + 4.0 * re * re -
                std::norm(x_s.dot(h)));
}

enum class CriticalTag { Solution, Zero, Ring, None };

inline std::string to_string(CriticalTag tag) {
  switch (tag) {
    case CriticalTag::Solution: return "E1-solution";
    case CriticalTag::Zero: return "E2-zero";
    case CriticalTag::Ring: return "E3-ring";
    case CriticalTag::None: return "none";
  }
  return "none";
}

struct CriticalClass {
  CriticalTag tag = CriticalTag::None;
  double tolerance = 0.0;
};

/// Classifies x against the critical sets of E f, checked in the order
/// solution, zero, ring.
inline CriticalClass classify_critical(const CVector& x, const CVector& x_s, double tol) {
  if (!(tol > 0.0)) throw ConfigError("classify_critical: tol must be positive");
  const double ns = x_s.norm();
  CriticalTag tag = CriticalTag::None;
  if (dist_mod_phase(x, x_s) <= tol * ns) {
    tag = CriticalTag::Solution;
  } else if (x.norm() <= tol * ns) {
    tag = CriticalTag::Zero;
  } else if (std::abs(x_s.dot(x)) <= tol * ns * ns &&
             std::abs(x.norm() - ns / std::numbers::sqrt2) <= tol * ns) {
    tag = CriticalTag::Ring;
  }
  return {tag, tol};
}

/// Second central difference of f along h, with step t * ||x_s|| / ||h||
/// style scaling left to the caller.
inline double second_difference(const PhaseRetrievalInstance& inst, const CVector& x,
                                const CVector& h, double step) {
  const double f0 = wf_loss(inst, x);
  const double fp = wf_loss(inst, x + step * h);
  const double fm = wf_loss(inst, x - step * h);
  return (fp - 2.0 * f0 + fm) / (step * step);
}

/// Empirical second directional derivative of the Wirtinger loss at x along
/// x_true. Starts from a relative step of 1e-2 and halves it until two
/// consecutive estimates agree within tol_fd (relative); throws
/// FDInconsistent if they never do.
inline double z1_hess_probe(const PhaseRetrievalInstance& inst, const CVector& x, double tol_fd) {
  if (!inst.x_true) throw MissingGroundTruth("z1_hess_probe: instance has no ground truth");
  const CVector& h = *inst.x_true;
  const double scale = std::max(x.norm(), h.norm()) / h.norm();
  double step = 1e-2 * scale;
  double previous = second_difference(inst, x, h, step);
  for (int attempt = 0; attempt < 12; ++attempt) {
    step *= 0.5;
    const double current = second_difference(inst, x, h, step);
    const double floor = 1e-12 * std::pow(h.squaredNorm(), 2);
    if (std::abs(current - previous) <= tol_fd * std::max({std::abs(current), std::abs(previous), floor})) {
      return current;
    }
    previous = current;
  }
  throw FDInconsistent("z1_hess_probe: finite differences did not stabilize");
}

// ---------------------------------------------------------------------------
// Displacement probe
// ---------------------------------------------------------------------------

enum class ProbeAlgorithm { AP, WF };

inline std::string to_string(ProbeAlgorithm alg) { return alg == ProbeAlgorithm::AP ? "AP" : "WF"; }

/// One iteration of either solver, viewed as a map on signals.
class OneStepMap {
 public:
  OneStepMap(const PhaseRetrievalInstance& inst, ProbeAlgorithm alg, double wf_step_scale = 0.1)
      : inst_(inst), alg_(alg) {
    if (alg == ProbeAlgorithm::AP) {
      solver_.emplace(inst.B());
    } else {
      const double scale = signal_scale(inst);
      mu_ = wf_step_scale / (scale * scale);
    }
  }

  CVector operator()(const CVector& z) const {
    if (alg_ == ProbeAlgorithm::AP) return ap_signal_step(inst_, *solver_, inst_.B() * z);
    return z - mu_ * wf_grad(inst_, z);
  }

 private:
  const PhaseRetrievalInstance& inst_;
  ProbeAlgorithm alg_;
  std::optional<LeastSquaresSolver> solver_;
  double mu_ = 0.0;
};

/// Pair (z, z') on the unit sphere with ||z - z'|| = d exactly: z' is
/// obtained by rotating z by 2 asin(d/2) towards a random tangent w.
inline std::pair<CVector, CVector> sphere_pair(RngStream& rng, Index n, Field field, double d) {
  const CVector z = sample_unit_sphere(rng, n, field);
  CVector w = sample_gaussian(rng, n, field);
  w -= z.dot(w) * z;
  w /= w.norm();
  const double angle = 2.0 * std::asin(d / 2.0);
  CVector zp = std::cos(angle) * z + std::sin(angle) * w;
  return {z, zp};
}

/// Mean of ||T(z) - T(z')|| over random pairs at distance d.
inline double displacement_probe(const OneStepMap& step, const PhaseRetrievalInstance& inst,
                                 double d, int pairs, RngStream& rng) {
  if (!(d > 0.0 && d < 2.0)) throw ConfigError("displacement_probe: need 0 < d < 2");
  if (pairs < 1) throw ConfigError("displacement_probe: need pairs >= 1");
  double total = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const auto [z, zp] = sphere_pair(rng, inst.n(), inst.field, d);
    total += (step(z) - step(zp)).norm();
  }
  return total / pairs;
}

inline double displacement_probe(ProbeAlgorithm alg, const PhaseRetrievalInstance& inst, double d,
                                 int pairs, RngStream& rng) {
  if (inst.field != Field::Real) throw ConfigError("displacement_probe: instance must be real");
  return displacement_probe(OneStepMap(inst, alg), inst, d, pairs, rng);
}

// ---------------------------------------------------------------------------
// Basin maps
// ---------------------------------------------------------------------------

struct BasinMap {
  int grid = 0;
  std::vector<int> labels;  // row-major, grid x grid
  int label_count = 0;      // distinct labels in use (label 0 always reserved)

  int at(int row, int col) const { return labels[static_cast<std::size_t>(row * grid + col)]; }
};

struct BasinConfig {
  int max_iter = 2000;
  double ap_tol = 1e-9;
  double merge_radius = 1e-4;  // relative to ||x_true||
};

/// Grid coordinates run from -half_width to +half_width; row r uses the
/// second direction, column c the first.
inline CVector basin_point(const CVector& center, const std::array<CVector, 2>& dirs,
                           double half_width, int grid, int row, int col) {
  const auto coord = [&](int i) {
    return grid == 1 ? 0.0 : -half_width + 2.0 * half_width * i / (grid - 1);
  };
  return center + coord(col) * dirs[0] + coord(row) * dirs[1];
}

/// Runs alternating projections from y_0 = B p for every grid point p of the
/// square center + [-w, w] dirs[0] + [-w, w] dirs[1] and labels the limits by
/// clustering them modulo global phase. Label 0 is the solution.
inline BasinMap basin_map(const PhaseRetrievalInstance& inst, const CVector& center,
                          const std::array<CVector, 2>& dirs, double half_width, int grid,
                          const BasinConfig& config = {}) {
  if (!inst.x_true) throw MissingGroundTruth("basin_map: instance has no ground truth");
  if (inst.field != Field::Real) throw ConfigError("basin_map: instance must be real");
  if (grid < 1) throw ConfigError("basin_map: grid must be >= 1");
  const double cross = std::abs(dirs[0].dot(dirs[1]));
  if (std::abs(dirs[0].norm() - 1.0) > 1e-10 || std::abs(dirs[1].norm() - 1.0) > 1e-10 ||
      cross > 1e-10) {
    throw ConfigError("basin_map: directions must be orthonormal");
  }
  const LeastSquaresSolver solver(inst.B());
  const APConfig ap{config.max_iter, config.ap_tol};
  const double radius = config.merge_radius * inst.x_true->norm();

  std::vector<CVector> representatives{*inst.x_true};
  BasinMap map;
  map.grid = grid;
  map.labels.reserve(static_cast<std::size_t>(grid) * grid);
  for (int row = 0; row < grid; ++row) {
    for (int col = 0; col < grid; ++col) {
      const CVector p = basin_point(center, dirs, half_width, grid, row, col);
      const SolveReport rep = alternating_projections_from(inst, inst.B() * p, ap, &solver);
      int label = -1;
      for (std::size_t r = 0; r < representatives.size(); ++r) {
        if (dist_mod_phase(rep.estimate, representatives[r], inst.field) <= radius) {
          label = static_cast<int>(r);
          break;
        }
      }
      if (label < 0) {
        label = static_cast<int>(representatives.size());
        representatives.push_back(rep.estimate);
      }
      map.labels.push_back(label);
    }
  }
  map.label_count = static_cast<int>(representatives.size());
  return map;
}

/// Two random orthonormal directions orthogonal to x_true.
inline std::array<CVector, 2> basin_directions(const CVector& x_true, Field field, RngStream& rng) {
  std::array<CVector, 2> dirs;
  const CVector unit = x_true / x_true.norm();
  for (int i = 0; i < 2; ++i) {
    CVector d = sample_gaussian(rng, x_true.size(), field);
    d -= unit.dot(d) * unit;
    if (i == 1) d -= dirs[0].dot(d) * dirs[0];
    dirs[static_cast<std::size_t>(i)] = d / d.norm();
  }
  return dirs;
}

struct BasinPlane {
  CVector center;
  std::array<CVector, 2> dirs;
  double half_width = 0.0;
};

/// Default plane for basin maps: through the origin, orthogonal to x_true,
/// half-width ||x_true||. Alternating projections started from B p only
/// depends on the direction of p, so the scale is immaterial.
inline BasinPlane default_basin_plane(const CVector& x_true, Field field, RngStream& rng) {
  return {CVector::Zero(x_true.size()), basin_directions(x_true, field, rng), x_true.norm()};
}

}  // namespace lowrank
