#pragma once

// Experiment runners behind `bench`: success curves, displacement probes,
// basin maps and synchronization diagnostics, all written as CSV.
//
// Every random draw is taken from a stream split from (seed, grid index,
// trial index), and results are gathered by index, so the output bytes do
// not depend on the number of worker threads.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "lowrank/burer_monteiro.hpp"
#include "lowrank/landscape.hpp"
#include "lowrank/phase_retrieval.hpp"
#include "lowrank/phase_sync.hpp"
#include "lowrank/problems.hpp"

namespace lowrank::harness {

/// Fixed-width-free, locale-independent number formatting for CSV cells.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. The first
/// exception (by index) is rethrown after all workers finish.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline Index measurements_for(double ratio, Index n) {
  return static_cast<Index>(std::llround(ratio * static_cast<double>(n)));
}

// ---------------------------------------------------------------------------
// Success curves
// ---------------------------------------------------------------------------

struct SuccessRow {
  std::string algorithm;
  Index n = 0;
  Index m = 0;
  int trials = 0;
  int successes = 0;
  std::uint64_t seed = 0;

  double rate() const { return trials == 0 ? 0.0 : static_cast<double>(successes) / trials; }
};

struct SuccessCurve {
  std::vector<SuccessRow> rows;

  const SuccessRow* find(const std::string& algorithm, Index m) const {
    for (const auto& r : rows) {
      if (r.algorithm == algorithm && r.m == m) return &r;
    }
    return nullptr;
  }
};

inline constexpr const char* kSuccessHeader = "algorithm,n,m,trials,successes,success_rate,seed\n";

inline std::string csv_row(const SuccessRow& r) {
  return r.algorithm + "," + std::to_string(r.n) + "," + std::to_string(r.m) + "," +
         std::to_string(r.trials) + "," + std::to_string(r.successes) + "," + fmt(r.rate()) + "," +
         std::to_string(r.seed) + "\n";
}

inline std::string to_csv(const SuccessCurve& curve) {
  std::string out = kSuccessHeader;
  for (const auto& r : curve.rows) out += csv_row(r);
  return out;
}

/// Counts successes of `trial(t)` for t < trials and appends the row. Rows
/// are streamed to sink as soon as they complete.
inline void add_success_row(SuccessCurve& curve, std::ostream* sink, std::string algorithm, Index n,
                            Index m, int trials, std::uint64_t seed, int threads,
                            const std::function<bool(int)>& trial) {
  std::vector<char> ok(static_cast<std::size_t>(trials), 0);
  parallel_for(ok.size(), threads, [&](std::size_t t) { ok[t] = trial(static_cast<int>(t)) ? 1 : 0; });
  SuccessRow row{std::move(algorithm), n, m, trials, 0, seed};
  for (char c : ok) row.successes += c;
  curve.rows.push_back(row);
  if (sink) *sink << csv_row(row) << std::flush;
}

// ---------------------------------------------------------------------------
// Figure 1: alternating projections success rate vs m/n
// ---------------------------------------------------------------------------

struct Fig1Config {
  Index n = 40;
  std::vector<double> mn_grid = {2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0, 7.5};
  int trials = 200;
  std::uint64_t seed = 1;
  double tau = 1e-3;
  EnsembleKind ensemble = EnsembleKind::ComplexGaussian;
  std::vector<std::string> algorithms = {"ap"};  // ap, wf, phasecut-ref
  APConfig ap;
  WFConfig wf;
  GdConfig gd;
  int threads = 1;
};

/// Solves one phase retrieval instance with the named algorithm and reports
/// whether the relative error is below tau. m < n counts as a failure.
inline bool pr_trial(const std::string& algorithm, const PhaseRetrievalInstance& inst, RngStream rng,
                     double tau, const APConfig& ap, const WFConfig& wf, const GdConfig& gd) {
  if (inst.m() < inst.n()) return false;
  if (algorithm == "ap") return success(alternating_projections(inst, rng, ap), tau);
  if (algorithm == "wf") return success(wirtinger_flow(inst, wf), tau);
  if (algorithm == "phasecut-ref") {
    const UnitDiagSDP sdp = phasecut_cost(inst);
    const ReferenceSolution ref = reference_sdp_solve(sdp, rng, gd);
    return relative_error(round_factor(sdp, ref.V, &inst), *inst.x_true, inst.field) < tau;
  }
  throw ConfigError("unknown algorithm '" + algorithm + "' (expected ap, wf or phasecut-ref)");
}

inline SuccessCurve run_fig1(const Fig1Config& cfg, std::ostream* sink = nullptr) {
  if (cfg.n < 1 || cfg.trials < 1) throw ConfigError("fig1: need n >= 1 and trials >= 1");
  SuccessCurve curve;
  if (sink) *sink << kSuccessHeader << std::flush;
  const RngStream root(cfg.seed);
  for (std::size_t g = 0; g < cfg.mn_grid.size(); ++g) {
    const Index m = measurements_for(cfg.mn_grid[g], cfg.n);
    for (const auto& alg : cfg.algorithms) {
      add_success_row(curve, sink, alg, cfg.n, m, cfg.trials, cfg.seed, cfg.threads, [&](int t) {
        if (m < cfg.n) return false;
        RngStream rng = root.split(g).split(static_cast<std::uint64_t>(t));
        const PhaseRetrievalInstance inst = gen_phase_retrieval(cfg.n, m, cfg.ensemble, rng);
        return pr_trial(alg, inst, rng, cfg.tau, cfg.ap, cfg.wf, cfg.gd);
      });
    }
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Figure 5: Burer-Monteiro PhaseCut success rate vs m/n
// ---------------------------------------------------------------------------

struct Fig5Config {
  Index n = 32;
  std::vector<double> mn_grid = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  int trials = 20;
  std::uint64_t seed = 1;
  double tau = 1e-3;
  std::vector<EnsembleKind> kinds = {EnsembleKind::ComplexGaussian, EnsembleKind::StructuredFrame};
  std::vector<int> ps = {1, 2};  // 0 stands for the reference width
  GdConfig gd;
  int threads = 1;
};

inline std::string bm_label(int p, EnsembleKind kind) {
  return (p == 0 ? std::string("bm-pref") : "bm-p" + std::to_string(p)) + "/" + to_string(kind);
}

/// One Burer-Monteiro PhaseCut attempt: descent at width p from a random
/// factor, rounding, success test.
inline bool bm_trial(const PhaseRetrievalInstance& inst, int p, RngStream rng, double tau,
                     const GdConfig& gd) {
  if (inst.m() < inst.n()) return false;
  const UnitDiagSDP sdp = phasecut_cost(inst);
  const Index width = p == 0 ? reference_rank(sdp.dim()) : std::min<Index>(p, sdp.dim());
  const GdResult run = riemannian_gd(sdp, width, rng, gd);
  return relative_error(round_factor(sdp, run.V, &inst), *inst.x_true, inst.field) < tau;
}

inline SuccessCurve run_fig5(const Fig5Config& cfg, std::ostream* sink = nullptr) {
  if (cfg.n < 1 || cfg.trials < 1) throw ConfigError("fig5: need n >= 1 and trials >= 1");
  for (int p : cfg.ps) {
    if (p < 0) throw ConfigError("fig5: p must be >= 1 (or 0 for the reference width)");
  }
  SuccessCurve curve;
  if (sink) *sink << kSuccessHeader << std::flush;
  const RngStream root(cfg.seed);
  for (EnsembleKind kind : cfg.kinds) {
    for (int p : cfg.ps) {
      for (std::size_t g = 0; g < cfg.mn_grid.size(); ++g) {
        const Index m = measurements_for(cfg.mn_grid[g], cfg.n);
        add_success_row(curve, sink, bm_label(p, kind), cfg.n, m, cfg.trials, cfg.seed, cfg.threads,
                        [&](int t) {
                          if (m < cfg.n) return false;
                          // The instance stream ignores p, so every width
                          // sees the same instances.
                          RngStream rng = root.split(static_cast<std::uint64_t>(kind))
                                              .split(g)
                                              .split(static_cast<std::uint64_t>(t));
                          const PhaseRetrievalInstance inst = gen_phase_retrieval(cfg.n, m, kind, rng);
                          return bm_trial(inst, p, rng.split(static_cast<std::uint64_t>(p)), cfg.tau,
                                          cfg.gd);
                        });
      }
    }
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Figure 3: one-step displacement probe
// ---------------------------------------------------------------------------

struct Fig3Config {
  Index n = 400;
  Index m = 4000;
  std::vector<double> d_grid = {0.0025, 0.01, 0.025, 0.05, 0.075, 0.1};
  int pairs = 1000;
  std::uint64_t seed = 1;
  std::vector<ProbeAlgorithm> algorithms = {ProbeAlgorithm::AP, ProbeAlgorithm::WF};
  double wf_step_scale = 0.1;
  int threads = 1;
};

struct DisplacementRow {
  ProbeAlgorithm algorithm = ProbeAlgorithm::AP;
  double d = 0.0;
  double mean_displacement = 0.0;
  int pairs = 0;
  std::uint64_t seed = 0;
};

struct DisplacementCurve {
  std::vector<DisplacementRow> rows;

  double mean(ProbeAlgorithm alg, double d) const {
    for (const auto& r : rows) {
      if (r.algorithm == alg && r.d == d) return r.mean_displacement;
    }
    throw ConfigError("displacement curve has no row for d = " + fmt(d));
  }
};

inline constexpr const char* kDisplacementHeader = "algorithm,d,mean_displacement,pairs,seed\n";

inline std::string csv_row(const DisplacementRow& r) {
  return to_string(r.algorithm) + "," + fmt(r.d) + "," + fmt(r.mean_displacement) + "," +
         std::to_string(r.pairs) + "," + std::to_string(r.seed) + "\n";
}

inline std::string to_csv(const DisplacementCurve& curve) {
  std::string out = kDisplacementHeader;
  for (const auto& r : curve.rows) out += csv_row(r);
  return out;
}

/// Real Gaussian instance with a unit-norm signal; every algorithm sees the
/// same pairs at a given d.
inline DisplacementCurve run_fig3(const Fig3Config& cfg, std::ostream* sink = nullptr) {
  if (cfg.pairs < 1) throw ConfigError("fig3: need pairs >= 1");
  const RngStream root(cfg.seed);
  RngStream inst_rng = root.split(0);
  const PhaseRetrievalInstance inst =
      gen_phase_retrieval(cfg.n, cfg.m, EnsembleKind::RealGaussian, inst_rng, true);
  DisplacementCurve curve;
  if (sink) *sink << kDisplacementHeader << std::flush;
  for (ProbeAlgorithm alg : cfg.algorithms) {
    const OneStepMap step(inst, alg, cfg.wf_step_scale);
    for (std::size_t di = 0; di < cfg.d_grid.size(); ++di) {
      const double d = cfg.d_grid[di];
      if (!(d > 0.0 && d < 2.0)) throw ConfigError("fig3: distances must lie in (0, 2)");
      // Pairs are split into fixed chunks so that the sum order does not
      // depend on the thread count.
      constexpr int kChunk = 50;
      const int chunks = (cfg.pairs + kChunk - 1) / kChunk;
      std::vector<double> sums(static_cast<std::size_t>(chunks), 0.0);
      parallel_for(sums.size(), cfg.threads, [&](std::size_t c) {
        RngStream rng = root.split(1).split(di).split(c);
        const int count = std::min(kChunk, cfg.pairs - static_cast<int>(c) * kChunk);
        sums[c] = displacement_probe(step, inst, d, count, rng) * count;
      });
      double total = 0.0;
      for (double s : sums) total += s;
      DisplacementRow row{alg, d, total / cfg.pairs, cfg.pairs, cfg.seed};
      curve.rows.push_back(row);
      if (sink) *sink << csv_row(row) << std::flush;
    }
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Figure 2: basin map
// ---------------------------------------------------------------------------

struct BasinBenchConfig {
  Index n = 20;
  Index m = 400;
  int grid = 101;
  std::uint64_t seed = 1;
  BasinConfig basin;
};

inline std::string to_csv(const BasinMap& map) {
  std::string out = "row,col,label\n";
  for (int r = 0; r < map.grid; ++r) {
    for (int c = 0; c < map.grid; ++c) {
      out += std::to_string(r) + "," + std::to_string(c) + "," + std::to_string(map.at(r, c)) + "\n";
    }
  }
  return out;
}

inline BasinMap run_basin(const BasinBenchConfig& cfg) {
  const RngStream root(cfg.seed);
  RngStream inst_rng = root.split(0);
  const PhaseRetrievalInstance inst =
      gen_phase_retrieval(cfg.n, cfg.m, EnsembleKind::RealGaussian, inst_rng);
  RngStream plane_rng = root.split(1);
  const BasinPlane plane = default_basin_plane(*inst.x_true, inst.field, plane_rng);
  return basin_map(inst, plane.center, plane.dirs, plane.half_width, cfg.grid, cfg.basin);
}

// ---------------------------------------------------------------------------
// Phase synchronization
// ---------------------------------------------------------------------------

struct SyncBenchConfig {
  Index n = 200;
  std::vector<double> sigma_fracs = {0.0, 0.1, 0.2, 0.3, 0.5};  // multiples of sqrt(n / ln n)
  std::uint64_t seed = 1;
  GpmConfig gpm;
  double loo_sigma_frac = 0.2;
  int threads = 1;
};

inline double sigma_unit(Index n) {
  const double nn = static_cast<double>(n);
  return std::sqrt(nn / std::log(nn));
}

struct SyncRow {
  double sigma_frac = 0.0;
  double sigma = 0.0;
  int iterations = 0;
  bool converged = false;
  double rel_error = 0.0;
  double final_residual = 0.0;
  GeometricFit fit;
  std::uint64_t seed = 0;
};

inline constexpr const char* kSyncHeader =
    "sigma_frac,sigma,iterations,converged,rel_error,final_residual,rate,r2,seed\n";

inline std::string csv_row(const SyncRow& r) {
  return fmt(r.sigma_frac) + "," + fmt(r.sigma) + "," + std::to_string(r.iterations) + "," +
         (r.converged ? "1" : "0") + "," + fmt(r.rel_error) + "," + fmt(r.final_residual) + "," +
         fmt(r.fit.rate) + "," + fmt(r.fit.r2) + "," + std::to_string(r.seed) + "\n";
}

inline SyncInstance sync_instance(const SyncBenchConfig& cfg, double sigma_frac, std::uint64_t index) {
  RngStream rng = RngStream(cfg.seed).split(index);
  return gen_sync(cfg.n, sigma_frac * sigma_unit(cfg.n), rng);
}

inline std::vector<SyncRow> run_sync(const SyncBenchConfig& cfg, std::ostream* sink = nullptr) {
  std::vector<SyncRow> rows(cfg.sigma_fracs.size());
  parallel_for(rows.size(), cfg.threads, [&](std::size_t i) {
    const double frac = cfg.sigma_fracs[i];
    const SyncInstance inst = sync_instance(cfg, frac, i);
    const GpmResult res = gpm(inst, cfg.gpm);
    rows[i] = {frac,
               inst.sigma,
               res.report.iterations,
               res.report.converged,
               *res.report.rel_error_mod_phase,
               res.report.residual_trace.empty() ? 0.0 : res.report.residual_trace.back(),
               geometric_fit(res.report.residual_trace),
               cfg.seed};
  });
  if (sink) {
    *sink << kSyncHeader;
    for (const auto& r : rows) *sink << csv_row(r);
    *sink << std::flush;
  }
  return rows;
}

inline std::string to_csv(const std::vector<SyncRow>& rows) {
  std::string out = kSyncHeader;
  for (const auto& r : rows) out += csv_row(r);
  return out;
}

inline std::string to_csv(const LooDiagnostics& d) {
  std::string out = "t,max_dist_aux,max_corr_main,max_corr_aux\n";
  for (std::size_t t = 0; t < d.size(); ++t) {
    out += std::to_string(t + 1) + "," + fmt(d.max_dist_aux[t]) + "," + fmt(d.max_corr_main[t]) + "," +
           fmt(d.max_corr_aux[t]) + "\n";
  }
  return out;
}

/// Leave-one-out diagnostics at sigma = loo_sigma_frac * sqrt(n / ln n) on
/// a dedicated instance stream.
inline LooDiagnostics run_loo(const SyncBenchConfig& cfg) {
  const SyncInstance inst = sync_instance(cfg, cfg.loo_sigma_frac, 1000003);
  return loo_run(inst, cfg.gpm.max_iter, cfg.gpm.tol);
}

}  // namespace lowrank::harness
