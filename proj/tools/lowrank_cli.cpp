// lowrank: generate instances, run single solves and reproduce the figure
// experiments as CSV.
//
//   lowrank gen pr --n 64 --m 256 --ensemble gaussian --seed 3 --out pr.json
//   lowrank solve ap --in pr.json
//   lowrank bench fig1 --trials 200 --out fig1.csv
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lowrank/burer_monteiro.hpp"
#include "lowrank/harness.hpp"
#include "lowrank/io.hpp"
#include "lowrank/phase_retrieval.hpp"
#include "lowrank/phase_sync.hpp"

using namespace lowrank;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Options {
  std::string in;
  std::string out;
  std::string loo_out;
  long n = 0;
  long m = 0;
  std::string mn_grid;
  std::string sigma;
  std::string d_grid;
  std::string ps;
  std::string ensemble;  // empty: the command's default
  std::string algorithms;
  int trials = 0;
  std::uint64_t seed = 1;
  double tau = 1e-3;
  int threads = 1;
  int pairs = 0;
  int grid = 0;
  int max_iter = 0;
  double step_scale = 0.1;
  double grad_tol = 0.0;
  bool unit_signal = false;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad number '") + item + "' in " + what);
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + " is empty");
  return out;
}

/// Output goes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw ConfigError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void write_json(const Options& opt, const io::json& j) {
  Output out(opt.out);
  out.stream() << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

PhaseRetrievalInstance pr_instance(const Options& opt) {
  if (!opt.in.empty()) return io::phase_retrieval_from_json(io::read_json_file(opt.in));
  if (opt.n < 1 || opt.m < 1) throw ConfigError("need --in, or --n and --m");
  RngStream rng(opt.seed);
  const EnsembleKind kind =
      opt.ensemble.empty() ? EnsembleKind::ComplexGaussian : ensemble_from_string(opt.ensemble);
  return gen_phase_retrieval(opt.n, opt.m, kind, rng, opt.unit_signal);
}

SyncInstance sync_instance(const Options& opt) {
  if (!opt.in.empty()) return io::sync_from_json(io::read_json_file(opt.in));
  if (opt.n < 2) throw ConfigError("need --in, or --n (and --sigma)");
  RngStream rng(opt.seed);
  const double sigma = opt.sigma.empty() ? 0.0 : parse_doubles(opt.sigma, "--sigma").front();
  return gen_sync(opt.n, sigma, rng);
}

void gen_pr(const Options& opt) { write_json(opt, io::to_json(pr_instance(opt))); }
void gen_sync(const Options& opt) { write_json(opt, io::to_json(sync_instance(opt))); }

/// Raw random SDP, or the cost of an instance given with --in.
void gen_sdp(const Options& opt) {
  if (!opt.in.empty()) {
    const io::json j = io::read_json_file(opt.in);
    const std::string type = j.value("type", "");
    if (type == "phase_retrieval") {
      write_json(opt, io::to_json(phasecut_cost(io::phase_retrieval_from_json(j))));
    } else if (type == "sync") {
      write_json(opt, io::to_json(sync_cost(io::sync_from_json(j))));
    } else {
      throw ConfigError("gen sdp: --in must hold a phase_retrieval or sync instance");
    }
    return;
  }
  if (opt.n < 1) throw ConfigError("gen sdp: need --n or --in");
  RngStream rng(opt.seed);
  write_json(opt, io::to_json(random_unit_diag_sdp(opt.n, rng)));
}

void solve_ap(const Options& opt) {
  const PhaseRetrievalInstance inst = pr_instance(opt);
  APConfig cfg;
  if (opt.max_iter > 0) cfg.max_iter = opt.max_iter;
  RngStream rng = RngStream(opt.seed).split(1);
  write_json(opt, io::to_json(alternating_projections(inst, rng, cfg)));
}

void solve_wf(const Options& opt) {
  const PhaseRetrievalInstance inst = pr_instance(opt);
  WFConfig cfg;
  cfg.step_scale = opt.step_scale;
  if (opt.max_iter > 0) cfg.max_iter = opt.max_iter;
  write_json(opt, io::to_json(wirtinger_flow(inst, cfg)));
}

void solve_gpm(const Options& opt) {
  const SyncInstance inst = sync_instance(opt);
  GpmConfig cfg;
  if (opt.max_iter > 0) cfg.max_iter = opt.max_iter;
  const GpmResult res = gpm(inst, cfg);
  write_json(opt, io::to_json(res.report));
  if (!opt.loo_out.empty()) {
    io::write_text_file(opt.loo_out, harness::to_csv(loo_run(inst, cfg.max_iter, cfg.tol)));
  }
}

/// Burer-Monteiro on a PhaseCut, sync or raw SDP. The report's estimate is
/// the rounded solution.
void solve_bm(const Options& opt) {
  UnitDiagSDP sdp;
  std::optional<PhaseRetrievalInstance> pr;
  std::optional<SyncInstance> sync;
  std::string type = "phase_retrieval";
  io::json j;
  if (!opt.in.empty()) {
    j = io::read_json_file(opt.in);
    type = j.value("type", "");
  }
  if (type == "phase_retrieval") {
    pr = opt.in.empty() ? pr_instance(opt) : io::phase_retrieval_from_json(j);
    sdp = phasecut_cost(*pr);
  } else if (type == "sync") {
    sync = io::sync_from_json(j);
    sdp = sync_cost(*sync);
  } else if (type == "unit_diag_sdp") {
    sdp = io::sdp_from_json(j);
  } else {
    throw ConfigError("solve bm: unrecognized input type '" + type + "'");
  }

  GdConfig cfg;
  if (opt.max_iter > 0) cfg.max_iter = opt.max_iter;
  if (opt.grad_tol > 0.0) cfg.grad_tol = opt.grad_tol;
  const std::vector<double> ps = opt.ps.empty() ? std::vector<double>{2.0} : parse_doubles(opt.ps, "--p");
  const Index p = ps.front() <= 0 ? reference_rank(sdp.dim()) : static_cast<Index>(ps.front());
  RngStream rng = RngStream(opt.seed).split(1);
  GdResult run = riemannian_gd(sdp, p, rng, cfg);
  SolveReport& report = run.report;
  if (sdp.provenance == Provenance::PhaseCut && pr) {
    report.estimate = round_factor(sdp, run.V, &*pr);
    fill_error(report, *pr);
  } else {
    report.estimate = round_factor(sdp, run.V);
    if (sync) report.rel_error_mod_phase = relative_error(report.estimate, sync->z_true, Field::Complex);
  }
  write_json(opt, io::to_json(report));
}

// ---------------------------------------------------------------------------

void bench_fig1(const Options& opt) {
  harness::Fig1Config cfg;
  if (opt.n > 0) cfg.n = opt.n;
  if (!opt.mn_grid.empty()) cfg.mn_grid = parse_doubles(opt.mn_grid, "--mn-grid");
  if (opt.trials > 0) cfg.trials = opt.trials;
  if (!opt.algorithms.empty()) cfg.algorithms = split_list(opt.algorithms);
  if (opt.max_iter > 0) cfg.ap.max_iter = opt.max_iter;
  if (!opt.ensemble.empty()) cfg.ensemble = ensemble_from_string(opt.ensemble);
  cfg.wf.step_scale = opt.step_scale;
  cfg.seed = opt.seed;
  cfg.tau = opt.tau;
  cfg.threads = opt.threads;
  Output out(opt.out);
  harness::run_fig1(cfg, &out.stream());
}

void bench_fig5(const Options& opt) {
  harness::Fig5Config cfg;
  if (opt.n > 0) cfg.n = opt.n;
  if (!opt.mn_grid.empty()) cfg.mn_grid = parse_doubles(opt.mn_grid, "--mn-grid");
  if (opt.trials > 0) cfg.trials = opt.trials;
  if (!opt.ps.empty()) {
    cfg.ps.clear();
    for (const auto& item : split_list(opt.ps)) {
      cfg.ps.push_back(item == "ref" ? 0 : static_cast<int>(parse_doubles(item, "--p").front()));
    }
  }
  if (!opt.ensemble.empty()) {
    cfg.kinds.clear();
    for (const auto& k : split_list(opt.ensemble)) cfg.kinds.push_back(ensemble_from_string(k));
  }
  if (opt.max_iter > 0) cfg.gd.max_iter = opt.max_iter;
  if (opt.grad_tol > 0.0) cfg.gd.grad_tol = opt.grad_tol;
  cfg.seed = opt.seed;
  cfg.tau = opt.tau;
  cfg.threads = opt.threads;
  Output out(opt.out);
  harness::run_fig5(cfg, &out.stream());
}

void bench_fig3(const Options& opt) {
  harness::Fig3Config cfg;
  if (opt.n > 0) cfg.n = opt.n;
  if (opt.m > 0) cfg.m = opt.m;
  if (!opt.d_grid.empty()) cfg.d_grid = parse_doubles(opt.d_grid, "--d-grid");
  if (opt.pairs > 0) cfg.pairs = opt.pairs;
  if (!opt.algorithms.empty()) {
    cfg.algorithms.clear();
    for (const auto& a : split_list(opt.algorithms)) {
      if (a == "ap" || a == "AP") {
        cfg.algorithms.push_back(ProbeAlgorithm::AP);
      } else if (a == "wf" || a == "WF") {
        cfg.algorithms.push_back(ProbeAlgorithm::WF);
      } else {
        throw ConfigError("fig3: unknown algorithm '" + a + "'");
      }
    }
  }
  cfg.wf_step_scale = opt.step_scale;
  cfg.seed = opt.seed;
  cfg.threads = opt.threads;
  Output out(opt.out);
  harness::run_fig3(cfg, &out.stream());
}

void bench_basin(const Options& opt) {
  harness::BasinBenchConfig cfg;
  if (opt.n > 0) cfg.n = opt.n;
  if (opt.m > 0) cfg.m = opt.m;
  if (opt.grid > 0) cfg.grid = opt.grid;
  if (opt.max_iter > 0) cfg.basin.max_iter = opt.max_iter;
  cfg.seed = opt.seed;
  Output out(opt.out);
  out.stream() << harness::to_csv(harness::run_basin(cfg)) << std::flush;
}

void bench_sync(const Options& opt) {
  harness::SyncBenchConfig cfg;
  if (opt.n > 0) cfg.n = opt.n;
  if (!opt.sigma.empty()) cfg.sigma_fracs = parse_doubles(opt.sigma, "--sigma");
  if (opt.max_iter > 0) cfg.gpm.max_iter = opt.max_iter;
  cfg.seed = opt.seed;
  cfg.threads = opt.threads;
  Output out(opt.out);
  harness::run_sync(cfg, &out.stream());
  if (!opt.loo_out.empty()) io::write_text_file(opt.loo_out, harness::to_csv(harness::run_loo(cfg)));
}

// ---------------------------------------------------------------------------

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--in", opt.in, "Input JSON (instance or SDP)");
  cmd->add_option("--out", opt.out, "Output file (default: stdout)");
  cmd->add_option("--n", opt.n, "Signal / problem dimension");
  cmd->add_option("--m", opt.m, "Number of measurements");
  cmd->add_option("--seed", opt.seed, "Random seed");
  cmd->add_option("--ensemble", opt.ensemble,
                  "complex-gaussian | real-gaussian | structured-frame (comma list for fig5)");
  cmd->add_option("--max-iter", opt.max_iter, "Iteration cap of the underlying solver");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-convex low-rank recovery: phase retrieval, phase synchronization, Burer-Monteiro"};
  app.require_subcommand(1);
  Options opt;

  auto* gen = app.add_subcommand("gen", "Generate an instance as JSON");
  gen->require_subcommand(1);
  auto* gen_pr_cmd = gen->add_subcommand("pr", "Phase retrieval instance");
  auto* gen_sync_cmd = gen->add_subcommand("sync", "Phase synchronization instance");
  auto* gen_sdp_cmd = gen->add_subcommand("sdp", "Unit-diagonal SDP (random, or the cost of --in)");
  for (auto* c : {gen_pr_cmd, gen_sync_cmd, gen_sdp_cmd}) add_common(c, opt);
  gen_pr_cmd->add_flag("--unit-signal", opt.unit_signal, "Normalize x_true to unit norm");
  gen_sync_cmd->add_option("--sigma", opt.sigma, "Noise level");

  auto* solve = app.add_subcommand("solve", "Run one solver and print its report as JSON");
  solve->require_subcommand(1);
  auto* solve_ap_cmd = solve->add_subcommand("ap", "Alternating projections");
  auto* solve_wf_cmd = solve->add_subcommand("wf", "Wirtinger Flow");
  auto* solve_gpm_cmd = solve->add_subcommand("gpm", "Generalized power method");
  auto* solve_bm_cmd = solve->add_subcommand("bm", "Burer-Monteiro Riemannian gradient descent");
  for (auto* c : {solve_ap_cmd, solve_wf_cmd, solve_gpm_cmd, solve_bm_cmd}) add_common(c, opt);
  for (auto* c : {solve_ap_cmd, solve_wf_cmd, solve_bm_cmd}) {
    c->add_flag("--unit-signal", opt.unit_signal, "Normalize x_true to unit norm when generating");
  }
  solve_wf_cmd->add_option("--step-scale", opt.step_scale, "Step is step_scale / mean(b^2)");
  solve_gpm_cmd->add_option("--sigma", opt.sigma, "Noise level when generating");
  solve_gpm_cmd->add_option("--loo-out", opt.loo_out, "Write leave-one-out diagnostics CSV");
  solve_bm_cmd->add_option("--p", opt.ps, "Factor width (0 for the reference width)");
  solve_bm_cmd->add_option("--grad-tol", opt.grad_tol, "Stop when ||grad||_F < grad_tol * N");

  auto* bench = app.add_subcommand("bench", "Reproduce an experiment as CSV");
  bench->require_subcommand(1);
  auto* fig1 = bench->add_subcommand("fig1", "Success rate of phase retrieval solvers vs m/n");
  auto* fig3 = bench->add_subcommand("fig3", "One-step displacement of AP and WF");
  auto* fig5 = bench->add_subcommand("fig5", "Burer-Monteiro PhaseCut success rate vs m/n");
  auto* basin = bench->add_subcommand("basin", "Attraction basins of alternating projections");
  auto* sync = bench->add_subcommand("sync", "GPM convergence over a noise grid");
  for (auto* c : {fig1, fig3, fig5, basin, sync}) {
    add_common(c, opt);
    c->add_option("--threads", opt.threads, "Worker threads (output does not depend on it)");
  }
  for (auto* c : {fig1, fig5}) {
    c->add_option("--mn-grid", opt.mn_grid, "Comma-separated m/n ratios");
    c->add_option("--trials", opt.trials, "Trials per grid point");
    c->add_option("--tau", opt.tau, "Success threshold on the relative error");
  }
  fig1->add_option("--algorithms", opt.algorithms, "Comma list of ap, wf, phasecut-ref");
  fig1->add_option("--step-scale", opt.step_scale, "WF step scale");
  fig5->add_option("--p", opt.ps, "Comma list of widths; 'ref' for the reference width");
  fig5->add_option("--grad-tol", opt.grad_tol, "Stop when ||grad||_F < grad_tol * N");
  fig3->add_option("--pairs", opt.pairs, "Random pairs per distance");
  fig3->add_option("--d-grid", opt.d_grid, "Comma-separated distances");
  fig3->add_option("--algorithms", opt.algorithms, "Comma list of ap, wf");
  fig3->add_option("--step-scale", opt.step_scale, "WF step scale");
  basin->add_option("--grid", opt.grid, "Grid points per side");
  sync->add_option("--sigma", opt.sigma, "Comma list of noise levels in units of sqrt(n / ln n)");
  sync->add_option("--loo-out", opt.loo_out, "Write leave-one-out diagnostics CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*gen_pr_cmd) gen_pr(opt);
    else if (*gen_sync_cmd) gen_sync(opt);
    else if (*gen_sdp_cmd) gen_sdp(opt);
    else if (*solve_ap_cmd) solve_ap(opt);
    else if (*solve_wf_cmd) solve_wf(opt);
    else if (*solve_gpm_cmd) solve_gpm(opt);
    else if (*solve_bm_cmd) solve_bm(opt);
    else if (*fig1) bench_fig1(opt);
    else if (*fig3) bench_fig3(opt);
    else if (*fig5) bench_fig5(opt);
    else if (*basin) bench_basin(opt);
    else if (*sync) bench_sync(opt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const io::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
