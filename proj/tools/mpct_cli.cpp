// mpct: command line front end.
//
// Exit codes: 0 success, 2 solver did not converge / check failed,
// 3 invalid input (bad files, dimensions, non-PD weights, ...).

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpct/admm.hpp"
#include "mpct/error.hpp"
#include "mpct/harness.hpp"
#ifdef MPCT_HAVE_ORACLE
#include "mpct/oracle.hpp"
#endif
#include "mpct/problem.hpp"
#include "mpct/problem_io.hpp"

namespace {

using nlohmann::json;
using namespace mpct;

constexpr int kExitNotConverged = 2;
constexpr int kExitInvalid = 3;

struct Overrides {
  std::optional<double> rho;
  std::optional<double> eps_primal;
  std::optional<double> eps_dual;
  std::optional<int> max_iter;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--rho", rho, "ADMM penalty (re-runs the offline phase)");
    cmd->add_option("--eps-primal", eps_primal, "primal exit tolerance");
    cmd->add_option("--eps-dual", eps_dual, "dual exit tolerance");
    cmd->add_option("--max-iter", max_iter, "iteration cap");
  }

  void apply(ProblemDefinition& def) const {
    if (rho) def.params.rho = *rho;
    if (eps_primal) def.params.eps_primal = *eps_primal;
    if (eps_dual) def.params.eps_dual = *eps_dual;
    if (max_iter) def.params.max_iter = *max_iter;
  }
};

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

// Loads a problem or cache. A cache is only reused when rho is unchanged.
PrecomputedData load_data(const std::string& path, const Overrides& ov, ProblemDefinition& def) {
  PrecomputedData data = load_precomputed(path, &def);
  const double cached_rho = def.params.rho;
  ov.apply(def);
  if (def.params.rho != cached_rho) return build_problem(def.model, def.params, def.scaling);
  data.params.eps_primal = def.params.eps_primal;
  data.params.eps_dual = def.params.eps_dual;
  data.params.max_iter = def.params.max_iter;
  return data;
}

json report_json(const SolveReport& r) {
  return {{"status", to_string(r.status)},
          {"iterations", r.iterations},
          {"primal_residual", r.primal_residual},
          {"dual_residual", r.dual_residual},
          {"control_action", vector_to_json(r.control_action)},
          {"artificial_state", vector_to_json(r.artificial_state)},
          {"artificial_input", vector_to_json(r.artificial_input)},
          {"solve_time_s", r.solve_time},
          {"avg_iter_time_s", r.avg_iter_time}};
}

int cmd_precompute(const std::string& in, const std::string& out, const Overrides& ov) {
  ProblemDefinition def = load_problem(in);
  ov.apply(def);
  const PrecomputedData data = build_problem(def.model, def.params, def.scaling);
  write_json_file(out, cache_to_json(def, data));
  std::cerr << "n_z=" << data.nz() << " m_z=" << data.mz() << " low rank=" << data.low_rank()
            << " -> " << out << "\n";
  return 0;
}

int cmd_solve(const std::string& in, const std::vector<double>& x0, const std::vector<double>& xr,
              std::vector<double> ur, const std::string& warm, const std::string& state_out,
              const Overrides& ov) {
  ProblemDefinition def;
  const PrecomputedData data = load_data(in, ov, def);
  if (ur.empty()) ur.assign(static_cast<std::size_t>(data.nu()), 0.0);
  std::optional<AdmmState> start;
  if (!warm.empty()) start = state_from_json(read_json_file(warm));
  const auto [rep, state] = admm_solve(data, to_vector(x0), to_vector(xr), to_vector(ur), start);
  std::cout << report_json(rep).dump(2) << "\n";
  if (!state_out.empty()) write_json_file(state_out, state_to_json(state));
  return rep.status == SolveStatus::Converged ? 0 : kExitNotConverged;
}

int cmd_simulate(const std::string& in, const std::string& out, int trial,
                 const std::string& reference, std::optional<int> steps,
                 std::optional<std::uint64_t> seed, const Overrides& ov) {
  harness::Scenario sc = harness::load_scenario(in);
  ov.apply(sc.problem);
  if (steps) sc.steps = *steps;
  if (seed) sc.seed = *seed;
  std::size_t ref = 0;
  if (!reference.empty()) {
    bool found = false;
    for (std::size_t i = 0; i < sc.references.size(); ++i) {
      if (sc.references[i].name == reference || std::to_string(i) == reference) {
        ref = i;
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::InvalidArgument, "unknown reference '" + reference + "'");
  }
  const PrecomputedData data = build_problem(sc.problem.model, sc.problem.params, sc.problem.scaling);
  const harness::Trajectory traj = harness::simulate_closed_loop(data, sc, trial, ref);
  if (out.empty() || out == "-") {
    harness::emit_plot_data(traj, std::cout);
  } else {
    harness::emit_plot_data(traj, std::filesystem::path(out));
  }
  if (traj.failed_step >= 0) {
    std::cerr << "numerical failure at step " << traj.failed_step << "\n";
    return kExitNotConverged;
  }
  return 0;
}

int cmd_bench(const std::string& in, const std::string& out, const std::string& trials_csv,
              std::optional<int> trials, std::optional<std::uint64_t> seed, bool serial,
              const Overrides& ov) {
  harness::Scenario sc = harness::load_scenario(in);
  if (ov.rho) sc.rho_values = {*ov.rho};
  Overrides rest = ov;
  rest.rho.reset();
  rest.apply(sc.problem);
  if (trials) sc.trials = *trials;
  if (seed) sc.seed = *seed;
  sc.validate();
  harness::BenchOptions opt;
  opt.parallel = !serial;
  const harness::BenchResult res = harness::run_benchmark(sc, opt);
  const json doc = harness::bench_to_json(res);
  if (out.empty() || out == "-") {
    std::cout << doc.dump(2) << "\n";
  } else {
    write_json_file(out, doc);
  }
  if (!trials_csv.empty()) {
    std::ofstream f(trials_csv);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + trials_csv);
    harness::write_trials_csv(res, f);
  }
  for (const auto& row : res.rows) {
    std::cerr << "rho=" << row.rho << " " << row.reference << ": " << row.completed << "/"
              << row.trials << " converged, iterations avg " << row.iterations.average
              << " median " << row.iterations.median << "\n";
  }
  return 0;
}

int cmd_check(const std::string& in, std::vector<double> x0, std::vector<double> xr,
              std::vector<double> ur, std::uint64_t seed, const Overrides& ov) {
  ProblemDefinition def;
  const PrecomputedData data = load_data(in, ov, def);
  const auto nx = static_cast<std::size_t>(data.nx());
  if (x0.empty()) {
    // Origin projected into the state box.
    for (std::size_t i = 0; i < nx; ++i) {
      x0.push_back(std::clamp(0.0, def.model.x_lo[static_cast<Index>(i)],
                              def.model.x_hi[static_cast<Index>(i)]));
    }
  }
  if (xr.empty()) xr = x0;
  if (ur.empty()) ur.assign(static_cast<std::size_t>(data.nu()), 0.0);
#ifdef MPCT_HAVE_ORACLE
  oracle::CrossCheckOptions opt;
  opt.seed = seed;
  const auto lines = oracle::cross_validate(data, to_vector(x0), to_vector(xr), to_vector(ur), opt);
  bool ok = true;
  for (const auto& l : lines) {
    std::printf("%s  %-48s %.3e (tol %.0e)\n", l.pass ? "PASS" : "FAIL", l.name.c_str(), l.value,
                l.tolerance);
    ok = ok && l.pass;
  }
  return ok ? 0 : kExitNotConverged;
#else
  (void)seed;
  throw Error(ErrorCode::InvalidArgument, "built without the dense oracle (MPCT_BUILD_ORACLE=OFF)");
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured ADMM solver for MPC for tracking"};
  app.require_subcommand(1);

  std::string in, out, warm, state_out, trials_csv, reference;
  std::vector<double> x0, xr, ur;
  int trial = 0;
  std::optional<int> steps, trials;
  std::optional<std::uint64_t> seed;
  std::uint64_t check_seed = 1;
  bool serial = false;
  Overrides ov;

  auto* pre = app.add_subcommand("precompute", "offline phase; writes a cache file");
  pre->add_option("problem", in, "problem JSON")->required()->check(CLI::ExistingFile);
  pre->add_option("-o,--output", out, "cache JSON")->required();
  ov.add_to(pre);

  auto* solve = app.add_subcommand("solve", "one ADMM solve; prints a JSON report");
  solve->add_option("problem", in, "problem or cache JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--x0", x0, "current state, comma separated")->required()->delimiter(',');
  solve->add_option("--xr", xr, "state reference")->required()->delimiter(',');
  solve->add_option("--ur", ur, "input reference (default 0)")->delimiter(',');
  solve->add_option("--warm", warm, "warm start state JSON")->check(CLI::ExistingFile);
  solve->add_option("--state-out", state_out, "write the final (z, v, lambda)");
  ov.add_to(solve);

  auto* sim = app.add_subcommand("simulate", "closed loop; writes plot CSV");
  sim->add_option("scenario", in, "scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("-o,--output", out, "CSV path, '-' for stdout");
  sim->add_option("--trial", trial, "trial index (selects the initial state)");
  sim->add_option("--reference", reference, "reference name or index");
  sim->add_option("--steps", steps, "closed-loop steps");
  sim->add_option("--seed", seed, "sampler seed");
  ov.add_to(sim);

  auto* bench = app.add_subcommand("bench", "cold-start iteration statistics");
  bench->add_option("scenario", in, "scenario JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("-o,--output", out, "stats JSON, '-' for stdout");
  bench->add_option("--trials-csv", trials_csv, "per-trial CSV");
  bench->add_option("--trials", trials, "number of trials");
  bench->add_option("--seed", seed, "sampler seed");
  bench->add_flag("--serial", serial, "disable OpenMP over trials");
  ov.add_to(bench);

  auto* check = app.add_subcommand("check", "cross-validate against the dense oracle");
  check->add_option("problem", in, "problem or cache JSON")->required()->check(CLI::ExistingFile);
  check->add_option("--x0", x0, "state for the ADMM comparison")->delimiter(',');
  check->add_option("--xr", xr, "state reference")->delimiter(',');
  check->add_option("--ur", ur, "input reference")->delimiter(',');
  check->add_option("--seed", check_seed, "seed of the random KKT right-hand sides");
  ov.add_to(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*pre) return cmd_precompute(in, out, ov);
    if (*solve) return cmd_solve(in, x0, xr, ur, warm, state_out, ov);
    if (*sim) return cmd_simulate(in, out, trial, reference, steps, seed, ov);
    if (*bench) return cmd_bench(in, out, trials_csv, trials, seed, serial, ov);
    if (*check) return cmd_check(in, x0, xr, ur, check_seed, ov);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::NotConverged ? kExitNotConverged : kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return 0;
}
