// Micro benchmarks: structured vs dense KKT solve over the horizon, one ADMM
// iteration, and the trial sweep with and without OpenMP.

#include <benchmark/benchmark.h>

#include <filesystem>

#include "mpct/admm.hpp"
#include "mpct/harness.hpp"
#include "mpct/kkt.hpp"
#include "mpct/oracle.hpp"
#include "mpct/problem_io.hpp"

using namespace mpct;

namespace {

const std::filesystem::path kData = MPCT_DATA_DIR;

ProblemDefinition ball_plate(Index N) {
  ProblemDefinition def = load_problem(kData / "ball_plate_like.json");
  def.params.horizon = N;
  return def;
}

Eigen::VectorXd x0_ball_plate() {
  return (Eigen::VectorXd(8) << 1.2, 0.1, 0, 0, 0.6, -0.1, 0, 0).finished();
}

Eigen::VectorXd xr_ball_plate() {
  return (Eigen::VectorXd(8) << 1, 0, 0, 0, 0.8, 0, 0, 0).finished();
}

void BM_KktStructured(benchmark::State& st) {
  const auto def = ball_plate(st.range(0));
  const auto data = build_problem(def.model, def.params, def.scaling);
  KktWorkspace ws(data);
  const Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(data.nz(), -1, 1);
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(data.mz(), 1, -1);
  Eigen::VectorXd z(data.nz()), mu(data.mz());
  for (auto _ : st) {
    solve_kkt_system(data, p, b, ws, z, mu);
    benchmark::DoNotOptimize(z.data());
  }
  st.SetComplexityN(st.range(0));
}

void BM_KktDense(benchmark::State& st) {
  const auto def = ball_plate(st.range(0));
  const auto data = build_problem(def.model, def.params, def.scaling);
  const Eigen::VectorXd x0 = data.scale_state(x0_ball_plate());
  const auto inst = oracle::dense_instance(data.model, data.params, x0, x0, Eigen::VectorXd::Zero(2));
  const Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(data.nz(), -1, 1);
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(data.mz(), 1, -1);
  for (auto _ : st) {
    auto sol = oracle::dense_kkt_solve(inst, p, b);
    benchmark::DoNotOptimize(sol.z.data());
  }
  st.SetComplexityN(st.range(0));
}

void BM_AdmmIteration(benchmark::State& st) {
  const auto def = ball_plate(st.range(0));
  const auto data = build_problem(def.model, def.params, def.scaling);
  AdmmWorkspace ws(data);
  AdmmOptions opt;
  opt.eps_primal = 0.0;
  opt.eps_dual = 0.0;
  opt.max_iter = 1;
  AdmmState state = cold_start(data);
  const Eigen::VectorXd x0 = x0_ball_plate(), xr = xr_ball_plate(), ur = Eigen::VectorXd::Zero(2);
  for (auto _ : st) {
    admm_solve(data, x0, xr, ur, state, ws, opt);
    benchmark::ClobberMemory();
  }
}

void BM_BenchSweep(benchmark::State& st) {
  harness::Scenario sc = harness::load_scenario(kData / "ball_plate_bench.json");
  sc.trials = 32;
  sc.rho_values = {2.0};
  harness::BenchOptions opt;
  opt.parallel = st.range(0) != 0;
  opt.admm.max_iter = 500;
  for (auto _ : st) {
    auto res = harness::run_benchmark(sc, opt);
    benchmark::DoNotOptimize(res.records.data());
  }
  st.SetLabel(opt.parallel ? "openmp" : "serial");
}

}  // namespace

BENCHMARK(BM_KktStructured)->Arg(10)->Arg(20)->Arg(30)->Arg(60)->Arg(120)->Complexity(benchmark::oN);
// The dense oracle stops at n_z = 600 (N = 30 here).
BENCHMARK(BM_KktDense)->Arg(5)->Arg(10)->Arg(20)->Arg(30)->Complexity();
BENCHMARK(BM_AdmmIteration)->Arg(30)->Arg(60);
BENCHMARK(BM_BenchSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
