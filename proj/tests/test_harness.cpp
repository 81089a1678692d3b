#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "mpct/error.hpp"
#include "mpct/harness.hpp"
#include "mpct/oracle.hpp"
#include "support/instances.hpp"

using namespace mpct;
using namespace mpct::harness;
using namespace mpct::testing;

namespace {

Scenario integrator_scenario(int trials, int steps) {
  Scenario sc;
  sc.problem = {integrator_model(), unit_params(1, 1, 5), {}};
  sc.references = {{"reachable", vec({0.8}), vec({0.0}), true},
                   {"unreachable", vec({1.5}), vec({0.0}), false}};
  sc.sampler = {vec({-0.9}), vec({0.9})};
  sc.trials = trials;
  sc.steps = steps;
  sc.seed = 42;
  sc.sample_time = 0.5;
  return sc;
}

}  // namespace

TEST_CASE("trial RNG is a pure function of (seed, trial)") {
  TrialRng a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  const double xa = a.uniform01();
  CHECK(xa == b.uniform01());
  CHECK(xa != c.uniform01());
  CHECK(xa != d.uniform01());
  InitialStateSampler s{vec({0.3, -0.2, 0.0}), vec({1.8, 0.2, 0.0})};
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd x = sample_initial_state(s, 1, t);
    CHECK(x[0] >= 0.3);
    CHECK(x[0] < 1.8);
    CHECK(x[1] >= -0.2);
    CHECK(x[2] == 0.0);
  }
}

TEST_CASE("bundled scenario loads") {
  const Scenario sc = load_scenario(std::filesystem::path(MPCT_DATA_DIR) / "ball_plate_bench.json");
  CHECK(sc.trials == 500);
  CHECK(sc.references.size() == 2);
  CHECK(sc.rho_values == std::vector<double>{0.1, 0.6, 2.0});
  CHECK(sc.problem.params.horizon == 30);
  CHECK(sc.sample_time == 0.2);
}

TEST_CASE("scenario validation") {
  Scenario sc = integrator_scenario(1, 1);
  CHECK_NOTHROW(sc.validate());
  sc.trials = 0;
  CHECK_THROWS_AS(sc.validate(), Error);
  sc = integrator_scenario(1, 1);
  sc.sampler.hi[0] = 2.0;  // leaves the state box
  CHECK_THROWS_AS(sc.validate(), Error);
  sc = integrator_scenario(1, 1);
  sc.references[0].x_r = vec({1, 2});
  CHECK_THROWS_AS(sc.validate(), Error);
  CHECK_THROWS_AS(parse_scenario(nlohmann::json{{"format", "nope"}}, "."), Error);
}

TEST_CASE("closed loop from the target equilibrium stays put") {
  const auto data = build_problem(integrator_model(), unit_params(1, 1, 5));
  const ReferenceCase ref{"eq", vec({0.4}), vec({0.0}), true};
  const Trajectory traj = simulate_closed_loop(data, data.model, vec({0.4}), ref, 10);
  REQUIRE(traj.steps() == 10);
  for (std::size_t t = 0; t < traj.steps(); ++t) {
    // Drift is bounded by the default 1e-4 exit tolerance.
    CHECK(std::abs(traj.states[t][0] - 0.4) < 1e-3);
    CHECK(std::abs(traj.inputs[t][0]) < 1e-3);
  }
}

TEST_CASE("closed loop reaches x_r (reachable) or the optimal steady state (unreachable)") {
  const Scenario sc = integrator_scenario(3, 60);
  const auto data = build_problem(sc.problem.model, sc.problem.params);
  const auto ss = oracle::optimal_steady_state(data.model, data.params, sc.references[1].x_r,
                                               sc.references[1].u_r);
  for (int trial = 0; trial < sc.trials; ++trial) {
    const Trajectory reach = simulate_closed_loop(data, sc, trial, 0);
    const Trajectory unreach = simulate_closed_loop(data, sc, trial, 1);
    CHECK(reach.failed_step == -1);
    CHECK(std::abs(reach.states.back()[0] - 0.8) < 1e-3);
    CHECK(std::abs(unreach.states.back()[0] - ss.x[0]) < 1e-3);
    for (const auto& traj : {reach, unreach}) {
      for (const auto& u : traj.inputs) {
        CHECK(u[0] >= -1.0);
        CHECK(u[0] <= 1.0);
      }
    }
  }
}

TEST_CASE("plot data: header-only, schema arithmetic and round trip") {
  Trajectory empty;
  empty.nx = 2;
  empty.nu = 1;
  std::ostringstream os;
  emit_plot_data(empty, os);
  CHECK(os.str() == "step,time,x0,x1,u0,xs0,xs1,us0,iterations\n");

  const Scenario sc = integrator_scenario(1, 3);
  const auto data = build_problem(sc.problem.model, sc.problem.params);
  const Trajectory traj = simulate_closed_loop(data, sc, 0, 0);
  std::ostringstream out;
  emit_plot_data(traj, out);
  std::istringstream lines(out.str());
  std::string line;
  int rows = -1;
  while (std::getline(lines, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') + 1 == 1 + 1 + 1 + 1 + 1 + 1 + 1);
    ++rows;
  }
  CHECK(rows == 3);

  std::istringstream in(out.str());
  const Trajectory back = parse_plot_data(in, 1, 1);
  REQUIRE(back.steps() == 3);
  CHECK(back.sample_time == 0.5);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(back.states[t][0] == traj.states[t][0]);
    CHECK(back.inputs[t][0] == traj.inputs[t][0]);
    CHECK(back.artificial_states[t][0] == traj.artificial_states[t][0]);
    CHECK(back.artificial_inputs[t][0] == traj.artificial_inputs[t][0]);
    CHECK(back.iterations[t] == traj.iterations[t]);
  }

  std::istringstream bad("step,time,x0\n");
  CHECK_THROWS_AS(parse_plot_data(bad, 1, 1), Error);
}

TEST_CASE("aggregate") {
  const Aggregate a = aggregate({3, 1, 10, 2});
  CHECK(a.average == 4.0);
  CHECK(a.median == 2.5);
  CHECK(a.max == 10.0);
  CHECK(a.min == 1.0);
  CHECK(aggregate({5, 1, 3}).median == 3.0);
}

TEST_CASE("benchmark: rho sweep rows, recomputed aggregates, determinism") {
  Scenario sc = integrator_scenario(25, 0);
  sc.rho_values = {0.1, 0.6, 2.0};
  BenchOptions serial;
  serial.parallel = false;
  const BenchResult a = run_benchmark(sc);
  const BenchResult b = run_benchmark(sc);
  const BenchResult c = run_benchmark(sc, serial);
  REQUIRE(a.rows.size() == 6);
  CHECK(a.rows[0].rho == 0.1);
  CHECK(a.rows[5].rho == 2.0);
  REQUIRE(a.records.size() == 150);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].iterations == b.records[i].iterations);
    CHECK(a.records[i].iterations == c.records[i].iterations);
    CHECK(a.records[i].trial == c.records[i].trial);
  }
  for (const auto& row : a.rows) {
    const ReferenceCase& ref = row.reference == "reachable" ? sc.references[0] : sc.references[1];
    const BenchRow again = summarize(a.records, row.rho, ref);
    CHECK(again.iterations.average == row.iterations.average);
    CHECK(again.iterations.median == row.iterations.median);
    CHECK(again.time_ms.max == row.time_ms.max);
    CHECK(again.completed == row.completed);
  }
  const auto doc = bench_to_json(a);
  CHECK(doc["format"] == kBenchFormat);
  CHECK(doc["rows"].size() == 6);
  std::ostringstream csv;
  write_trials_csv(a, csv);
  const std::string text = csv.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 151);
}
