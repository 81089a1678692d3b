#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpct/admm.hpp"
#include "mpct/problem.hpp"
#include "mpct/problem_io.hpp"

namespace mpct::harness {

inline constexpr const char* kScenarioFormat = "mpct-scenario-v1";
inline constexpr const char* kBenchFormat = "mpct-bench-v1";

struct ReferenceCase {
  std::string name;
  Eigen::VectorXd x_r;
  Eigen::VectorXd u_r;
  bool reachable = true;
};

/// Per-coordinate uniform intervals; lo == hi pins a coordinate.
struct InitialStateSampler {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

struct Scenario {
  ProblemDefinition problem;
  std::vector<ReferenceCase> references;
  InitialStateSampler sampler;
  int trials = 1;
  int steps = 100;
  std::uint64_t seed = 0;
  double sample_time = 1.0;
  /// Penalties to sweep in `bench`; empty means the problem file's rho.
  std::vector<double> rho_values;

  /// Throws Error(InvalidArgument) when the sampler leaves the state box,
  /// trials < 1, or reference sizes are wrong.
  void validate() const;
};

/// Scenario document:
///
///   { "format": "mpct-scenario-v1",
///     "problem": "model.json" | { ...inline problem... },
///     "references": [ { "name": "reachable", "x_r": [..], "u_r": [..],
///                       "reachable": true } ],
///     "initial_state": { "lo": [..], "hi": [..] },
///     "trials": 500, "steps": 100, "seed": 1, "sample_time": 0.2,
///     "rho": [0.1, 0.6, 2] }
///
/// A relative problem path is resolved against `base_dir`.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

/// Random stream for one trial: mt19937_64 seeded from (seed, trial) through
/// splitmix64, with doubles built from the top 53 bits. Identical on every
/// platform, unlike std::uniform_real_distribution.
class TrialRng {
 public:
  TrialRng(std::uint64_t seed, std::uint64_t trial);
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 engine_;
};

Eigen::VectorXd sample_initial_state(const InitialStateSampler& sampler, std::uint64_t seed,
                                     int trial);

struct Trajectory {
  Index nx = 0;
  Index nu = 0;
  double sample_time = 1.0;
  std::vector<Eigen::VectorXd> states;  // x(0..steps); one longer than inputs
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> artificial_states;
  std::vector<Eigen::VectorXd> artificial_inputs;
  std::vector<int> iterations;
  std::vector<SolveStatus> statuses;
  int failed_step = -1;  // step of a NumericalError, -1 otherwise

  std::size_t steps() const noexcept { return inputs.size(); }
};

/// Closed loop on `plant` (original units): solve from x(t) warm started from
/// t-1, apply u(t), propagate. Stops early on a numerical failure.
Trajectory simulate_closed_loop(const PrecomputedData& data, const LtiModel& plant,
                                const Eigen::Ref<const Eigen::VectorXd>& x0,
                                const ReferenceCase& reference, int steps,
                                const AdmmOptions& options = {}, double sample_time = 1.0);

/// Trial `trial` of the scenario against reference `reference_index`.
Trajectory simulate_closed_loop(const PrecomputedData& data, const Scenario& scenario, int trial,
                                std::size_t reference_index, const AdmmOptions& options = {});

/// Tidy CSV: step,time,x*,u*,xs*,us*,iterations. One row per applied input.
void emit_plot_data(const Trajectory& traj, std::ostream& out);
void emit_plot_data(const Trajectory& traj, const std::filesystem::path& path);

/// Parses CSV written by emit_plot_data (states beyond the last input are
/// not part of the file). Throws Error(InvalidArgument).
Trajectory parse_plot_data(std::istream& in, Index nx, Index nu);

struct Aggregate {
  double average = 0.0;
  double median = 0.0;
  double max = 0.0;
  double min = 0.0;
};

Aggregate aggregate(std::vector<double> values);

struct TrialRecord {
  double rho = 0.0;
  std::string reference;
  int trial = 0;
  Eigen::VectorXd x0;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIterations;
  double time_ms = 0.0;
};

struct BenchRow {
  double rho = 0.0;
  std::string reference;
  bool reachable = true;
  int trials = 0;
  int completed = 0;  // converged trials; aggregates cover these only
  Aggregate iterations;
  Aggregate time_ms;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<TrialRecord> records;
};

struct BenchOptions {
  bool parallel = true;
  AdmmOptions admm;
};

/// One cold-started solve per (rho, reference, trial). Trials run in
/// parallel when requested; records come back ordered the same way either
/// way and the iteration counts do not depend on the thread count.
BenchResult run_benchmark(const Scenario& scenario, const BenchOptions& options = {});

/// Recomputes a row's aggregates from its records.
BenchRow summarize(const std::vector<TrialRecord>& records, double rho, const ReferenceCase& ref);

nlohmann::json bench_to_json(const BenchResult& result);
void write_trials_csv(const BenchResult& result, std::ostream& out);

}  // namespace mpct::harness
