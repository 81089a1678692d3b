#include "mpct/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "mpct/error.hpp"

namespace mpct::harness {
namespace {

using nlohmann::json;

[[noreturn]] void scenario_error(const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, "scenario: " + what);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

void Scenario::validate() const {
  const auto& m = problem.model;
  const Index nx = m.state_dim();
  const Index nu = m.input_dim();
  if (trials < 1) scenario_error("trials must be >= 1");
  if (steps < 0) scenario_error("steps must be >= 0");
  if (references.empty()) scenario_error("at least one reference is required");
  for (const auto& r : references) {
    if (r.x_r.size() != nx || r.u_r.size() != nu) {
      scenario_error("reference '" + r.name + "' has wrong dimensions");
    }
  }
  if (sampler.lo.size() != nx || sampler.hi.size() != nx) {
    scenario_error("initial_state intervals must have n_x entries");
  }
  for (Index i = 0; i < nx; ++i) {
    if (!(sampler.lo[i] <= sampler.hi[i])) scenario_error("initial_state lo > hi");
    if (sampler.lo[i] < m.x_lo[i] || sampler.hi[i] > m.x_hi[i]) {
      scenario_error("initial_state interval " + std::to_string(i) + " leaves the state bounds");
    }
  }
  for (double rho : rho_values) {
    if (!(rho > 0.0)) scenario_error("rho values must be positive");
  }
}

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object() || doc.value("format", std::string{}) != kScenarioFormat) {
    scenario_error(std::string("expected \"format\": \"") + kScenarioFormat + "\"");
  }
  Scenario sc;
  if (!doc.contains("problem")) scenario_error("missing \"problem\"");
  const auto& p = doc["problem"];
  if (p.is_string()) {
    std::filesystem::path path = p.get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    sc.problem = load_problem(path);
  } else {
    sc.problem = parse_problem(p);
  }
  if (!doc.contains("references") || !doc["references"].is_array()) {
    scenario_error("missing \"references\" array");
  }
  for (const auto& r : doc["references"]) {
    ReferenceCase rc;
    rc.name = r.value("name", std::string("ref") + std::to_string(sc.references.size()));
    rc.x_r = vector_from_json(r.at("x_r"), "reference.x_r");
    rc.u_r = vector_from_json(r.at("u_r"), "reference.u_r");
    rc.reachable = r.value("reachable", true);
    sc.references.push_back(std::move(rc));
  }
  if (!doc.contains("initial_state")) scenario_error("missing \"initial_state\"");
  sc.sampler.lo = vector_from_json(doc["initial_state"].at("lo"), "initial_state.lo");
  sc.sampler.hi = vector_from_json(doc["initial_state"].at("hi"), "initial_state.hi");
  sc.trials = doc.value("trials", 1);
  sc.steps = doc.value("steps", 100);
  sc.seed = doc.value("seed", std::uint64_t{0});
  sc.sample_time = doc.value("sample_time", 1.0);
  if (doc.contains("rho")) {
    const auto& r = doc["rho"];
    if (r.is_number()) {
      sc.rho_values.push_back(r.get<double>());
    } else {
      for (const auto& x : r) sc.rho_values.push_back(x.get<double>());
    }
  }
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_json_file(path), path.parent_path());
}

TrialRng::TrialRng(std::uint64_t seed, std::uint64_t trial)
    : engine_(splitmix64(seed ^ splitmix64(trial))) {}

double TrialRng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

Eigen::VectorXd sample_initial_state(const InitialStateSampler& sampler, std::uint64_t seed,
                                     int trial) {
  TrialRng rng(seed, static_cast<std::uint64_t>(trial));
  Eigen::VectorXd x(sampler.lo.size());
  for (Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(sampler.lo[i], sampler.hi[i]);
  return x;
}

Trajectory simulate_closed_loop(const PrecomputedData& data, const LtiModel& plant,
                                const Eigen::Ref<const Eigen::VectorXd>& x0,
                                const ReferenceCase& reference, int steps,
                                const AdmmOptions& options, double sample_time) {
  Trajectory traj;
  traj.nx = plant.state_dim();
  traj.nu = plant.input_dim();
  traj.sample_time = sample_time;
  traj.states.push_back(x0);

  AdmmState state = cold_start(data);
  AdmmWorkspace ws(data);
  for (int t = 0; t < steps; ++t) {
    const Eigen::VectorXd& x = traj.states.back();
    const SolveReport rep = admm_solve(data, x, reference.x_r, reference.u_r, state, ws, options);
    if (rep.status == SolveStatus::NumericalError) {
      traj.failed_step = t;
      break;
    }
    traj.inputs.push_back(rep.control_action);
    traj.artificial_states.push_back(rep.artificial_state);
    traj.artificial_inputs.push_back(rep.artificial_input);
    traj.iterations.push_back(rep.iterations);
    traj.statuses.push_back(rep.status);
    traj.states.push_back(plant.A * x + plant.B * rep.control_action);
  }
  return traj;
}

Trajectory simulate_closed_loop(const PrecomputedData& data, const Scenario& scenario, int trial,
                                std::size_t reference_index, const AdmmOptions& options) {
  if (reference_index >= scenario.references.size()) {
    throw Error(ErrorCode::InvalidArgument, "reference index out of range");
  }
  const Eigen::VectorXd x0 = sample_initial_state(scenario.sampler, scenario.seed, trial);
  return simulate_closed_loop(data, scenario.problem.model, x0,
                              scenario.references[reference_index], scenario.steps, options,
                              scenario.sample_time);
}

void emit_plot_data(const Trajectory& traj, std::ostream& out) {
  out << "step,time";
  for (Index i = 0; i < traj.nx; ++i) out << ",x" << i;
  for (Index i = 0; i < traj.nu; ++i) out << ",u" << i;
  for (Index i = 0; i < traj.nx; ++i) out << ",xs" << i;
  for (Index i = 0; i < traj.nu; ++i) out << ",us" << i;
  out << ",iterations\n";
  out << std::setprecision(17);
  for (std::size_t t = 0; t < traj.steps(); ++t) {
    out << t << ',' << static_cast<double>(t) * traj.sample_time;
    for (Index i = 0; i < traj.nx; ++i) out << ',' << traj.states[t][i];
    for (Index i = 0; i < traj.nu; ++i) out << ',' << traj.inputs[t][i];
    for (Index i = 0; i < traj.nx; ++i) out << ',' << traj.artificial_states[t][i];
    for (Index i = 0; i < traj.nu; ++i) out << ',' << traj.artificial_inputs[t][i];
    out << ',' << traj.iterations[t] << '\n';
  }
}

void emit_plot_data(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  emit_plot_data(traj, out);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Trajectory parse_plot_data(std::istream& in, Index nx, Index nu) {
  Trajectory traj;
  traj.nx = nx;
  traj.nu = nu;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidArgument, "plot data: missing header");
  const Index cols = 1 + 1 + nx + nu + nx + nu + 1;
  if (std::count(line.begin(), line.end(), ',') + 1 != cols) {
    throw Error(ErrorCode::InvalidArgument, "plot data: header column count");
  }
  bool first = true;
  double t0 = 0.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<Index>(vals.size()) != cols) {
      throw Error(ErrorCode::InvalidArgument, "plot data: row column count");
    }
    Index c = 2;
    auto take = [&](Index n) {
      Eigen::VectorXd v(n);
      for (Index i = 0; i < n; ++i) v[i] = vals[static_cast<std::size_t>(c++)];
      return v;
    };
    traj.states.push_back(take(nx));
    traj.inputs.push_back(take(nu));
    traj.artificial_states.push_back(take(nx));
    traj.artificial_inputs.push_back(take(nu));
    traj.iterations.push_back(static_cast<int>(vals.back()));
    traj.statuses.push_back(SolveStatus::Converged);
    if (first) {
      t0 = vals[1];
      first = false;
    } else if (traj.inputs.size() == 2) {
      traj.sample_time = vals[1] - t0;
    }
  }
  return traj;
}

Aggregate aggregate(std::vector<double> values) {
  Aggregate a;
  if (values.empty()) return a;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  const std::size_t n = values.size();
  a.average = sum / static_cast<double>(n);
  a.min = values.front();
  a.max = values.back();
  a.median = (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return a;
}

BenchRow summarize(const std::vector<TrialRecord>& records, double rho, const ReferenceCase& ref) {
  BenchRow row;
  row.rho = rho;
  row.reference = ref.name;
  row.reachable = ref.reachable;
  std::vector<double> its, times;
  for (const auto& r : records) {
    if (r.rho != rho || r.reference != ref.name) continue;
    ++row.trials;
    if (r.status != SolveStatus::Converged) continue;
    ++row.completed;
    its.push_back(r.iterations);
    times.push_back(r.time_ms);
  }
  row.iterations = aggregate(std::move(its));
  row.time_ms = aggregate(std::move(times));
  return row;
}

BenchResult run_benchmark(const Scenario& scenario, const BenchOptions& options) {
  scenario.validate();
  std::vector<double> rhos = scenario.rho_values;
  if (rhos.empty()) rhos.push_back(scenario.problem.params.rho);

  std::vector<Eigen::VectorXd> x0s(static_cast<std::size_t>(scenario.trials));
  for (int t = 0; t < scenario.trials; ++t) {
    x0s[static_cast<std::size_t>(t)] = sample_initial_state(scenario.sampler, scenario.seed, t);
  }

  BenchResult result;
  for (double rho : rhos) {
    MpctParams params = scenario.problem.params;
    params.rho = rho;
    const PrecomputedData data =
        build_problem(scenario.problem.model, params, scenario.problem.scaling);

    for (const auto& ref : scenario.references) {
      std::vector<TrialRecord> recs(static_cast<std::size_t>(scenario.trials));
      const int n = scenario.trials;
#pragma omp parallel if (options.parallel)
      {
        AdmmWorkspace ws(data);
#pragma omp for schedule(dynamic)
        for (int t = 0; t < n; ++t) {
          auto& rec = recs[static_cast<std::size_t>(t)];
          rec.rho = rho;
          rec.reference = ref.name;
          rec.trial = t;
          rec.x0 = x0s[static_cast<std::size_t>(t)];
          AdmmState state = cold_start(data);
          const SolveReport rep =
              admm_solve(data, rec.x0, ref.x_r, ref.u_r, state, ws, options.admm);
          rec.iterations = rep.iterations;
          rec.status = rep.status;
          rec.time_ms = rep.solve_time * 1e3;
        }
      }
      result.rows.push_back(summarize(recs, rho, ref));
      result.records.insert(result.records.end(), recs.begin(), recs.end());
    }
  }
  return result;
}

json bench_to_json(const BenchResult& result) {
  auto agg = [](const Aggregate& a) {
    return json{{"average", a.average}, {"median", a.median}, {"max", a.max}, {"min", a.min}};
  };
  json rows = json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"rho", r.rho},
                    {"reference", r.reference},
                    {"reachable", r.reachable},
                    {"trials", r.trials},
                    {"completed", r.completed},
                    {"iterations", agg(r.iterations)},
                    {"time_ms", agg(r.time_ms)}});
  }
  return {{"format", kBenchFormat}, {"rows", rows}};
}

void write_trials_csv(const BenchResult& result, std::ostream& out) {
  out << "rho,reference,trial";
  const Index nx = result.records.empty() ? 0 : result.records.front().x0.size();
  for (Index i = 0; i < nx; ++i) out << ",x0_" << i;
  out << ",iterations,status,time_ms\n";
  out << std::setprecision(17);
  for (const auto& r : result.records) {
    out << r.rho << ',' << r.reference << ',' << r.trial;
    for (Index i = 0; i < r.x0.size(); ++i) out << ',' << r.x0[i];
    out << ',' << r.iterations << ',' << to_string(r.status) << ',' << r.time_ms << '\n';
  }
}

}  // namespace mpct::harness
