#include "mpct/problem_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "mpct/error.hpp"

namespace mpct {
namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, "problem file: " + what);
}

double number_from_json(const json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  schema_error(std::string(what) + ": expected a number or \"inf\"/\"-inf\"");
}

json number_to_json(double x) {
  if (std::isinf(x)) return x > 0 ? json("inf") : json("-inf");
  return json(x);
}

const json& member(const json& obj, const char* key, const char* where) {
  if (!obj.is_object() || !obj.contains(key)) {
    schema_error(std::string(where) + " is missing \"" + key + "\"");
  }
  return obj.at(key);
}

}  // namespace

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) schema_error(std::string(what) + ": expected an array");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number_from_json(j[i], what);
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(number_to_json(v[i]));
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what, bool allow_diagonal) {
  if (!j.is_array() || j.empty()) schema_error(std::string(what) + ": expected a non-empty array");
  if (!j.front().is_array()) {
    if (!allow_diagonal) schema_error(std::string(what) + ": expected nested row arrays");
    return vector_from_json(j, what).asDiagonal();
  }
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j.front().size());
  Eigen::MatrixXd M(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      schema_error(std::string(what) + ": ragged rows");
    }
    for (Index c = 0; c < cols; ++c) {
      M(r, c) = number_from_json(row[static_cast<std::size_t>(c)], what);
    }
  }
  return M;
}

json matrix_to_json(const Eigen::MatrixXd& M) {
  json out = json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(number_to_json(M(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

ProblemDefinition parse_problem(const json& doc) {
  if (!doc.is_object()) schema_error("top level must be an object");
  const auto& fmt = member(doc, "format", "document");
  if (!fmt.is_string() || fmt.get<std::string>() != kProblemFormat) {
    schema_error(std::string("unsupported format, expected \"") + kProblemFormat + "\"");
  }
  ProblemDefinition def;
  const auto& m = member(doc, "model", "document");
  def.model.A = matrix_from_json(member(m, "A", "model"), "model.A", false);
  def.model.B = matrix_from_json(member(m, "B", "model"), "model.B", false);
  def.model.x_lo = vector_from_json(member(m, "x_lo", "model"), "model.x_lo");
  def.model.x_hi = vector_from_json(member(m, "x_hi", "model"), "model.x_hi");
  def.model.u_lo = vector_from_json(member(m, "u_lo", "model"), "model.u_lo");
  def.model.u_hi = vector_from_json(member(m, "u_hi", "model"), "model.u_hi");

  const auto& p = member(doc, "params", "document");
  def.params.Q = matrix_from_json(member(p, "Q", "params"), "params.Q", true);
  def.params.R = matrix_from_json(member(p, "R", "params"), "params.R", true);
  def.params.S = matrix_from_json(member(p, "S", "params"), "params.S", true);
  def.params.T = matrix_from_json(member(p, "T", "params"), "params.T", true);
  const auto& N = member(p, "N", "params");
  if (!N.is_number_integer()) schema_error("params.N must be an integer");
  def.params.horizon = N.get<Index>();
  if (p.contains("epsilon")) def.params.epsilon = number_from_json(p["epsilon"], "params.epsilon");
  if (p.contains("rho")) def.params.rho = number_from_json(p["rho"], "params.rho");
  if (p.contains("eps_primal")) def.params.eps_primal = number_from_json(p["eps_primal"], "params.eps_primal");
  if (p.contains("eps_dual")) def.params.eps_dual = number_from_json(p["eps_dual"], "params.eps_dual");
  if (p.contains("max_iter")) {
    if (!p["max_iter"].is_number_integer()) schema_error("params.max_iter must be an integer");
    def.params.max_iter = p["max_iter"].get<int>();
  }

  if (doc.contains("scaling")) {
    const auto& s = doc["scaling"];
    if (s.contains("state")) def.scaling.state = vector_from_json(s["state"], "scaling.state");
    if (s.contains("input")) def.scaling.input = vector_from_json(s["input"], "scaling.input");
  }
  return def;
}

json problem_to_json(const ProblemDefinition& def) {
  json doc;
  doc["format"] = kProblemFormat;
  doc["model"] = {
      {"A", matrix_to_json(def.model.A)},       {"B", matrix_to_json(def.model.B)},
      {"x_lo", vector_to_json(def.model.x_lo)}, {"x_hi", vector_to_json(def.model.x_hi)},
      {"u_lo", vector_to_json(def.model.u_lo)}, {"u_hi", vector_to_json(def.model.u_hi)},
  };
  doc["params"] = {
      {"Q", matrix_to_json(def.params.Q)},
      {"R", matrix_to_json(def.params.R)},
      {"S", matrix_to_json(def.params.S)},
      {"T", matrix_to_json(def.params.T)},
      {"N", def.params.horizon},
      {"epsilon", def.params.epsilon},
      {"rho", def.params.rho},
      {"eps_primal", def.params.eps_primal},
      {"eps_dual", def.params.eps_dual},
      {"max_iter", def.params.max_iter},
  };
  if (!def.scaling.is_identity()) {
    json s = json::object();
    if (def.scaling.state.size()) s["state"] = vector_to_json(def.scaling.state);
    if (def.scaling.input.size()) s["input"] = vector_to_json(def.scaling.input);
    doc["scaling"] = s;
  }
  return doc;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

ProblemDefinition load_problem(const std::filesystem::path& path) {
  return parse_problem(read_json_file(path));
}

json cache_to_json(const ProblemDefinition& def, const PrecomputedData& data) {
  json doc;
  doc["format"] = kCacheFormat;
  doc["problem"] = problem_to_json(def);
  json blocks = json::array();
  const auto& gh = data.p_system.gamma();
  for (std::size_t b = 0; b < gh.block_count(); ++b) blocks.push_back(matrix_to_json(gh.block_factor(b)));
  doc["gamma_hat_factor"] = std::move(blocks);
  doc["small_hat"] = matrix_to_json(data.p_system.small().matrix());
  const auto& gt = data.w_system.gamma();
  doc["gamma_tilde_factor"] = {
      {"n", gt.size()}, {"half_bandwidth", gt.half_bandwidth()}, {"bands", gt.bands()}};
  doc["u_tilde"] = matrix_to_json(data.w_system.factors().U);
  doc["v_tilde"] = matrix_to_json(data.w_system.factors().V);
  doc["small_tilde"] = matrix_to_json(data.w_system.small().matrix());
  return doc;
}

PrecomputedData cache_from_json(const json& doc) {
  const auto& fmt = member(doc, "format", "cache");
  if (!fmt.is_string() || fmt.get<std::string>() != kCacheFormat) {
    schema_error(std::string("unsupported cache format, expected \"") + kCacheFormat + "\"");
  }
  const ProblemDefinition def = parse_problem(member(doc, "problem", "cache"));
  def.model.validate();
  def.params.validate(def.model.state_dim(), def.model.input_dim());
  auto [model, params] = apply_scaling(def.model, def.params, def.scaling);

  PrecomputedData data;
  data.bounds = tightened_bounds(model, params);
  data.G = PredictionMatrix(model.A, model.B, params.horizon);

  std::vector<Eigen::MatrixXd> factors;
  for (const auto& b : member(doc, "gamma_hat_factor", "cache")) {
    factors.push_back(matrix_from_json(b, "gamma_hat_factor", false));
  }
  const Index nx = model.state_dim();
  const Index nu = model.input_dim();
  CouplingFactors coupling{nx, nu, params.horizon, Eigen::MatrixXd::Zero(nx + nu, nx + nu)};
  coupling.stage_cost.topLeftCorner(nx, nx) = params.Q;
  coupling.stage_cost.bottomRightCorner(nu, nu) = params.R;
  data.p_system = PSystem(BlockDiagFactor::from_factors(std::move(factors)), coupling,
                          SmallDense(matrix_from_json(member(doc, "small_hat", "cache"), "small_hat", false)));

  const auto& gt = member(doc, "gamma_tilde_factor", "cache");
  auto L = BandedCholeskyFactor::from_bands(member(gt, "n", "gamma_tilde_factor").get<Index>(),
                                            member(gt, "half_bandwidth", "gamma_tilde_factor").get<Index>(),
                                            member(gt, "bands", "gamma_tilde_factor").get<std::vector<double>>());
  DenseLowRank low_rank{matrix_from_json(member(doc, "u_tilde", "cache"), "u_tilde", false),
                        matrix_from_json(member(doc, "v_tilde", "cache"), "v_tilde", false)};
  data.w_system = WSystem(std::move(L), std::move(low_rank),
                          SmallDense(matrix_from_json(member(doc, "small_tilde", "cache"), "small_tilde", false)));
  if (data.p_system.size() != (params.horizon + 1) * (nx + nu) ||
      data.w_system.size() != (params.horizon + 2) * nx) {
    throw DimensionMismatch("cache factors do not match the problem dimensions");
  }
  data.model = std::move(model);
  data.params = std::move(params);
  data.scaling = def.scaling;
  return data;
}

PrecomputedData load_precomputed(const std::filesystem::path& path, ProblemDefinition* def_out) {
  const json doc = read_json_file(path);
  const auto fmt = doc.value("format", std::string{});
  if (fmt == kCacheFormat) {
    if (def_out) *def_out = parse_problem(doc.at("problem"));
    return cache_from_json(doc);
  }
  ProblemDefinition def = parse_problem(doc);
  PrecomputedData data = build_problem(def.model, def.params, def.scaling);
  if (def_out) *def_out = std::move(def);
  return data;
}

json state_to_json(const AdmmState& s) {
  return {{"format", kStateFormat},
          {"z", vector_to_json(s.z)},
          {"v", vector_to_json(s.v)},
          {"lambda", vector_to_json(s.lambda)},
          {"k", s.k}};
}

AdmmState state_from_json(const json& doc) {
  const auto& fmt = member(doc, "format", "state");
  if (!fmt.is_string() || fmt.get<std::string>() != kStateFormat) {
    schema_error(std::string("unsupported state format, expected \"") + kStateFormat + "\"");
  }
  AdmmState s;
  s.z = vector_from_json(member(doc, "z", "state"), "state.z");
  s.v = vector_from_json(member(doc, "v", "state"), "state.v");
  s.lambda = vector_from_json(member(doc, "lambda", "state"), "state.lambda");
  s.k = doc.value("k", 0);
  return s;
}

}  // namespace mpct
