#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mpct/admm.hpp"
#include "mpct/problem.hpp"

namespace mpct {

/// Version tag of the problem-definition file.
inline constexpr const char* kProblemFormat = "mpct-v1";
/// Version tag of the precomputed-data cache written by `precompute`.
inline constexpr const char* kCacheFormat = "mpct-cache-v1";
/// Version tag of ADMM warm-start state files.
inline constexpr const char* kStateFormat = "mpct-state-v1";

struct ProblemDefinition {
  LtiModel model;
  MpctParams params;
  Scaling scaling;
};

/// Parses a problem-definition document:
///
///   {
///     "format": "mpct-v1",
///     "model":  { "A": [[..]], "B": [[..]],
///                 "x_lo": [..], "x_hi": [..], "u_lo": [..], "u_hi": [..] },
///     "params": { "Q": .., "R": .., "S": .., "T": .., "N": 30,
///                 "epsilon": 1e-6, "rho": 0.6,
///                 "eps_primal": 1e-4, "eps_dual": 1e-4, "max_iter": 4000 },
///     "scaling": { "state": [..], "input": [..] }          (optional)
///   }
///
/// Bounds accept the strings "inf" / "-inf". Cost matrices are either nested
/// row-major arrays or flat arrays holding the diagonal. Throws Error with
/// ErrorCode::InvalidArgument on schema violations.
ProblemDefinition parse_problem(const nlohmann::json& doc);
nlohmann::json problem_to_json(const ProblemDefinition& def);

/// Reads a file as JSON. Throws Error(Io) or Error(InvalidArgument).
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

ProblemDefinition load_problem(const std::filesystem::path& path);

/// Cache of a PrecomputedData: the problem definition plus every factor, so
/// loading skips the banded and block factorizations.
nlohmann::json cache_to_json(const ProblemDefinition& def, const PrecomputedData& data);
PrecomputedData cache_from_json(const nlohmann::json& doc);

/// Loads either a problem file (then runs build_problem) or a cache file.
PrecomputedData load_precomputed(const std::filesystem::path& path, ProblemDefinition* def = nullptr);

nlohmann::json state_to_json(const AdmmState& state);
AdmmState state_from_json(const nlohmann::json& doc);

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j, const char* what);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const char* what, bool allow_diagonal);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& M);

}  // namespace mpct
