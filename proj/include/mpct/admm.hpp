#pragma once

#include <optional>

#include <Eigen/Dense>

#include "mpct/kkt.hpp"
#include "mpct/problem.hpp"

namespace mpct {

enum class SolveStatus { Converged, MaxIterations, NumericalError };

const char* to_string(SolveStatus status);

/// ADMM iterates for the splitting z - v = 0. `v` is always inside the box
/// after a v-update. Stored in the (possibly scaled) solver coordinates.
struct AdmmState {
  Eigen::VectorXd z;
  Eigen::VectorXd v;
  Eigen::VectorXd lambda;
  int k = 0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  double primal_residual = 0.0;  // ||z - v||_inf
  double dual_residual = 0.0;    // ||v+ - v||_inf
  Eigen::VectorXd control_action;  // first input block of v, original units
  Eigen::VectorXd artificial_state;  // x_s block of v, original units
  Eigen::VectorXd artificial_input;  // u_s block of v, original units
  double solve_time = 0.0;     // seconds, iteration loop only
  double avg_iter_time = 0.0;  // seconds
};

struct AdmmOptions {
  /// When set, the exit test scales eps_primal by max(1, ||z||, ||v||) and
  /// eps_dual by max(1, ||v||). Off to keep the plain absolute rule.
  bool relative_tolerance = false;
  /// Overrides the values stored in MpctParams when set.
  std::optional<double> eps_primal;
  std::optional<double> eps_dual;
  std::optional<int> max_iter;
};

/// Scratch for admm_solve; reuse across sample times to avoid allocations.
struct AdmmWorkspace {
  KktWorkspace kkt;
  QpVectors qp;
  Eigen::VectorXd p;
  Eigen::VectorXd mu;
  Eigen::VectorXd v_prev;

  explicit AdmmWorkspace(const PrecomputedData& data);
  AdmmWorkspace() = default;
};

/// Separable box projection v = clip(z + lambda / rho, v_lo, v_hi).
void v_update(const Eigen::Ref<const Eigen::VectorXd>& z_next,
              const Eigen::Ref<const Eigen::VectorXd>& lambda, double rho,
              const Eigen::Ref<const Eigen::VectorXd>& v_lo,
              const Eigen::Ref<const Eigen::VectorXd>& v_hi, Eigen::Ref<Eigen::VectorXd> v);

Eigen::VectorXd v_update(const Eigen::Ref<const Eigen::VectorXd>& z_next,
                         const Eigen::Ref<const Eigen::VectorXd>& lambda, double rho,
                         const Eigen::Ref<const Eigen::VectorXd>& v_lo,
                         const Eigen::Ref<const Eigen::VectorXd>& v_hi);

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
};

/// primal = ||z - v||_inf, dual = ||v - prev_v||_inf.
Residuals residuals(const AdmmState& state, const Eigen::Ref<const Eigen::VectorXd>& prev_v);

/// Cold start: v = clip(0) into the box, lambda = 0.
AdmmState cold_start(const PrecomputedData& data);

/// Runs the ADMM iteration from `warm` (or a cold start). The returned state
/// can warm start the next sample time. Never throws on non-convergence; the
/// status carries it. Throws DimensionMismatch / NonFiniteInput on bad input.
std::pair<SolveReport, AdmmState> admm_solve(const PrecomputedData& data,
                                             const Eigen::Ref<const Eigen::VectorXd>& x_t,
                                             const Eigen::Ref<const Eigen::VectorXd>& x_r,
                                             const Eigen::Ref<const Eigen::VectorXd>& u_r,
                                             const std::optional<AdmmState>& warm = std::nullopt,
                                             const AdmmOptions& options = {});

/// Allocation-light variant: iterates `state` in place using `ws`.
SolveReport admm_solve(const PrecomputedData& data, const Eigen::Ref<const Eigen::VectorXd>& x_t,
                       const Eigen::Ref<const Eigen::VectorXd>& x_r,
                       const Eigen::Ref<const Eigen::VectorXd>& u_r, AdmmState& state,
                       AdmmWorkspace& ws, const AdmmOptions& options = {});

}  // namespace mpct
