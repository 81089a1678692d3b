#pragma once

// Dense reference implementations used to cross-check the structured solver.
// Nothing here shares code with the banded/semi-banded path: H, G and the
// bounds are rebuilt from the problem definition with explicit dense loops.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpct/problem.hpp"

namespace mpct::oracle {

/// Explicit dense form of the tracking QP
///   min 1/2 z'Hz + q'z  s.t.  Gz = b,  v_lo <= z <= v_hi
struct DenseQpInstance {
  Eigen::MatrixXd H;
  Eigen::MatrixXd G;
  Eigen::VectorXd q;
  Eigen::VectorXd b;
  Eigen::VectorXd v_lo;
  Eigen::VectorXd v_hi;
  double rho = 1.0;
};

/// Maximum n_z the dense routines accept.
inline constexpr Index kMaxDenseSize = 600;

/// Builds the dense instance for state x_t and reference (x_r, u_r).
DenseQpInstance dense_instance(const LtiModel& model, const MpctParams& params,
                               const Eigen::Ref<const Eigen::VectorXd>& x_t,
                               const Eigen::Ref<const Eigen::VectorXd>& x_r,
                               const Eigen::Ref<const Eigen::VectorXd>& u_r);

/// Dense H of the tracking cost and dense G of the dynamics, on their own.
Eigen::MatrixXd dense_cost_matrix(const MpctParams& params);
Eigen::MatrixXd dense_constraint_matrix(const LtiModel& model, Index horizon);

struct KktPair {
  Eigen::VectorXd z;
  Eigen::VectorXd mu;
};

/// Solves [[H + rho I, G'], [G, 0]] (z, mu) = (-p, b) with a full-pivoting LU.
/// Throws DimensionMismatch or SingularKkt.
KktPair dense_kkt_solve(const DenseQpInstance& instance,
                        const Eigen::Ref<const Eigen::VectorXd>& p,
                        const Eigen::Ref<const Eigen::VectorXd>& b);

struct DenseQpOptions {
  double rho = 1.0;
  double tolerance = 1e-10;
  long max_iter = 1'000'000;
  /// Re-solve the equality QP on the detected active set after ADMM stops.
  bool polish = true;
};

struct DenseQpResult {
  Eigen::VectorXd z;       // box feasible primal solution
  Eigen::VectorXd lambda;  // bound multipliers (positive at upper bounds)
  Eigen::VectorXd mu;      // equality multipliers
  double objective = 0.0;  // 1/2 z'Hz + q'z
  long iterations = 0;
  bool polished = false;
};

/// Generic dense box/equality QP solved by ADMM with a dense KKT
/// factorization, followed by an active-set polish. Throws NotConverged.
DenseQpResult solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& q,
                           const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                           const DenseQpOptions& options = {});

DenseQpResult dense_qp_solve(const DenseQpInstance& instance, const DenseQpOptions& options = {});

/// First-order optimality residuals of a candidate (x, lambda). The equality
/// multiplier mu is recovered by least squares from stationarity.
struct KktCertificate {
  double stationarity = 0.0;
  double equality = 0.0;
  double bound_violation = 0.0;
  double complementarity = 0.0;
  // The same residuals divided by problem norms.
  double stationarity_scaled = 0.0;
  double equality_scaled = 0.0;
  double complementarity_scaled = 0.0;
  Eigen::VectorXd mu;

  double max_scaled() const;
};

KktCertificate certify_kkt(const Eigen::MatrixXd& H, const Eigen::VectorXd& q,
                           const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& lambda);

KktCertificate certify_kkt(const DenseQpInstance& instance, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& lambda);

struct SteadyState {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
};

/// Admissible steady state closest to (x_r, u_r) in the T/S weighted norm,
/// over x = A x + B u with epsilon-tightened bounds. Throws Infeasible.
SteadyState optimal_steady_state(const LtiModel& model, const MpctParams& params,
                                 const Eigen::Ref<const Eigen::VectorXd>& x_r,
                                 const Eigen::Ref<const Eigen::VectorXd>& u_r);

}  // namespace mpct::oracle

namespace mpct::oracle {

/// Dense P = Gamma_hat + U_hat V_hat rebuilt from the structured factors.
Eigen::MatrixXd structured_p(const PrecomputedData& data);
/// Dense Gamma_tilde + U_tilde V_tilde rebuilt from the structured factors.
Eigen::MatrixXd structured_w(const PrecomputedData& data);
/// Dense G obtained by applying the structured operator to unit vectors.
Eigen::MatrixXd structured_g(const PrecomputedData& data);

struct CheckLine {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct CrossCheckOptions {
  std::uint64_t seed = 1;
  int kkt_samples = 20;
  double admm_tolerance = 1e-6;
  int admm_max_iter = 20000;
};

/// Structured solver against the dense oracle on one problem: transcription
/// of H, G, q, b and bounds; P and W reconstructions; random KKT solves; and
/// a full ADMM solve against the dense QP at (x0, x_r, u_r) in original units.
std::vector<CheckLine> cross_validate(const PrecomputedData& data,
                                      const Eigen::Ref<const Eigen::VectorXd>& x0,
                                      const Eigen::Ref<const Eigen::VectorXd>& x_r,
                                      const Eigen::Ref<const Eigen::VectorXd>& u_r,
                                      const CrossCheckOptions& options = {});

}  // namespace mpct::oracle
