#pragma once

#include <utility>

#include <Eigen/Dense>

#include "mpct/banded.hpp"
#include "mpct/block_diag.hpp"
#include "mpct/prediction_matrix.hpp"
#include "mpct/semiband.hpp"

namespace mpct {

/// Discrete-time plant x+ = A x + B u with box bounds. Bounds may hold +-inf.
struct LtiModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd x_lo, x_hi;
  Eigen::VectorXd u_lo, u_hi;

  Index state_dim() const noexcept { return A.rows(); }
  Index input_dim() const noexcept { return B.cols(); }

  /// Throws DimensionMismatch or InvalidArgument.
  void validate() const;
};

struct MpctParams {
  Eigen::MatrixXd Q, R, T, S;
  Index horizon = 0;
  double epsilon = 1e-6;
  double rho = 1.0;
  double eps_primal = 1e-4;
  double eps_dual = 1e-4;
  int max_iter = 4000;

  /// Dimension and sign checks plus a Cholesky test of Q, R, T and S.
  /// Throws NotPositiveDefinite naming the offending matrix.
  void validate(Index nx, Index nu) const;
};

/// Optional diagonal change of variables x' = Dx x, u' = Du u applied before
/// transcription. Empty vectors mean identity.
struct Scaling {
  Eigen::VectorXd state;
  Eigen::VectorXd input;

  bool is_identity() const noexcept { return state.size() == 0 && input.size() == 0; }
};

/// Returns the model and costs expressed in scaled coordinates.
std::pair<LtiModel, MpctParams> apply_scaling(const LtiModel& model,
                                              const MpctParams& params,
                                              const Scaling& scaling);

/// Per-sample vectors of the QP: linear cost q, equality right-hand side b
/// and stacked box bounds.
struct QpVectors {
  Eigen::VectorXd q;
  Eigen::VectorXd b;
  Eigen::VectorXd v_lo;
  Eigen::VectorXd v_hi;
};

struct StackedBounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

/// Stacks (x_lo, u_lo) N times followed by the epsilon-tightened artificial
/// reference block. Infinite entries stay infinite. Throws EmptyTightenedBox.
StackedBounds tightened_bounds(const LtiModel& model, const MpctParams& params);

/// The low-rank pair of P = Gamma_hat + U_hat V_hat, applied through
/// Y = -1_N^T (x) diag(Q, R) without forming U_hat or V_hat.
///
///   U_hat = [Y^T 0; 0 I],   V_hat = [0 I; Y 0]
struct CouplingFactors {
  Index nx = 0;
  Index nu = 0;
  Index horizon = 0;
  Eigen::MatrixXd stage_cost;  // diag(Q, R)

  Index size() const noexcept { return (horizon + 1) * (nx + nu); }
  Index rank() const noexcept { return 2 * (nx + nu); }
  void apply_u(const Eigen::Ref<const Eigen::VectorXd>& z2, Eigen::Ref<Eigen::VectorXd> out) const;
  void apply_v(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::MatrixXd dense_u() const;
  Eigen::MatrixXd dense_v() const;
};

using PSystem = SemiBandedSystem<BlockDiagFactor, CouplingFactors>;
using WSystem = BandedSemiSystem;

/// Everything the online iteration needs, produced once by build_problem and
/// read-only afterwards. `model` and `params` are stored in scaled
/// coordinates when a scaling is in effect.
struct PrecomputedData {
  LtiModel model;
  MpctParams params;
  Scaling scaling;
  PredictionMatrix G;
  StackedBounds bounds;
  PSystem p_system;  // P = H + rho I = Gamma_hat + U_hat V_hat
  WSystem w_system;  // W = G P^{-1} G^T = Gamma_tilde + U_tilde V_tilde

  Index nx() const noexcept { return model.state_dim(); }
  Index nu() const noexcept { return model.input_dim(); }
  Index horizon() const noexcept { return params.horizon; }
  Index nz() const noexcept { return (horizon() + 1) * (nx() + nu()); }
  Index mz() const noexcept { return (horizon() + 2) * nx(); }
  Index low_rank() const noexcept { return 2 * (nx() + nu()); }

  Eigen::VectorXd scale_state(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd scale_input(const Eigen::Ref<const Eigen::VectorXd>& u) const;
  Eigen::VectorXd unscale_state(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd unscale_input(const Eigen::Ref<const Eigen::VectorXd>& u) const;
};

/// Structural half bandwidth of Gamma_tilde = G Gamma_hat^{-1} G^T: it is
/// block tridiagonal with n_x x n_x blocks.
inline Index gamma_tilde_bandwidth(Index nx) { return 2 * nx - 1; }

/// Blocks Q + rho I, R + rho I (N times) then N Q + T + rho I, N R + S + rho I.
BlockDiagMatrix gamma_hat_blocks(const MpctParams& params);

/// Gamma_tilde assembled block by block from the inverse blocks of
/// Gamma_hat and the pattern of G.
SymBandedMatrix gamma_tilde(const LtiModel& model, const BlockDiagFactor& gamma_hat);

/// Offline phase: validates the data, factorizes Gamma_hat, Gamma_tilde and
/// the two small systems. Throws NotPositiveDefinite, RankDeficientG,
/// SingularSmallSystem, EmptyTightenedBox, DimensionMismatch.
PrecomputedData build_problem(const LtiModel& model, const MpctParams& params,
                              const Scaling& scaling = {});

/// Online vectors for the current state and reference, all in original
/// units. Throws DimensionMismatch or NonFiniteInput.
QpVectors assemble_online(const PrecomputedData& data,
                          const Eigen::Ref<const Eigen::VectorXd>& x_t,
                          const Eigen::Ref<const Eigen::VectorXd>& x_r,
                          const Eigen::Ref<const Eigen::VectorXd>& u_r);

}  // namespace mpct
