#include "mpct/problem.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mpct/error.hpp"

namespace mpct {
namespace {

void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

void check_square(const Eigen::MatrixXd& M, Index n, const char* name) {
  if (M.rows() != n || M.cols() != n) {
    throw DimensionMismatch(std::string(name) + " must be " + std::to_string(n) + "x" +
                            std::to_string(n));
  }
}

void check_spd(const Eigen::MatrixXd& M, const char* name) {
  if (!M.allFinite()) throw Error(ErrorCode::InvalidArgument, std::string(name) + " is not finite");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " is not symmetric");
  }
  Eigen::MatrixXd lower;
  Index row = 0;
  if (!dense_cholesky(M, kDefaultPivotFloor, lower, row)) {
    throw NotPositiveDefinite(name, -1, row);
  }
}

}  // namespace

void LtiModel::validate() const {
  const Index nx = A.rows();
  const Index nu = B.cols();
  if (nx == 0 || A.cols() != nx) throw DimensionMismatch("A must be square and non-empty");
  if (B.rows() != nx || nu == 0) throw DimensionMismatch("B must be n_x x n_u with n_u > 0");
  require(A.allFinite() && B.allFinite(), ErrorCode::InvalidArgument, "A and B must be finite");
  if (x_lo.size() != nx || x_hi.size() != nx) throw DimensionMismatch("state bounds must have n_x entries");
  if (u_lo.size() != nu || u_hi.size() != nu) throw DimensionMismatch("input bounds must have n_u entries");
  for (Index i = 0; i < nx; ++i) {
    require(x_lo[i] < x_hi[i], ErrorCode::InvalidArgument,
            "state bound " + std::to_string(i) + " requires x_lo < x_hi");
  }
  for (Index i = 0; i < nu; ++i) {
    require(u_lo[i] < u_hi[i], ErrorCode::InvalidArgument,
            "input bound " + std::to_string(i) + " requires u_lo < u_hi");
  }
}

void MpctParams::validate(Index nx, Index nu) const {
  check_square(Q, nx, "Q");
  check_square(T, nx, "T");
  check_square(R, nu, "R");
  check_square(S, nu, "S");
  check_spd(Q, "Q");
  check_spd(R, "R");
  check_spd(T, "T");
  check_spd(S, "S");
  require(horizon >= 2, ErrorCode::InvalidArgument, "horizon N must be >= 2");
  require(epsilon > 0.0 && std::isfinite(epsilon), ErrorCode::InvalidArgument, "epsilon must be > 0");
  require(rho > 0.0 && std::isfinite(rho), ErrorCode::InvalidArgument, "rho must be > 0");
  require(eps_primal > 0.0 && eps_dual > 0.0, ErrorCode::InvalidArgument,
          "exit tolerances must be > 0");
  require(max_iter >= 1, ErrorCode::InvalidArgument, "max_iter must be >= 1");
}

std::pair<LtiModel, MpctParams> apply_scaling(const LtiModel& model,
                                              const MpctParams& params,
                                              const Scaling& scaling) {
  if (scaling.is_identity()) return {model, params};
  const Index nx = model.state_dim();
  const Index nu = model.input_dim();
  const Eigen::VectorXd sx =
      scaling.state.size() ? scaling.state : Eigen::VectorXd::Ones(nx);
  const Eigen::VectorXd su =
      scaling.input.size() ? scaling.input : Eigen::VectorXd::Ones(nu);
  if (sx.size() != nx || su.size() != nu) throw DimensionMismatch("scaling vector sizes");
  require((sx.array() > 0.0).all() && (su.array() > 0.0).all() && sx.allFinite() && su.allFinite(),
          ErrorCode::InvalidArgument, "scaling entries must be positive and finite");

  const Eigen::VectorXd ix = sx.cwiseInverse();
  const Eigen::VectorXd iu = su.cwiseInverse();
  LtiModel m = model;
  m.A = sx.asDiagonal() * model.A * ix.asDiagonal();
  m.B = sx.asDiagonal() * model.B * iu.asDiagonal();
  m.x_lo = model.x_lo.cwiseProduct(sx);
  m.x_hi = model.x_hi.cwiseProduct(sx);
  m.u_lo = model.u_lo.cwiseProduct(su);
  m.u_hi = model.u_hi.cwiseProduct(su);

  MpctParams p = params;
  p.Q = ix.asDiagonal() * params.Q * ix.asDiagonal();
  p.T = ix.asDiagonal() * params.T * ix.asDiagonal();
  p.R = iu.asDiagonal() * params.R * iu.asDiagonal();
  p.S = iu.asDiagonal() * params.S * iu.asDiagonal();
  return {m, p};
}

StackedBounds tightened_bounds(const LtiModel& model, const MpctParams& params) {
  const Index nx = model.state_dim();
  const Index nu = model.input_dim();
  const Index nxu = nx + nu;
  const Index N = params.horizon;
  const double eps = params.epsilon;

  StackedBounds out;
  out.lo.resize((N + 1) * nxu);
  out.hi.resize((N + 1) * nxu);
  for (Index k = 0; k < N; ++k) {
    out.lo.segment(k * nxu, nx) = model.x_lo;
    out.lo.segment(k * nxu + nx, nu) = model.u_lo;
    out.hi.segment(k * nxu, nx) = model.x_hi;
    out.hi.segment(k * nxu + nx, nu) = model.u_hi;
  }
  // Adding or subtracting a finite epsilon leaves +-inf unchanged.
  auto tighten = [&](const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, Index offset,
                     const char* what) {
    for (Index i = 0; i < lo.size(); ++i) {
      const double l = lo[i] + eps;
      const double h = hi[i] - eps;
      if (!(l < h)) {
        throw Error(ErrorCode::EmptyTightenedBox,
                    std::string("tightened ") + what + " bound " + std::to_string(i) +
                        " is empty for epsilon=" + std::to_string(eps));
      }
      out.lo[offset + i] = l;
      out.hi[offset + i] = h;
    }
  };
  tighten(model.x_lo, model.x_hi, N * nxu, "state");
  tighten(model.u_lo, model.u_hi, N * nxu + nx, "input");
  return out;
}

void CouplingFactors::apply_u(const Eigen::Ref<const Eigen::VectorXd>& z2,
                              Eigen::Ref<Eigen::VectorXd> out) const {
  const Index nxu = nx + nu;
  const Eigen::VectorXd stage = -(stage_cost * z2.head(nxu));
  for (Index k = 0; k < horizon; ++k) out.segment(k * nxu, nxu) = stage;
  out.tail(nxu) = z2.tail(nxu);
}

void CouplingFactors::apply_v(const Eigen::Ref<const Eigen::VectorXd>& x,
                              Eigen::Ref<Eigen::VectorXd> out) const {
  const Index nxu = nx + nu;
  out.head(nxu) = x.tail(nxu);
  auto acc = out.tail(nxu);
  acc.setZero();
  for (Index k = 0; k < horizon; ++k) acc += x.segment(k * nxu, nxu);
  acc = -(stage_cost * acc);
}

Eigen::MatrixXd CouplingFactors::dense_u() const {
  const Index nxu = nx + nu;
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(size(), rank());
  for (Index k = 0; k < horizon; ++k) U.block(k * nxu, 0, nxu, nxu) = -stage_cost;
  U.block(horizon * nxu, nxu, nxu, nxu).setIdentity();
  return U;
}

Eigen::MatrixXd CouplingFactors::dense_v() const {
  const Index nxu = nx + nu;
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(rank(), size());
  V.block(0, horizon * nxu, nxu, nxu).setIdentity();
  for (Index k = 0; k < horizon; ++k) V.block(nxu, k * nxu, nxu, nxu) = -stage_cost;
  return V;
}

BlockDiagMatrix gamma_hat_blocks(const MpctParams& params) {
  const Index nx = params.Q.rows();
  const Index nu = params.R.rows();
  const double N = static_cast<double>(params.horizon);
  const Eigen::MatrixXd Ix = Eigen::MatrixXd::Identity(nx, nx);
  const Eigen::MatrixXd Iu = Eigen::MatrixXd::Identity(nu, nu);

  BlockDiagMatrix M;
  M.blocks.reserve(static_cast<std::size_t>(2 * (params.horizon + 1)));
  for (Index k = 0; k < params.horizon; ++k) {
    M.blocks.push_back(params.Q + params.rho * Ix);
    M.blocks.push_back(params.R + params.rho * Iu);
  }
  M.blocks.push_back(N * params.Q + params.T + params.rho * Ix);
  M.blocks.push_back(N * params.R + params.S + params.rho * Iu);
  return M;
}

SymBandedMatrix gamma_tilde(const LtiModel& model, const BlockDiagFactor& gamma_hat) {
  const Index nx = model.state_dim();
  const Index nu = model.input_dim();
  const Index stages = static_cast<Index>(gamma_hat.block_count() / 2);  // N + 1
  const Index N = stages - 1;
  const Eigen::MatrixXd& A = model.A;
  const Eigen::MatrixXd& B = model.B;
  const Eigen::MatrixXd AmI = A - Eigen::MatrixXd::Identity(nx, nx);

  auto inverse_block = [&](std::size_t b, Index dim) {
    Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(dim, dim);
    const auto& L = gamma_hat.block_factor(b);
    L.triangularView<Eigen::Lower>().solveInPlace(inv);
    L.triangularView<Eigen::Lower>().transpose().solveInPlace(inv);
    return inv;
  };
  std::vector<Eigen::MatrixXd> Xinv, Uinv;
  for (Index k = 0; k <= N; ++k) {
    Xinv.push_back(inverse_block(static_cast<std::size_t>(2 * k), nx));
    Uinv.push_back(inverse_block(static_cast<std::size_t>(2 * k + 1), nu));
  }

  const Index m = (N + 2) * nx;
  SymBandedMatrix M(m, gamma_tilde_bandwidth(nx));
  auto put_diag = [&](Index k, const Eigen::MatrixXd& D) {
    for (Index j = 0; j < nx; ++j)
      for (Index i = j; i < nx; ++i) M.lower(k * nx + i, k * nx + j) = D(i, j);
  };
  auto put_sub = [&](Index k, const Eigen::MatrixXd& E) {  // block (k, k-1)
    for (Index j = 0; j < nx; ++j)
      for (Index i = 0; i < nx; ++i) M.lower(k * nx + i, (k - 1) * nx + j) = E(i, j);
  };

  put_diag(0, Xinv[0]);
  for (Index k = 1; k <= N; ++k) {
    const Index p = k - 1;
    Eigen::MatrixXd D = A * Xinv[p] * A.transpose() + B * Uinv[p] * B.transpose() + Xinv[k];
    put_diag(k, 0.5 * (D + D.transpose()));
    put_sub(k, p == 0 ? Eigen::MatrixXd(A * Xinv[0]) : Eigen::MatrixXd(-A * Xinv[p]));
  }
  Eigen::MatrixXd D = AmI * Xinv[N] * AmI.transpose() + B * Uinv[N] * B.transpose();
  put_diag(N + 1, 0.5 * (D + D.transpose()));
  put_sub(N + 1, -AmI * Xinv[N]);
  return M;
}

PrecomputedData build_problem(const LtiModel& model_in, const MpctParams& params_in,
                              const Scaling& scaling) {
  model_in.validate();
  params_in.validate(model_in.state_dim(), model_in.input_dim());
  auto [model, params] = apply_scaling(model_in, params_in, scaling);

  PrecomputedData data;
  data.bounds = tightened_bounds(model, params);
  data.G = PredictionMatrix(model.A, model.B, params.horizon);

  BlockDiagFactor gamma_hat =
      block_diag_factor(gamma_hat_blocks(params), kDefaultPivotFloor, "gamma_hat");
  CouplingFactors coupling{model.state_dim(), model.input_dim(), params.horizon,
                           Eigen::MatrixXd::Zero(model.state_dim() + model.input_dim(),
                                                 model.state_dim() + model.input_dim())};
  coupling.stage_cost.topLeftCorner(model.state_dim(), model.state_dim()) = params.Q;
  coupling.stage_cost.bottomRightCorner(model.input_dim(), model.input_dim()) = params.R;

  BandedCholeskyFactor gamma_tilde_factor;
  try {
    gamma_tilde_factor = banded_cholesky_factor(gamma_tilde(model, gamma_hat));
  } catch (const NotPositiveDefinite& e) {
    throw Error(ErrorCode::RankDeficientG,
                "G does not have full row rank (gamma_tilde pivot at row " +
                    std::to_string(e.row()) + ")");
  }

  data.p_system = PSystem(gamma_hat, coupling);

  // U_tilde = -G Gamma_hat^{-1} U_hat (I + V_hat Gamma_hat^{-1} U_hat)^{-1}
  // V_tilde = V_hat Gamma_hat^{-1} G^T = (G Gamma_hat^{-1} V_hat^T)^T
  const Index m = coupling.rank();
  Eigen::MatrixXd gu = coupling.dense_u();
  gamma_hat.solve_columns_in_place(gu);
  const Eigen::MatrixXd small_inv =
      data.p_system.small().solve(Eigen::MatrixXd::Identity(m, m));
  Eigen::MatrixXd u_tilde = -(data.G.multiply_columns(gu) * small_inv);

  Eigen::MatrixXd gv = coupling.dense_v().transpose();
  gamma_hat.solve_columns_in_place(gv);
  Eigen::MatrixXd v_tilde = data.G.multiply_columns(gv).transpose();

  data.w_system = WSystem(std::move(gamma_tilde_factor),
                          DenseLowRank{std::move(u_tilde), std::move(v_tilde)});
  data.model = std::move(model);
  data.params = std::move(params);
  data.scaling = scaling;
  return data;
}

namespace {

Eigen::VectorXd scale_by(const Eigen::VectorXd& s, const Eigen::Ref<const Eigen::VectorXd>& x,
                         bool inverse) {
  if (s.size() == 0) return x;
  return inverse ? Eigen::VectorXd(x.cwiseQuotient(s)) : Eigen::VectorXd(x.cwiseProduct(s));
}

}  // namespace

Eigen::VectorXd PrecomputedData::scale_state(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return scale_by(scaling.state, x, false);
}
Eigen::VectorXd PrecomputedData::scale_input(const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return scale_by(scaling.input, u, false);
}
Eigen::VectorXd PrecomputedData::unscale_state(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return scale_by(scaling.state, x, true);
}
Eigen::VectorXd PrecomputedData::unscale_input(const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return scale_by(scaling.input, u, true);
}

QpVectors assemble_online(const PrecomputedData& data,
                          const Eigen::Ref<const Eigen::VectorXd>& x_t,
                          const Eigen::Ref<const Eigen::VectorXd>& x_r,
                          const Eigen::Ref<const Eigen::VectorXd>& u_r) {
  const Index nx = data.nx();
  const Index nu = data.nu();
  if (x_t.size() != nx || x_r.size() != nx || u_r.size() != nu) {
    throw DimensionMismatch("assemble_online: x(t), x_r must have n_x entries and u_r n_u");
  }
  if (!x_t.allFinite() || !x_r.allFinite() || !u_r.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "assemble_online: non-finite state or reference");
  }
  QpVectors out;
  out.q = Eigen::VectorXd::Zero(data.nz());
  out.q.segment(data.nz() - nx - nu, nx) = -(data.params.T * data.scale_state(x_r));
  out.q.tail(nu) = -(data.params.S * data.scale_input(u_r));
  out.b = Eigen::VectorXd::Zero(data.mz());
  out.b.head(nx) = data.scale_state(x_t);
  out.v_lo = data.bounds.lo;
  out.v_hi = data.bounds.hi;
  return out;
}

}  // namespace mpct
