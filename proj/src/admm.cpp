#include "mpct/admm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mpct/error.hpp"

namespace mpct {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::NumericalError: return "NumericalError";
  }
  return "Unknown";
}

AdmmWorkspace::AdmmWorkspace(const PrecomputedData& data)
    : kkt(data), p(data.nz()), mu(data.mz()), v_prev(data.nz()) {}

void v_update(const Eigen::Ref<const Eigen::VectorXd>& z_next,
              const Eigen::Ref<const Eigen::VectorXd>& lambda, double rho,
              const Eigen::Ref<const Eigen::VectorXd>& v_lo,
              const Eigen::Ref<const Eigen::VectorXd>& v_hi, Eigen::Ref<Eigen::VectorXd> v) {
  const Index n = z_next.size();
  if (lambda.size() != n || v_lo.size() != n || v_hi.size() != n || v.size() != n) {
    throw DimensionMismatch("v_update: vector sizes differ");
  }
  const double inv_rho = 1.0 / rho;
  for (Index j = 0; j < n; ++j) {
    v[j] = std::min(std::max(z_next[j] + inv_rho * lambda[j], v_lo[j]), v_hi[j]);
  }
}

Eigen::VectorXd v_update(const Eigen::Ref<const Eigen::VectorXd>& z_next,
                         const Eigen::Ref<const Eigen::VectorXd>& lambda, double rho,
                         const Eigen::Ref<const Eigen::VectorXd>& v_lo,
                         const Eigen::Ref<const Eigen::VectorXd>& v_hi) {
  Eigen::VectorXd v(z_next.size());
  v_update(z_next, lambda, rho, v_lo, v_hi, v);
  return v;
}

Residuals residuals(const AdmmState& state, const Eigen::Ref<const Eigen::VectorXd>& prev_v) {
  if (state.z.size() != state.v.size() || prev_v.size() != state.v.size()) {
    throw DimensionMismatch("residuals: vector sizes differ");
  }
  if (state.v.size() == 0) return {};
  return {(state.z - state.v).lpNorm<Eigen::Infinity>(),
          (state.v - prev_v).lpNorm<Eigen::Infinity>()};
}

AdmmState cold_start(const PrecomputedData& data) {
  AdmmState s;
  s.z = Eigen::VectorXd::Zero(data.nz());
  s.v = Eigen::VectorXd::Zero(data.nz()).cwiseMax(data.bounds.lo).cwiseMin(data.bounds.hi);
  s.lambda = Eigen::VectorXd::Zero(data.nz());
  return s;
}

namespace {

void fill_report_outputs(const PrecomputedData& data, const AdmmState& state, SolveReport& r) {
  const Index nx = data.nx();
  const Index nu = data.nu();
  r.control_action = data.unscale_input(state.v.segment(nx, nu));
  r.artificial_state = data.unscale_state(state.v.segment(data.horizon() * (nx + nu), nx));
  r.artificial_input = data.unscale_input(state.v.tail(nu));
}

}  // namespace

SolveReport admm_solve(const PrecomputedData& data, const Eigen::Ref<const Eigen::VectorXd>& x_t,
                       const Eigen::Ref<const Eigen::VectorXd>& x_r,
                       const Eigen::Ref<const Eigen::VectorXd>& u_r, AdmmState& state,
                       AdmmWorkspace& ws, const AdmmOptions& options) {
  const Index nz = data.nz();
  if (state.v.size() != nz || state.lambda.size() != nz) {
    throw DimensionMismatch("admm_solve: warm state has wrong dimension");
  }
  if (!state.v.allFinite() || !state.lambda.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "admm_solve: warm state is not finite");
  }
  if (state.z.size() != nz) state.z = Eigen::VectorXd::Zero(nz);
  if (ws.p.size() != nz) ws = AdmmWorkspace(data);

  ws.qp = assemble_online(data, x_t, x_r, u_r);
  const double rho = data.params.rho;
  const double eps_p = options.eps_primal.value_or(data.params.eps_primal);
  const double eps_d = options.eps_dual.value_or(data.params.eps_dual);
  const int max_iter = options.max_iter.value_or(data.params.max_iter);

  // A warm state may come from a different box; keep v feasible from the start.
  state.v = state.v.cwiseMax(ws.qp.v_lo).cwiseMin(ws.qp.v_hi);

  SolveReport report;
  report.status = SolveStatus::MaxIterations;
  const auto t0 = std::chrono::steady_clock::now();
  int k = 0;
  while (k < max_iter) {
    ws.p = ws.qp.q + state.lambda - rho * state.v;
    solve_kkt_system(data, ws.p, ws.qp.b, ws.kkt, state.z, ws.mu);
    ws.v_prev = state.v;
    v_update(state.z, state.lambda, rho, ws.qp.v_lo, ws.qp.v_hi, state.v);
    state.lambda += rho * (state.z - state.v);
    ++k;

    const double primal = (state.z - state.v).lpNorm<Eigen::Infinity>();
    const double dual = (state.v - ws.v_prev).lpNorm<Eigen::Infinity>();
    report.primal_residual = primal;
    report.dual_residual = dual;
    if (!std::isfinite(primal) || !std::isfinite(dual) || !state.lambda.allFinite()) {
      report.status = SolveStatus::NumericalError;
      break;
    }
    double tol_p = eps_p;
    double tol_d = eps_d;
    if (options.relative_tolerance) {
      const double zn = state.z.lpNorm<Eigen::Infinity>();
      const double vn = state.v.lpNorm<Eigen::Infinity>();
      tol_p *= std::max({1.0, zn, vn});
      tol_d *= std::max(1.0, vn);
    }
    if (primal <= tol_p && dual <= tol_d) {
      report.status = SolveStatus::Converged;
      break;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  state.k += k;
  report.iterations = k;
  report.solve_time = std::chrono::duration<double>(t1 - t0).count();
  report.avg_iter_time = k > 0 ? report.solve_time / k : 0.0;
  fill_report_outputs(data, state, report);
  return report;
}

std::pair<SolveReport, AdmmState> admm_solve(const PrecomputedData& data,
                                             const Eigen::Ref<const Eigen::VectorXd>& x_t,
                                             const Eigen::Ref<const Eigen::VectorXd>& x_r,
                                             const Eigen::Ref<const Eigen::VectorXd>& u_r,
                                             const std::optional<AdmmState>& warm,
                                             const AdmmOptions& options) {
  AdmmState state = warm ? *warm : cold_start(data);
  AdmmWorkspace ws(data);
  SolveReport report = admm_solve(data, x_t, x_r, u_r, state, ws, options);
  return {std::move(report), std::move(state)};
}

}  // namespace mpct
