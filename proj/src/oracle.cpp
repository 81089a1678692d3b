#include "mpct/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "mpct/admm.hpp"
#include "mpct/error.hpp"
#include "mpct/kkt.hpp"

namespace mpct::oracle {
namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

double matrix_inf_norm(const Eigen::MatrixXd& M) {
  return M.size() ? M.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
}

void check_size(Index n) {
  if (n > kMaxDenseSize) {
    throw Error(ErrorCode::InvalidArgument,
                "dense oracle limited to n_z <= " + std::to_string(kMaxDenseSize));
  }
}

}  // namespace

Eigen::MatrixXd dense_cost_matrix(const MpctParams& p) {
  const Index nx = p.Q.rows();
  const Index nu = p.R.rows();
  const Index N = p.horizon;
  const Index nxu = nx + nu;
  const Index n = (N + 1) * nxu;
  const Index xs = N * nxu;
  const Index us = xs + nx;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  // sum_i |x_i - x_s|_Q^2 + |u_i - u_s|_R^2 + |x_s|_T^2 + |u_s|_S^2 expanded.
  for (Index i = 0; i < N; ++i) {
    const Index xi = i * nxu;
    const Index ui = xi + nx;
    for (Index r = 0; r < nx; ++r) {
      for (Index c = 0; c < nx; ++c) {
        H(xi + r, xi + c) += p.Q(r, c);
        H(xi + r, xs + c) -= p.Q(r, c);
        H(xs + r, xi + c) -= p.Q(r, c);
        H(xs + r, xs + c) += p.Q(r, c);
      }
    }
    for (Index r = 0; r < nu; ++r) {
      for (Index c = 0; c < nu; ++c) {
        H(ui + r, ui + c) += p.R(r, c);
        H(ui + r, us + c) -= p.R(r, c);
        H(us + r, ui + c) -= p.R(r, c);
        H(us + r, us + c) += p.R(r, c);
      }
    }
  }
  for (Index r = 0; r < nx; ++r)
    for (Index c = 0; c < nx; ++c) H(xs + r, xs + c) += p.T(r, c);
  for (Index r = 0; r < nu; ++r)
    for (Index c = 0; c < nu; ++c) H(us + r, us + c) += p.S(r, c);
  return H;
}

Eigen::MatrixXd dense_constraint_matrix(const LtiModel& model, Index N) {
  const Index nx = model.A.rows();
  const Index nu = model.B.cols();
  const Index nxu = nx + nu;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero((N + 2) * nx, (N + 1) * nxu);
  for (Index r = 0; r < nx; ++r) G(r, r) = 1.0;  // x_0 = x(t)
  // x_{i+1} = A x_i + B u_i for i = 0..N-2, then x_s = A x_{N-1} + B u_{N-1},
  // written as A x_i + B u_i - x_{i+1} = 0 with x_N := x_s.
  for (Index i = 0; i < N; ++i) {
    const Index row = (i + 1) * nx;
    const Index xi = i * nxu;
    const Index ui = xi + nx;
    const Index next = (i + 1) * nxu;  // x_{i+1}, or x_s when i = N-1
    for (Index r = 0; r < nx; ++r) {
      for (Index c = 0; c < nx; ++c) G(row + r, xi + c) = model.A(r, c);
      for (Index c = 0; c < nu; ++c) G(row + r, ui + c) = model.B(r, c);
      G(row + r, next + r) = -1.0;
    }
  }
  // x_s = A x_s + B u_s  ->  (A - I) x_s + B u_s = 0
  const Index row = (N + 1) * nx;
  const Index xs = N * nxu;
  for (Index r = 0; r < nx; ++r) {
    for (Index c = 0; c < nx; ++c) G(row + r, xs + c) = model.A(r, c) - (r == c ? 1.0 : 0.0);
    for (Index c = 0; c < nu; ++c) G(row + r, xs + nx + c) = model.B(r, c);
  }
  return G;
}

DenseQpInstance dense_instance(const LtiModel& model, const MpctParams& params,
                               const Eigen::Ref<const Eigen::VectorXd>& x_t,
                               const Eigen::Ref<const Eigen::VectorXd>& x_r,
                               const Eigen::Ref<const Eigen::VectorXd>& u_r) {
  const Index nx = model.A.rows();
  const Index nu = model.B.cols();
  const Index N = params.horizon;
  const Index nxu = nx + nu;
  const Index n = (N + 1) * nxu;
  check_size(n);
  if (x_t.size() != nx || x_r.size() != nx || u_r.size() != nu) {
    throw DimensionMismatch("dense_instance: state/reference sizes");
  }

  DenseQpInstance inst;
  inst.rho = params.rho;
  inst.H = dense_cost_matrix(params);
  inst.G = dense_constraint_matrix(model, N);
  inst.q = Eigen::VectorXd::Zero(n);
  inst.q.segment(N * nxu, nx) = -(params.T * x_r);
  inst.q.segment(N * nxu + nx, nu) = -(params.S * u_r);
  inst.b = Eigen::VectorXd::Zero((N + 2) * nx);
  inst.b.head(nx) = x_t;

  inst.v_lo.resize(n);
  inst.v_hi.resize(n);
  for (Index i = 0; i <= N; ++i) {
    const double shrink = (i == N) ? params.epsilon : 0.0;
    for (Index r = 0; r < nx; ++r) {
      inst.v_lo[i * nxu + r] = model.x_lo[r] + shrink;
      inst.v_hi[i * nxu + r] = model.x_hi[r] - shrink;
    }
    for (Index r = 0; r < nu; ++r) {
      inst.v_lo[i * nxu + nx + r] = model.u_lo[r] + shrink;
      inst.v_hi[i * nxu + nx + r] = model.u_hi[r] - shrink;
    }
  }
  return inst;
}

KktPair dense_kkt_solve(const DenseQpInstance& inst, const Eigen::Ref<const Eigen::VectorXd>& p,
                        const Eigen::Ref<const Eigen::VectorXd>& b) {
  const Index n = inst.H.rows();
  const Index m = inst.G.rows();
  if (p.size() != n || b.size() != m || inst.G.cols() != n) {
    throw DimensionMismatch("dense_kkt_solve: p must have n_z and b m_z entries");
  }
  check_size(n);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = inst.H + inst.rho * Eigen::MatrixXd::Identity(n, n);
  K.topRightCorner(n, m) = inst.G.transpose();
  K.bottomLeftCorner(m, n) = inst.G;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularKkt, "dense KKT matrix is singular");
  Eigen::VectorXd rhs(n + m);
  rhs << -p, b;
  const Eigen::VectorXd sol = lu.solve(rhs);
  return {sol.head(n), sol.tail(m)};
}

namespace {

// Equality QP with the variables in `fixed` pinned to `values`. Returns false
// when the reduced KKT matrix is singular.
bool solve_on_active_set(const Eigen::MatrixXd& H, const Eigen::VectorXd& q,
                         const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                         const std::vector<Index>& fixed, const Eigen::VectorXd& values,
                         Eigen::VectorXd& x, Eigen::VectorXd& mu, Eigen::VectorXd& lambda) {
  const Index n = H.rows();
  const Index m = G.rows();
  const Index a = static_cast<Index>(fixed.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m + a, n + m + a);
  K.topLeftCorner(n, n) = H;
  K.block(0, n, n, m) = G.transpose();
  K.block(n, 0, m, n) = G;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m + a);
  rhs.head(n) = -q;
  rhs.segment(n, m) = b;
  for (Index k = 0; k < a; ++k) {
    const Index j = fixed[static_cast<std::size_t>(k)];
    K(j, n + m + k) = 1.0;
    K(n + m + k, j) = 1.0;
    rhs[n + m + k] = values[j];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible()) return false;
  const Eigen::VectorXd sol = lu.solve(rhs);
  x = sol.head(n);
  mu = sol.segment(n, m);
  lambda = Eigen::VectorXd::Zero(n);
  for (Index k = 0; k < a; ++k) lambda[fixed[static_cast<std::size_t>(k)]] = sol[n + m + k];
  return sol.allFinite();
}

}  // namespace

DenseQpResult solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& q,
                           const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                           const DenseQpOptions& opt) {
  const Index n = H.rows();
  const Index m = G.rows();
  if (H.cols() != n || q.size() != n || G.cols() != n || b.size() != m || lo.size() != n ||
      hi.size() != n) {
    throw DimensionMismatch("solve_box_qp: inconsistent sizes");
  }
  check_size(n);
  const double rho = opt.rho;

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = H + rho * Eigen::MatrixXd::Identity(n, n);
  K.topRightCorner(n, m) = G.transpose();
  K.bottomLeftCorner(m, n) = G;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularKkt, "dense QP: KKT matrix is singular");

  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v = z.cwiseMax(lo).cwiseMin(hi);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd rhs(n + m);
  rhs.tail(m) = b;

  DenseQpResult res;
  bool converged = false;
  long k = 0;
  for (; k < opt.max_iter; ++k) {
    rhs.head(n) = -(q + lambda - rho * v);
    const Eigen::VectorXd sol = lu.solve(rhs);
    z = sol.head(n);
    mu = sol.tail(m);
    const Eigen::VectorXd v_old = v;
    v = (z + lambda / rho).cwiseMax(lo).cwiseMin(hi);
    lambda += rho * (z - v);
    const double rp = (z - v).lpNorm<Eigen::Infinity>();
    const double rd = (v - v_old).lpNorm<Eigen::Infinity>();
    if (!std::isfinite(rp) || !std::isfinite(rd)) break;
    if (rp <= opt.tolerance && rd <= opt.tolerance) {
      converged = true;
      ++k;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::NotConverged,
                "dense QP oracle did not converge in " + std::to_string(k) + " iterations");
  }
  res.iterations = k;
  res.z = v;
  res.lambda = lambda;
  res.mu = mu;

  if (opt.polish) {
    std::vector<Index> fixed;
    for (Index j = 0; j < n; ++j) {
      if (v[j] == lo[j] || v[j] == hi[j]) fixed.push_back(j);
    }
    Eigen::VectorXd xp, mup, lamp;
    if (solve_on_active_set(H, q, G, b, fixed, v, xp, mup, lamp)) {
      const double viol = std::max((lo - xp).maxCoeff(), (xp - hi).maxCoeff());
      bool signs_ok = true;
      for (Index j : fixed) {
        const bool at_hi = v[j] == hi[j];
        if ((at_hi && lamp[j] < -1e-9) || (!at_hi && lamp[j] > 1e-9)) signs_ok = false;
      }
      const auto before = certify_kkt(H, q, G, b, lo, hi, res.z, res.lambda);
      const Eigen::VectorXd xc = xp.cwiseMax(lo).cwiseMin(hi);
      const auto after = certify_kkt(H, q, G, b, lo, hi, xc, lamp);
      if (viol <= 1e-10 && signs_ok && after.max_scaled() <= before.max_scaled()) {
        res.z = xc;
        res.lambda = lamp;
        res.mu = mup;
        res.polished = true;
      }
    }
  }
  res.objective = 0.5 * res.z.dot(H * res.z) + q.dot(res.z);
  return res;
}

DenseQpResult dense_qp_solve(const DenseQpInstance& inst, const DenseQpOptions& options) {
  return solve_box_qp(inst.H, inst.q, inst.G, inst.b, inst.v_lo, inst.v_hi, options);
}

double KktCertificate::max_scaled() const {
  return std::max({stationarity_scaled, equality_scaled, complementarity_scaled, bound_violation});
}

KktCertificate certify_kkt(const Eigen::MatrixXd& H, const Eigen::VectorXd& q,
                           const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) {
  const Index n = H.rows();
  if (x.size() != n || lambda.size() != n) throw DimensionMismatch("certify_kkt: sizes");
  KktCertificate c;
  const Eigen::VectorXd grad = H * x + q + lambda;
  c.mu = G.transpose().colPivHouseholderQr().solve(-grad);
  const Eigen::VectorXd gt_mu = G.transpose() * c.mu;
  c.stationarity = inf_norm(grad + gt_mu);
  c.equality = inf_norm(G * x - b);
  c.bound_violation = std::max({0.0, (lo - x).maxCoeff(), (x - hi).maxCoeff()});
  double comp = 0.0;
  for (Index j = 0; j < n; ++j) {
    const double l = lambda[j];
    if (l > 0.0) {
      comp = std::max(comp, std::isfinite(hi[j]) ? l * std::abs(hi[j] - x[j]) : l);
    } else if (l < 0.0) {
      comp = std::max(comp, std::isfinite(lo[j]) ? -l * std::abs(x[j] - lo[j]) : -l);
    }
  }
  c.complementarity = comp;

  const double xn = inf_norm(x);
  const double ln = inf_norm(lambda);
  c.stationarity_scaled =
      c.stationarity / (1.0 + std::max({matrix_inf_norm(H) * xn, inf_norm(q), ln, inf_norm(gt_mu)}));
  c.equality_scaled = c.equality / (1.0 + std::max(matrix_inf_norm(G) * xn, inf_norm(b)));
  c.complementarity_scaled = c.complementarity / (1.0 + ln * (1.0 + xn));
  return c;
}

KktCertificate certify_kkt(const DenseQpInstance& inst, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& lambda) {
  return certify_kkt(inst.H, inst.q, inst.G, inst.b, inst.v_lo, inst.v_hi, x, lambda);
}

SteadyState optimal_steady_state(const LtiModel& model, const MpctParams& params,
                                 const Eigen::Ref<const Eigen::VectorXd>& x_r,
                                 const Eigen::Ref<const Eigen::VectorXd>& u_r) {
  const Index nx = model.A.rows();
  const Index nu = model.B.cols();
  if (x_r.size() != nx || u_r.size() != nu) throw DimensionMismatch("optimal_steady_state: sizes");
  const Index n = nx + nu;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  H.topLeftCorner(nx, nx) = params.T;
  H.bottomRightCorner(nu, nu) = params.S;
  Eigen::VectorXd q(n);
  q << -(params.T * x_r), -(params.S * u_r);
  Eigen::MatrixXd G(nx, n);
  G << model.A - Eigen::MatrixXd::Identity(nx, nx), model.B;
  Eigen::VectorXd lo(n), hi(n);
  lo << model.x_lo.array() + params.epsilon, model.u_lo.array() + params.epsilon;
  hi << model.x_hi.array() - params.epsilon, model.u_hi.array() - params.epsilon;
  if (((hi - lo).array() <= 0.0).any()) {
    throw Error(ErrorCode::Infeasible, "tightened steady-state box is empty");
  }
  DenseQpOptions opt;
  opt.max_iter = 200'000;
  try {
    const auto res = solve_box_qp(H, q, G, Eigen::VectorXd::Zero(nx), lo, hi, opt);
    return {res.z.head(nx), res.z.tail(nu)};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotConverged) {
      throw Error(ErrorCode::Infeasible, "no admissible steady state found");
    }
    throw;
  }
}

}  // namespace mpct::oracle


namespace mpct::oracle {

Eigen::MatrixXd structured_p(const PrecomputedData& data) {
  const auto& sys = data.p_system;
  return sys.gamma().reconstruct() + sys.factors().dense_u() * sys.factors().dense_v();
}

Eigen::MatrixXd structured_w(const PrecomputedData& data) {
  const auto& sys = data.w_system;
  const Eigen::MatrixXd L = sys.gamma().to_dense();
  return L * L.transpose() + sys.factors().U * sys.factors().V;
}

Eigen::MatrixXd structured_g(const PrecomputedData& data) {
  return data.G.multiply_columns(Eigen::MatrixXd::Identity(data.nz(), data.nz()));
}

namespace {

double max_abs(const Eigen::MatrixXd& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

CheckLine line(std::string name, double value, double tol) {
  return {std::move(name), value, tol, value <= tol};
}

}  // namespace

std::vector<CheckLine> cross_validate(const PrecomputedData& data,
                                      const Eigen::Ref<const Eigen::VectorXd>& x0,
                                      const Eigen::Ref<const Eigen::VectorXd>& x_r,
                                      const Eigen::Ref<const Eigen::VectorXd>& u_r,
                                      const CrossCheckOptions& opt) {
  check_size(data.nz());
  std::vector<CheckLine> out;
  const DenseQpInstance inst = dense_instance(data.model, data.params, data.scale_state(x0),
                                              data.scale_state(x_r), data.scale_input(u_r));
  const Index n = data.nz();
  const Eigen::MatrixXd P = inst.H + inst.rho * Eigen::MatrixXd::Identity(n, n);

  out.push_back(line("transcription H (P = Gamma_hat + U_hat V_hat)",
                     max_abs(structured_p(data) - P) / (1.0 + max_abs(P)), 1e-12));
  out.push_back(line("transcription G", max_abs(structured_g(data) - inst.G), 1e-12));

  const QpVectors qp = assemble_online(data, x0, x_r, u_r);
  double vec_err = std::max(max_abs(qp.q - inst.q), max_abs(qp.b - inst.b));
  for (Index j = 0; j < n; ++j) {
    const bool same = (qp.v_lo[j] == inst.v_lo[j] || std::abs(qp.v_lo[j] - inst.v_lo[j]) <= 1e-12) &&
                      (qp.v_hi[j] == inst.v_hi[j] || std::abs(qp.v_hi[j] - inst.v_hi[j]) <= 1e-12);
    if (!same) vec_err = std::numeric_limits<double>::infinity();
  }
  out.push_back(line("transcription q, b, bounds", vec_err, 1e-12));

  const Eigen::MatrixXd W = inst.G * P.llt().solve(inst.G.transpose());
  out.push_back(line("W = Gamma_tilde + U_tilde V_tilde",
                     max_abs(structured_w(data) - W) / (1.0 + max_abs(W)), 1e-8));

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  auto randn = [&](Index k) {
    Eigen::VectorXd v(k);
    for (Index i = 0; i < k; ++i) v[i] = gauss(rng);
    return v;
  };
  double kkt_err = 0.0;
  for (int s = 0; s < opt.kkt_samples; ++s) {
    const Eigen::VectorXd p = randn(n);
    const Eigen::VectorXd b = randn(data.mz());
    const auto structured = solve_kkt_system(data, p, b);
    const auto dense = dense_kkt_solve(inst, p, b);
    kkt_err = std::max(kkt_err, (structured.z - dense.z).lpNorm<Eigen::Infinity>() /
                                    std::max(1.0, dense.z.lpNorm<Eigen::Infinity>()));
  }
  out.push_back(line("KKT solve vs dense saddle point (relative)", kkt_err, 1e-7));

  AdmmOptions aopt;
  aopt.eps_primal = opt.admm_tolerance;
  aopt.eps_dual = opt.admm_tolerance;
  aopt.max_iter = opt.admm_max_iter;
  const auto [rep, state] = admm_solve(data, x0, x_r, u_r, std::nullopt, aopt);
  out.push_back(line("ADMM converged", rep.status == SolveStatus::Converged ? 0.0 : 1.0, 0.0));
  try {
    const DenseQpResult ref = dense_qp_solve(inst);
    out.push_back(line("ADMM vs dense QP solution", (state.v - ref.z).lpNorm<Eigen::Infinity>(), 1e-4));
    const KktCertificate cert = certify_kkt(inst, state.v, state.lambda);
    out.push_back(line("ADMM KKT certificate (scaled)", cert.max_scaled(), 1e-6));
  } catch (const Error& e) {
    out.push_back(line(std::string("dense QP oracle: ") + e.what(), 1.0, 0.0));
  }
  return out;
}

}  // namespace mpct::oracle
