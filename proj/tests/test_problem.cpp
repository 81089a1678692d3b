#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "mpct/error.hpp"
#include "mpct/kkt.hpp"
#include "mpct/oracle.hpp"
#include "mpct/problem.hpp"
#include "mpct/problem_io.hpp"
#include "support/instances.hpp"

using namespace mpct;
using namespace mpct::testing;

namespace {

ProblemDefinition integrator_definition() {
  return {integrator_model(), unit_params(1, 1, 2), {}};
}

}  // namespace

TEST_CASE("Gamma_hat of the integrator instance") {
  const auto data = build_problem(integrator_model(), unit_params(1, 1, 2));
  const Eigen::MatrixXd gamma = data.p_system.gamma().reconstruct();
  const Eigen::VectorXd diag = vec({2, 2, 2, 2, 4, 4});
  CHECK(max_abs(gamma - Eigen::MatrixXd(diag.asDiagonal())) < 1e-14);
  // Cross-check against the dense construction: Gamma_hat = H + rho I - U_hat V_hat.
  const Eigen::MatrixXd H = oracle::dense_cost_matrix(data.params);
  const auto& f = data.p_system.factors();
  CHECK(max_abs(H + Eigen::MatrixXd::Identity(6, 6) - f.dense_u() * f.dense_v() - gamma) < 1e-14);
}

TEST_CASE("U_hat V_hat couples each stage to the artificial reference with -Q, -R") {
  const auto data = build_problem(integrator_model(), unit_params(1, 1, 2));
  const auto& f = data.p_system.factors();
  const Eigen::MatrixXd UV = f.dense_u() * f.dense_v();
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(6, 6);
  for (Index k = 0; k < 2; ++k) {
    expected(2 * k, 4) = expected(4, 2 * k) = -1.0;
    expected(2 * k + 1, 5) = expected(5, 2 * k + 1) = -1.0;
  }
  CHECK(max_abs(UV - expected) == 0.0);
  CHECK(f.rank() == 4);
}

TEST_CASE("non-SPD weights are rejected and named") {
  MpctParams p = unit_params(1, 1, 2);
  p.Q.setZero();
  try {
    build_problem(integrator_model(), p);
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.matrix() == "Q");
  }
  p = unit_params(1, 1, 2);
  p.S(0, 0) = -1;
  try {
    build_problem(integrator_model(), p);
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.matrix() == "S");
  }
}

TEST_CASE("invalid dimensions and parameters") {
  LtiModel m = integrator_model();
  m.x_hi = vec({1, 1});
  CHECK_THROWS_AS(build_problem(m, unit_params(1, 1, 2)), DimensionMismatch);
  MpctParams p = unit_params(1, 1, 2);
  p.rho = 0;
  CHECK_THROWS_AS(build_problem(integrator_model(), p), Error);
  p = unit_params(1, 1, 1);
  CHECK_THROWS_AS(build_problem(integrator_model(), p), Error);
}

TEST_CASE("assemble_online: q and b") {
  LtiModel m;
  m.A = Eigen::MatrixXd(Eigen::Matrix2d{{0.9, 0.1}, {0.0, 0.8}});
  m.B = Eigen::MatrixXd::Ones(2, 1);
  m.x_lo = vec({-5, -5});
  m.x_hi = vec({5, 5});
  m.u_lo = vec({-1});
  m.u_hi = vec({1});
  MpctParams p = unit_params(2, 1, 3);
  p.T = 2 * Eigen::MatrixXd::Identity(2, 2);
  const auto data = build_problem(m, p);

  const auto zero = assemble_online(data, vec({0, 0}), vec({0, 0}), vec({0}));
  CHECK(zero.q.norm() == 0.0);

  const auto qp = assemble_online(data, vec({0.7, -0.1}), vec({1, 0}), vec({3}));
  CHECK(max_abs(qp.q.tail(3) - vec({-2, 0, -3})) == 0.0);
  CHECK(qp.q.head(qp.q.size() - 3).norm() == 0.0);
  CHECK(max_abs(qp.b.head(2) - vec({0.7, -0.1})) == 0.0);
  CHECK(qp.b.tail(qp.b.size() - 2).norm() == 0.0);

  CHECK_THROWS_AS(assemble_online(data, vec({0.7}), vec({1, 0}), vec({3})), DimensionMismatch);
  try {
    assemble_online(data, vec({std::nan(""), 0}), vec({1, 0}), vec({3}));
    FAIL("expected NonFiniteInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteInput);
  }
}

TEST_CASE("q is linear in the reference and b in the state") {
  Rng rng(4);
  const auto r = random_instance(rng, 3, 2, 4);
  const auto data = build_problem(r.model, r.params);
  const Eigen::VectorXd x1 = rng.vector(3), x2 = rng.vector(3);
  const Eigen::VectorXd u1 = rng.vector(2), u2 = rng.vector(2);
  const auto a = assemble_online(data, x1, x1, u1);
  const auto b = assemble_online(data, x2, x2, u2);
  const auto c = assemble_online(data, 2 * x1 - x2, 2 * x1 - x2, 2 * u1 - u2);
  CHECK(max_abs(c.q - (2 * a.q - b.q)) < 1e-12);
  CHECK(max_abs(c.b - (2 * a.b - b.b)) < 1e-12);
}

TEST_CASE("tightened bounds") {
  LtiModel m = integrator_model();
  MpctParams p = unit_params(1, 1, 3);
  p.epsilon = 0.1;
  auto bounds = tightened_bounds(m, p);
  CHECK(bounds.lo[6] == doctest::Approx(-0.9));
  CHECK(bounds.hi[6] == doctest::Approx(0.9));
  CHECK(bounds.lo[0] == -1.0);
  CHECK(bounds.hi[4] == 1.0);

  m.x_hi[0] = std::numeric_limits<double>::infinity();
  bounds = tightened_bounds(m, p);
  CHECK(std::isinf(bounds.hi[6]));
  CHECK(bounds.hi[6] > 0);

  p.epsilon = 1.5;
  m = integrator_model();
  try {
    tightened_bounds(m, p);
    FAIL("expected EmptyTightenedBox");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyTightenedBox);
  }
}

TEST_CASE("tightened input bound of the bundled instance") {
  LtiModel m;
  m.A = Eigen::MatrixXd::Identity(2, 2);
  m.B = Eigen::MatrixXd::Identity(2, 2);
  m.x_lo = vec({-1, -1});
  m.x_hi = vec({1, 1});
  m.u_lo = vec({-0.2, -0.2});
  m.u_hi = vec({0.2, 0.2});
  MpctParams p = unit_params(2, 2, 30);
  p.epsilon = 1e-6;
  const auto bounds = tightened_bounds(m, p);
  const Index us = 30 * 4 + 2;
  CHECK(bounds.hi[us] == doctest::Approx(0.199999).epsilon(1e-12));
  CHECK(bounds.hi[us + 1] == doctest::Approx(0.199999).epsilon(1e-12));
  CHECK(bounds.lo[us] == doctest::Approx(-0.199999).epsilon(1e-12));
}

TEST_CASE("dense reconstruction of P and W on random instances") {
  Rng rng(77);
  for (int t = 0; t < 25; ++t) {
    const Index nx = rng.integer(1, 4), nu = rng.integer(1, 3);
    const auto r = random_instance(rng, nx, nu, rng.integer(2, 5));
    const Index N = r.params.horizon;
    const auto data = build_problem(r.model, r.params);
    const Eigen::MatrixXd H = oracle::dense_cost_matrix(r.params);
    const Eigen::MatrixXd G = oracle::dense_constraint_matrix(r.model, N);
    const Eigen::MatrixXd P = H + r.params.rho * Eigen::MatrixXd::Identity(H.rows(), H.cols());
    CHECK(max_abs(oracle::structured_p(data) - P) <= 1e-12 * (1 + max_abs(P)));
    const Eigen::MatrixXd W = G * P.llt().solve(G.transpose());
    CHECK(max_abs(oracle::structured_w(data) - W) <= 1e-8 * max_abs(W));
    // Gamma_tilde is block tridiagonal: its factor bandwidth is 2 n_x - 1.
    CHECK(data.w_system.gamma().half_bandwidth() == gamma_tilde_bandwidth(nx));
  }
}

TEST_CASE("rank-deficient G is reported") {
  // A = 1, B = 0: the steady-state row (A - I) x_s + B u_s of G vanishes.
  LtiModel m = integrator_model();
  m.B.setZero();
  try {
    build_problem(m, unit_params(1, 1, 2));
    FAIL("expected RankDeficientG");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficientG);
  }
}

TEST_CASE("scaling: structured data in scaled units, results in original units") {
  Rng rng(12);
  const auto r = random_instance(rng, 2, 1, 4, false);
  Scaling s;
  s.state = vec({2.0, 0.5});
  s.input = vec({4.0});
  const auto plain = build_problem(r.model, r.params);
  const auto scaled = build_problem(r.model, r.params, s);
  CHECK(max_abs(scaled.scale_state(vec({1, 1})) - vec({2, 0.5})) == 0.0);
  CHECK(max_abs(scaled.unscale_input(vec({4}))) == doctest::Approx(1.0));
  // Same QP up to a change of variables: KKT solutions map onto each other.
  const auto qa = assemble_online(plain, r.x_t, r.x_r, r.u_r);
  const auto qb = assemble_online(scaled, r.x_t, r.x_r, r.u_r);
  const auto za = oracle::dense_qp_solve(oracle::dense_instance(plain.model, plain.params,
                                                                r.x_t, r.x_r, r.u_r));
  const auto zb = oracle::dense_qp_solve(oracle::dense_instance(
      scaled.model, scaled.params, scaled.scale_state(r.x_t), scaled.scale_state(r.x_r),
      scaled.scale_input(r.u_r)));
  Eigen::VectorXd d(za.z.size());
  for (Index k = 0; k < d.size(); k += 3) d.segment(k, 3) = vec({2.0, 0.5, 4.0});
  CHECK(max_abs(d.asDiagonal() * za.z - zb.z) < 1e-6);
  CHECK(max_abs(d.head(2).asDiagonal() * qa.b.head(2) - qb.b.head(2)) < 1e-15);
}

TEST_CASE("problem JSON round trip") {
  Rng rng(31);
  const auto r = random_instance(rng, 3, 2, 4);
  ProblemDefinition def{r.model, r.params, {}};
  const ProblemDefinition back = parse_problem(problem_to_json(def));
  CHECK(max_abs(back.model.A - def.model.A) == 0.0);
  CHECK(max_abs(back.params.T - def.params.T) == 0.0);
  CHECK(back.params.horizon == def.params.horizon);
  CHECK(back.params.rho == def.params.rho);
  for (Index i = 0; i < 3; ++i) {
    CHECK(back.model.x_hi[i] == def.model.x_hi[i]);
    CHECK(back.model.x_lo[i] == def.model.x_lo[i]);
  }
}

TEST_CASE("problem JSON errors") {
  nlohmann::json doc = problem_to_json(integrator_definition());
  doc["format"] = "something-else";
  CHECK_THROWS_AS(parse_problem(doc), Error);
  doc = problem_to_json(integrator_definition());
  doc["params"].erase("N");
  CHECK_THROWS_AS(parse_problem(doc), Error);
  doc = problem_to_json(integrator_definition());
  doc["model"]["A"] = {{1, 2}, {3}};
  CHECK_THROWS_AS(parse_problem(doc), Error);
  doc = problem_to_json(integrator_definition());
  doc["params"]["Q"] = {3.0};  // flat list = diagonal
  CHECK(parse_problem(doc).params.Q(0, 0) == 3.0);
  try {
    read_json_file("/nonexistent/problem.json");
    FAIL("expected Io");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("cache round trip reproduces the solver") {
  Rng rng(18);
  const auto r = random_instance(rng, 3, 2, 5);
  ProblemDefinition def{r.model, r.params, {}};
  const auto data = build_problem(r.model, r.params);
  const auto path = std::filesystem::temp_directory_path() / "mpct_cache_roundtrip.json";
  write_json_file(path, cache_to_json(def, data));
  ProblemDefinition def_back;
  const auto cached = load_precomputed(path, &def_back);
  std::filesystem::remove(path);
  CHECK(def_back.params.horizon == 5);
  const Eigen::VectorXd p = rng.vector(data.nz());
  const Eigen::VectorXd b = rng.vector(data.mz());
  const auto a = solve_kkt_system(data, p, b);
  const auto c = solve_kkt_system(cached, p, b);
  CHECK(max_abs(a.z - c.z) == 0.0);
  CHECK(max_abs(a.mu - c.mu) == 0.0);
}

TEST_CASE("bundled problem files load and precompute") {
  for (const char* name : {"ball_plate_like.json", "integrator.json", "mass_spring.json"}) {
    const auto path = std::filesystem::path(MPCT_DATA_DIR) / name;
    const ProblemDefinition def = load_problem(path);
    CHECK_NOTHROW(build_problem(def.model, def.params, def.scaling));
  }
}
