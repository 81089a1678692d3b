#include <doctest.h>

#include "mpct/error.hpp"
#include "mpct/kkt.hpp"
#include "mpct/oracle.hpp"
#include "mpct/semiband.hpp"
#include "support/instances.hpp"

using namespace mpct;
using namespace mpct::testing;

namespace {

// Dense Gamma + U V for a banded system.
Eigen::MatrixXd dense_of(const SymBandedMatrix& gamma, const DenseLowRank& f) {
  return gamma.to_dense() + f.U * f.V;
}

}  // namespace

TEST_CASE("U = 0 reduces to the plain banded solve") {
  Rng rng(1);
  const SymBandedMatrix gamma = random_banded_spd(rng, 10, 2);
  const auto L = banded_cholesky_factor(gamma);
  const BandedSemiSystem sys(L, DenseLowRank{Eigen::MatrixXd::Zero(10, 3), rng.gaussian(3, 10)});
  const Eigen::VectorXd d = rng.vector(10);
  CHECK(max_abs(sys.solve(d) - banded_solve(L, d)) == 0.0);
}

TEST_CASE("rank-one analytic case: (I + e1 e1') z = e1 gives z = e1 / 2") {
  const auto L = banded_cholesky_factor(SymBandedMatrix::from_dense(Eigen::MatrixXd::Identity(4, 4), 0));
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(4, 1);
  U(0, 0) = 1;
  const BandedSemiSystem sys(L, DenseLowRank{U, U.transpose()});
  const Eigen::VectorXd z = sys.solve(Eigen::VectorXd::Unit(4, 0));
  CHECK(max_abs(z - 0.5 * Eigen::VectorXd::Unit(4, 0)) < 1e-16);
}

TEST_CASE("random n=10 banded system with m=3 matches the dense solve") {
  Rng rng(2);
  const SymBandedMatrix gamma = random_banded_spd(rng, 10, 2);
  const DenseLowRank f{0.5 * rng.gaussian(10, 3), 0.5 * rng.gaussian(3, 10)};
  const BandedSemiSystem sys(banded_cholesky_factor(gamma), f);
  const Eigen::VectorXd d = rng.vector(10);
  const Eigen::VectorXd ref = dense_of(gamma, f).partialPivLu().solve(d);
  const Eigen::VectorXd z = sys.solve(d);
  CHECK(rel_inf_error(z, ref) < 1e-10);
  CHECK((dense_of(gamma, f) * z - d).lpNorm<Eigen::Infinity>() <= 1e-8 * (1 + d.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("singular small system is reported") {
  // Gamma = I, U = e1, V = -e1': I + V U = 0.
  const auto L = banded_cholesky_factor(SymBandedMatrix::from_dense(Eigen::MatrixXd::Identity(3, 3), 0));
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(3, 1);
  U(0, 0) = 1;
  try {
    BandedSemiSystem sys(L, DenseLowRank{U, -U.transpose()});
    FAIL("expected SingularSmallSystem");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularSmallSystem);
  }
}

TEST_CASE("workspace solve equals the allocating solve and tolerates reuse") {
  Rng rng(3);
  const SymBandedMatrix gamma = random_banded_spd(rng, 40, 5);
  const BandedSemiSystem sys(banded_cholesky_factor(gamma),
                             DenseLowRank{0.3 * rng.gaussian(40, 6), 0.3 * rng.gaussian(6, 40)});
  auto ws = sys.make_workspace();
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd d = rng.vector(40);
    CHECK(max_abs(solve_semibanded(sys, d, ws) - sys.solve(d)) == 0.0);
  }
  Eigen::VectorXd wrong(39);
  CHECK_THROWS_AS(sys.solve_in_place(wrong, ws), DimensionMismatch);
}

TEST_CASE("randomized semi-banded solves with banded and block-diagonal Gamma") {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const Index n = rng.integer(2, 200);
    const Index m = rng.integer(1, std::min<int>(12, static_cast<int>(n)));
    const double scale = 0.5 / std::sqrt(static_cast<double>(m));
    const DenseLowRank f{scale * rng.gaussian(n, m), scale * rng.gaussian(m, n)};
    const Eigen::VectorXd d = rng.vector(n, -5, 5);
    CAPTURE(n);
    CAPTURE(m);
    if (t % 2 == 0) {
      const SymBandedMatrix gamma = random_banded_spd(rng, n, std::min<Index>(n - 1, rng.integer(0, 8)));
      const BandedSemiSystem sys(banded_cholesky_factor(gamma), f);
      const Eigen::VectorXd ref = dense_of(gamma, f).partialPivLu().solve(d);
      CHECK(rel_inf_error(sys.solve(d), ref) < 1e-8);
    } else {
      const BlockDiagMatrix gamma = random_block_diag(rng, n, 5);
      const SemiBandedSystem<BlockDiagFactor, DenseLowRank> sys(block_diag_factor(gamma), f);
      const Eigen::VectorXd ref = (gamma.to_dense() + f.U * f.V).partialPivLu().solve(d);
      CHECK(rel_inf_error(sys.solve(d), ref) < 1e-8);
    }
  }
}

TEST_CASE("Woodbury identity holds densely") {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const Index n = rng.integer(2, 60);
    const Index m = rng.integer(1, std::min<int>(8, static_cast<int>(n)));
    const Eigen::MatrixXd gamma = random_banded_spd(rng, n, std::min<Index>(n - 1, 3)).to_dense();
    const Eigen::MatrixXd U = 0.4 * rng.gaussian(n, m);
    const Eigen::MatrixXd V = 0.4 * rng.gaussian(m, n);
    const Eigen::MatrixXd gi = gamma.inverse();
    const Eigen::MatrixXd lhs = (gamma + U * V).inverse();
    const Eigen::MatrixXd rhs =
        gi - gi * U * (Eigen::MatrixXd::Identity(m, m) + V * gi * U).inverse() * V * gi;
    CHECK(max_abs(lhs - rhs) <= 1e-9 * max_abs(lhs));
  }
}

TEST_CASE("P and W systems of the tracking problem match dense solves") {
  Rng rng(6);
  for (int t = 0; t < 40; ++t) {
    const auto r = random_instance(rng, rng.integer(1, 4), rng.integer(1, 3), rng.integer(2, 6));
    const auto data = build_problem(r.model, r.params);
    const Eigen::MatrixXd P = oracle::structured_p(data);
    const Eigen::MatrixXd W = oracle::structured_w(data);
    const Eigen::VectorXd dp = rng.vector(data.nz());
    const Eigen::VectorXd dw = rng.vector(data.mz());
    CHECK(rel_inf_error(data.p_system.solve(dp), P.partialPivLu().solve(dp)) < 1e-8);
    CHECK(rel_inf_error(data.w_system.solve(dw), W.partialPivLu().solve(dw)) < 1e-8);
  }
}

TEST_CASE("KKT solve: homogeneous system") {
  const auto data = build_problem(integrator_model(), unit_params(1, 1, 2));
  const auto sol = solve_kkt_system(data, Eigen::VectorXd::Zero(6), Eigen::VectorXd::Zero(4));
  CHECK(sol.z.norm() == 0.0);
  CHECK(sol.mu.norm() == 0.0);
}

TEST_CASE("KKT solve: integrator instance equals the dense saddle-point solve") {
  const auto data = build_problem(integrator_model(), unit_params(1, 1, 2));
  const auto qp = assemble_online(data, vec({0.5}), vec({1.0}), vec({0.0}));
  const Eigen::VectorXd p = -qp.q;
  const Eigen::VectorXd b = vec({0.5, 0, 0, 0});
  const auto inst = oracle::dense_instance(data.model, data.params, vec({0.5}), vec({1.0}), vec({0.0}));
  const auto dense = oracle::dense_kkt_solve(inst, p, b);
  const auto sol = solve_kkt_system(data, p, b);
  CHECK(rel_inf_error(sol.z, dense.z) < 1e-12);
  CHECK(rel_inf_error(sol.mu, dense.mu) < 1e-12);
}

TEST_CASE("KKT solve: residuals of both optimality equations on random instances") {
  Rng rng(7);
  for (int t = 0; t < 40; ++t) {
    const auto r = random_instance(rng, rng.integer(1, 4), rng.integer(1, 3), rng.integer(2, 8));
    const auto data = build_problem(r.model, r.params);
    const Eigen::VectorXd p = rng.vector(data.nz(), -10, 10);
    const Eigen::VectorXd b = rng.vector(data.mz(), -3, 3);
    KktWorkspace ws(data);
    Eigen::VectorXd z(data.nz()), mu(data.mz());
    solve_kkt_system(data, p, b, ws, z, mu);
    const Eigen::MatrixXd P = oracle::structured_p(data);
    const Eigen::VectorXd Gz = data.G.multiply(z);
    CHECK((Gz - b).lpNorm<Eigen::Infinity>() <= 1e-7 * (1 + b.lpNorm<Eigen::Infinity>()));
    CHECK((P * z + data.G.multiply_transpose(mu) + p).lpNorm<Eigen::Infinity>() <=
          1e-7 * (1 + p.lpNorm<Eigen::Infinity>()));
    const auto inst = oracle::dense_instance(data.model, data.params, r.x_t, r.x_r, r.u_r);
    CHECK(rel_inf_error(z, oracle::dense_kkt_solve(inst, p, b).z) < 1e-7);
  }
}

TEST_CASE("KKT solve rejects wrong sizes") {
  const auto data = build_problem(integrator_model(), unit_params(1, 1, 2));
  CHECK_THROWS_AS(solve_kkt_system(data, Eigen::VectorXd::Zero(5), Eigen::VectorXd::Zero(4)),
                  DimensionMismatch);
}
