#include <doctest.h>

#include "mpct/banded.hpp"
#include "mpct/block_diag.hpp"
#include "mpct/error.hpp"
#include "mpct/prediction_matrix.hpp"
#include "mpct/small_dense.hpp"
#include "support/instances.hpp"

using namespace mpct;
using namespace mpct::testing;

TEST_CASE("banded Cholesky of the identity is the identity") {
  const SymBandedMatrix I = SymBandedMatrix::from_dense(Eigen::MatrixXd::Identity(5, 5), 0);
  const auto L = banded_cholesky_factor(I);
  CHECK(max_abs(L.to_dense() - Eigen::MatrixXd::Identity(5, 5)) == 0.0);
}

TEST_CASE("tridiagonal factor equals the dense Cholesky factor") {
  Eigen::MatrixXd M(3, 3);
  M << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  const auto L = banded_cholesky_factor(SymBandedMatrix::from_dense(M, 1));
  const Eigen::MatrixXd dense = M.llt().matrixL();
  CHECK(max_abs(L.to_dense() - dense) < 1e-15);
  CHECK(L.half_bandwidth() == 1);
}

TEST_CASE("negative pivot reports its row") {
  const Eigen::MatrixXd M = Eigen::Vector3d(1, -1, 1).asDiagonal();
  try {
    banded_cholesky_factor(SymBandedMatrix::from_dense(M, 0));
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.row() == 1);
    CHECK(e.code() == ErrorCode::NotPositiveDefinite);
  }
}

TEST_CASE("pivot below the floor is rejected") {
  Eigen::MatrixXd M(2, 2);
  M << 1, 1, 1, 1 + 1e-15;
  CHECK_THROWS_AS(banded_cholesky_factor(SymBandedMatrix::from_dense(M, 1)), NotPositiveDefinite);
}

TEST_CASE("banded_solve small cases") {
  const auto I = banded_cholesky_factor(SymBandedMatrix::from_dense(Eigen::MatrixXd::Identity(2, 2), 0));
  CHECK(max_abs(banded_solve(I, vec({3, 4})) - vec({3, 4})) == 0.0);

  const Eigen::MatrixXd D = Eigen::Vector2d(4, 9).asDiagonal();
  const auto L = banded_cholesky_factor(SymBandedMatrix::from_dense(D, 0));
  CHECK(max_abs(banded_solve(L, vec({8, 18})) - vec({2, 2})) < 1e-15);

  CHECK_THROWS_AS(banded_solve(L, vec({1, 2, 3})), DimensionMismatch);
}

TEST_CASE("banded_solve matches a dense LU solve, n=12 bw=3") {
  Rng rng(7);
  const SymBandedMatrix M = random_banded_spd(rng, 12, 3);
  const Eigen::VectorXd d = rng.vector(12);
  const Eigen::VectorXd ref = M.to_dense().partialPivLu().solve(d);
  CHECK(rel_inf_error(banded_solve(banded_cholesky_factor(M), d), ref) < 1e-12);
}

TEST_CASE("randomized: banded solve equals dense solve, n <= 200, bw 0..10") {
  Rng rng(314);
  for (int t = 0; t < 200; ++t) {
    const Index n = rng.integer(1, 200);
    const Index bw = std::min<Index>(n - 1, rng.integer(0, 10));
    const SymBandedMatrix M = random_banded_spd(rng, n, bw);
    const auto L = banded_cholesky_factor(M);
    CHECK(L.half_bandwidth() <= bw);
    const Eigen::VectorXd d = rng.vector(n, -10, 10);
    const Eigen::VectorXd x = banded_solve(L, d);
    const Eigen::VectorXd ref = M.to_dense().llt().solve(d);
    CAPTURE(n);
    CAPTURE(bw);
    CHECK(rel_inf_error(x, ref) < 1e-9);
    CHECK((M.multiply(x) - d).lpNorm<Eigen::Infinity>() <= 1e-9 * (1 + d.lpNorm<Eigen::Infinity>()));
    // L L' reproduces M.
    const Eigen::MatrixXd Ld = L.to_dense();
    CHECK(max_abs(Ld * Ld.transpose() - M.to_dense()) <= 1e-12 * max_abs(M.to_dense()));
  }
}

TEST_CASE("multi-column banded solve equals column-by-column") {
  Rng rng(3);
  const SymBandedMatrix M = random_banded_spd(rng, 30, 4);
  const auto L = banded_cholesky_factor(M);
  Eigen::MatrixXd X = rng.gaussian(30, 5);
  const Eigen::MatrixXd X0 = X;
  L.solve_columns_in_place(X);
  for (Index c = 0; c < 5; ++c) CHECK(max_abs(X.col(c) - banded_solve(L, X0.col(c))) == 0.0);
}

TEST_CASE("SymBandedMatrix rejects a bandwidth not below n") {
  CHECK_THROWS_AS(SymBandedMatrix(3, 3), Error);
  CHECK_THROWS_AS(SymBandedMatrix(3, -1), Error);
}

TEST_CASE("block-diagonal solve small cases") {
  BlockDiagMatrix M;
  M.blocks = {Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::MatrixXd::Constant(1, 1, 3.0)};
  CHECK(max_abs(block_diag_solve(block_diag_factor(M), vec({4, 9})) - vec({2, 3})) < 1e-15);

  BlockDiagMatrix half;
  half.blocks = {0.5 * Eigen::MatrixXd::Identity(2, 2), 0.5 * Eigen::MatrixXd::Identity(3, 3)};
  const Eigen::VectorXd d = vec({1, -2, 3.5, 0.25, 7});
  CHECK(rel_inf_error(block_diag_solve(block_diag_factor(half), d), 2 * d) < 1e-15);
}

TEST_CASE("block-diagonal solve with {Q + rho I, R + rho I} matches dense") {
  Eigen::MatrixXd Q(2, 2);
  Q << 2, 1, 1, 2;
  BlockDiagMatrix M;
  M.blocks = {Q + Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Constant(1, 1, 2.0)};
  Rng rng(1);
  const Eigen::VectorXd d = rng.vector(3);
  const Eigen::VectorXd ref = M.to_dense().partialPivLu().solve(d);
  CHECK(rel_inf_error(block_diag_solve(block_diag_factor(M), d), ref) < 1e-14);
}

TEST_CASE("block-diagonal failure names the block and row") {
  BlockDiagMatrix M;
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  M.blocks = {Eigen::MatrixXd::Identity(2, 2), bad};
  try {
    block_diag_factor(M, kDefaultPivotFloor, "gamma_hat");
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.matrix() == "gamma_hat");
    CHECK(e.block() == 1);
    CHECK(e.row() == 1);
  }
}

TEST_CASE("size-one blocks behave like a bandwidth-0 banded solve") {
  Rng rng(17);
  BlockDiagMatrix M;
  for (int i = 0; i < 20; ++i) M.blocks.push_back(Eigen::MatrixXd::Constant(1, 1, rng.uniform(0.1, 4)));
  const Eigen::VectorXd d = rng.vector(20);
  const auto banded = banded_cholesky_factor(SymBandedMatrix::from_dense(M.to_dense(), 0));
  CHECK(max_abs(block_diag_solve(block_diag_factor(M), d) - banded_solve(banded, d)) < 1e-15);
}

TEST_CASE("randomized block-diagonal solves and reconstruction") {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const Index n = rng.integer(1, 80);
    const BlockDiagMatrix M = random_block_diag(rng, n, 6);
    const auto F = block_diag_factor(M);
    const Eigen::VectorXd d = rng.vector(n);
    CHECK(rel_inf_error(block_diag_solve(F, d), M.to_dense().llt().solve(d)) < 1e-10);
    CHECK(max_abs(F.reconstruct() - M.to_dense()) < 1e-12 * (1 + max_abs(M.to_dense())));
  }
}

TEST_CASE("G products: zero, hand example, adjointness and dense agreement") {
  const PredictionMatrix G1(Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1), 2);
  CHECK(G1.multiply(Eigen::VectorXd::Zero(6)).norm() == 0.0);
  CHECK(max_abs(G1.multiply(Eigen::VectorXd::Ones(6)) - vec({1, 1, 1, 1})) == 0.0);

  Rng rng(21);
  for (int t = 0; t < 30; ++t) {
    const Index nx = rng.integer(1, 4);
    const Index nu = rng.integer(1, 3);
    const Index N = rng.integer(2, 8);
    const Eigen::MatrixXd A = rng.gaussian(nx, nx);
    const Eigen::MatrixXd B = rng.gaussian(nx, nu);
    const PredictionMatrix G(A, B, N);
    const Eigen::MatrixXd dense = [&] {
      // Independent column-by-column assembly of the pattern.
      Eigen::MatrixXd D = Eigen::MatrixXd::Zero((N + 2) * nx, (N + 1) * (nx + nu));
      D.topLeftCorner(nx, nx).setIdentity();
      for (Index k = 0; k < N; ++k) {
        D.block((k + 1) * nx, k * (nx + nu), nx, nx) = A;
        D.block((k + 1) * nx, k * (nx + nu) + nx, nx, nu) = B;
        D.block((k + 1) * nx, (k + 1) * (nx + nu), nx, nx) -= Eigen::MatrixXd::Identity(nx, nx);
      }
      D.block((N + 1) * nx, N * (nx + nu), nx, nx) = A - Eigen::MatrixXd::Identity(nx, nx);
      D.block((N + 1) * nx, N * (nx + nu) + nx, nx, nu) = B;
      return D;
    }();
    const Eigen::VectorXd x = rng.vector(G.cols());
    const Eigen::VectorXd y = rng.vector(G.rows());
    CHECK(max_abs(G.multiply(x) - dense * x) < 1e-12);
    CHECK(max_abs(G.multiply_transpose(y) - dense.transpose() * y) < 1e-12);
    CHECK(std::abs(G.multiply(x).dot(y) - x.dot(G.multiply_transpose(y))) < 1e-12 * (1 + x.norm() * y.norm()));
    // First block row picks out x_0.
    CHECK(max_abs(G.multiply(x).head(nx) - x.head(nx)) == 0.0);
  }
  CHECK_THROWS_AS(G1.multiply(Eigen::VectorXd::Zero(5)), DimensionMismatch);
}

TEST_CASE("SmallDense solves and flags singular matrices") {
  Eigen::MatrixXd M(2, 2);
  M << 2, 1, 1, 3;
  const SmallDense S(M);
  Eigen::VectorXd x = vec({3, 4});
  S.solve_in_place(x);
  CHECK(max_abs(M * x - vec({3, 4})) < 1e-15);

  Eigen::MatrixXd singular(2, 2);
  singular << 1, 2, 2, 4;
  try {
    SmallDense bad(singular);
    FAIL("expected SingularSmallSystem");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularSmallSystem);
  }
}
