#pragma once

#include <Eigen/Dense>

#include "mpct/problem.hpp"

namespace mpct {

/// Scratch for one equality-constrained z-update. Sized for a given
/// PrecomputedData; one per concurrent solve.
struct KktWorkspace {
  SemiBandedWorkspace p_ws;
  SemiBandedWorkspace w_ws;
  Eigen::VectorXd xi;   // n_z
  Eigen::VectorXd rhs;  // n_z

  explicit KktWorkspace(const PrecomputedData& data);
  KktWorkspace() = default;
};

struct KktSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd mu;
};

/// Solves  min 1/2 z'Pz + p'z  s.t.  Gz = b  through the three semi-banded
/// systems
///   P xi = p,   W mu = -(G xi + b),   P z = -(G' mu + p).
/// `z` (n_z) and `mu` (m_z) are outputs. Throws DimensionMismatch.
void solve_kkt_system(const PrecomputedData& data,
                      const Eigen::Ref<const Eigen::VectorXd>& p,
                      const Eigen::Ref<const Eigen::VectorXd>& b, KktWorkspace& ws,
                      Eigen::Ref<Eigen::VectorXd> z, Eigen::Ref<Eigen::VectorXd> mu);

KktSolution solve_kkt_system(const PrecomputedData& data,
                             const Eigen::Ref<const Eigen::VectorXd>& p,
                             const Eigen::Ref<const Eigen::VectorXd>& b);

}  // namespace mpct
