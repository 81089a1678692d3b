#include "mpct/kkt.hpp"

#include "mpct/error.hpp"

namespace mpct {

KktWorkspace::KktWorkspace(const PrecomputedData& data)
    : p_ws(data.p_system.make_workspace()),
      w_ws(data.w_system.make_workspace()),
      xi(data.nz()),
      rhs(data.nz()) {}

void solve_kkt_system(const PrecomputedData& data,
                      const Eigen::Ref<const Eigen::VectorXd>& p,
                      const Eigen::Ref<const Eigen::VectorXd>& b, KktWorkspace& ws,
                      Eigen::Ref<Eigen::VectorXd> z, Eigen::Ref<Eigen::VectorXd> mu) {
  const Index nz = data.nz();
  const Index mz = data.mz();
  if (p.size() != nz || b.size() != mz || z.size() != nz || mu.size() != mz) {
    throw DimensionMismatch("solve_kkt_system: expected p, z of size " + std::to_string(nz) +
                            " and b, mu of size " + std::to_string(mz));
  }
  if (ws.xi.size() != nz || ws.rhs.size() != nz) ws = KktWorkspace(data);

  ws.xi = p;
  data.p_system.solve_in_place(ws.xi, ws.p_ws);

  data.G.multiply(ws.xi, mu);
  mu += b;
  mu = -mu;
  data.w_system.solve_in_place(mu, ws.w_ws);

  data.G.multiply_transpose(mu, ws.rhs);
  z = -(ws.rhs + p);
  data.p_system.solve_in_place(z, ws.p_ws);
}

KktSolution solve_kkt_system(const PrecomputedData& data,
                             const Eigen::Ref<const Eigen::VectorXd>& p,
                             const Eigen::Ref<const Eigen::VectorXd>& b) {
  KktWorkspace ws(data);
  KktSolution out{Eigen::VectorXd(data.nz()), Eigen::VectorXd(data.mz())};
  solve_kkt_system(data, p, b, ws, out.z, out.mu);
  return out;
}

}  // namespace mpct
