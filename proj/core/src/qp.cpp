#include "teleop/qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace teleop {

QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& C,
                  const Eigen::VectorXd& b, int max_iterations) {
  const Eigen::Index n = H.rows();
  const Eigen::Index m = C.rows();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  QpResult res;
  res.multipliers = Eigen::VectorXd::Zero(m);

  const Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) {
    res.status = QpStatus::kNotConvex;
    res.x = Eigen::VectorXd::Zero(n);
    return res;
  }
  const auto L = llt.matrixL();
  const auto LT = llt.matrixU();

  res.x = llt.solve(-g);
  if (m == 0) return res;
  if (max_iterations <= 0) max_iterations = static_cast<int>(10 * (n + m)) + 50;

  std::vector<Eigen::Index> active;
  std::vector<double> duals;
  std::vector<Eigen::VectorXd> w_active;  // L^{-1} c_j for active rows
  const Eigen::VectorXd tol = 1e-11 * (1.0 + b.array().abs());

  auto drop = [&](std::size_t l) {
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(l));
    duals.erase(duals.begin() + static_cast<std::ptrdiff_t>(l));
    w_active.erase(w_active.begin() + static_cast<std::ptrdiff_t>(l));
  };

  int iter = 0;
  while (true) {
    const Eigen::VectorXd s = C * res.x - b;
    Eigen::Index p = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (s[i] < -tol[i] && s[i] < worst) {
        worst = s[i];
        p = i;
      }
    }
    if (p < 0) break;

    const Eigen::VectorXd np = C.row(p).transpose();
    const Eigen::VectorXd w = L.solve(np);
    double u_p = 0.0;
    double s_p = s[p];

    while (true) {
      if (++iter > max_iterations) {
        res.status = QpStatus::kIterationLimit;
        res.iterations = iter;
        return res;
      }
      const auto q = static_cast<Eigen::Index>(active.size());
      Eigen::VectorXd z_t = w;
      Eigen::VectorXd r;
      if (q > 0) {
        Eigen::MatrixXd B(n, q);
        for (Eigen::Index j = 0; j < q; ++j) B.col(j) = w_active[j];
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
        const Eigen::MatrixXd Q1 = qr.householderQ() * Eigen::MatrixXd::Identity(n, q);
        const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
        const Eigen::VectorXd d1 = Q1.transpose() * w;
        z_t -= Q1 * d1;
        r = R.triangularView<Eigen::Upper>().solve(d1);
      }
      const double zz = z_t.squaredNorm();
      const bool z_zero = zz <= 1e-24 * std::max(1.0, w.squaredNorm());
      const Eigen::VectorXd z = z_zero ? Eigen::VectorXd::Zero(n) : Eigen::VectorXd(LT.solve(z_t));

      double t1 = kInf;
      std::size_t l = 0;
      for (Eigen::Index j = 0; j < q; ++j) {
        if (r[j] > 0.0) {
          const double ratio = duals[j] / r[j];
          if (ratio < t1) {
            t1 = ratio;
            l = static_cast<std::size_t>(j);
          }
        }
      }
      const double t2 = z_zero ? kInf : -s_p / zz;
      const double t = std::min(t1, t2);

      if (t == kInf) {
        res.status = QpStatus::kInfeasible;
        res.iterations = iter;
        return res;
      }
      for (Eigen::Index j = 0; j < q; ++j) duals[j] -= t * r[j];
      u_p += t;
      if (t2 == kInf) {
        drop(l);
        continue;
      }
      res.x += t * z;
      if (t2 <= t1) {
        active.push_back(p);
        duals.push_back(u_p);
        w_active.push_back(w);
        break;
      }
      drop(l);
      s_p = C.row(p).dot(res.x) - b[p];
      if (s_p >= -tol[p]) break;
    }
  }

  for (std::size_t j = 0; j < active.size(); ++j) res.multipliers[active[j]] = std::max(0.0, duals[j]);
  res.iterations = iter;
  res.active_count = static_cast<int>(active.size());
  return res;
}

}  // namespace teleop
