#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace oracle {

// Central-difference gradient of a scalar function.
template <typename F>
Eigen::VectorXd central_gradient(F&& f, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

// Relative error with an absolute floor for entries near zero.
inline double relative_error(double a, double b, double floor = 1.0) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

template <typename A, typename B>
double max_relative_error(const A& a, const B& b, double floor = 1.0) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) worst = std::max(worst, relative_error(a[i], b[i], floor));
  return worst;
}

}  // namespace oracle
