#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

namespace bleloc {

struct NelderMeadOptions {
  int max_iter = 300;
  double f_tol = 1e-9;     // simplex spread in f
  double x_tol = 1e-7;     // simplex spread in x (inf norm)
  double init_step = 0.4;  // initial simplex edge along each axis
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Downhill simplex minimization (standard alpha=1, gamma=2, rho=0.5,
/// shrink=0.5 variant). Tolerates objectives returning +inf.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0,
                                    const NelderMeadOptions& opts = {}) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (int i = 1; i <= n; ++i) xs[i](i - 1) += opts.init_step;
  for (int i = 0; i <= n; ++i) fs[i] = f(xs[i]);

  auto order = [&] {
    std::vector<int> idx(n + 1);
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    std::vector<Eigen::VectorXd> xs2(n + 1);
    std::vector<double> fs2(n + 1);
    for (int i = 0; i <= n; ++i) {
      xs2[i] = xs[idx[i]];
      fs2[i] = fs[idx[i]];
    }
    xs.swap(xs2);
    fs.swap(fs2);
  };

  NelderMeadResult res;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    order();
    double spread_x = 0;
    for (int i = 1; i <= n; ++i)
      spread_x = std::max(spread_x, (xs[i] - xs[0]).cwiseAbs().maxCoeff());
    const double spread_f = std::abs(fs[n] - fs[0]);
    if (std::isfinite(fs[0]) && spread_f < opts.f_tol && spread_x < opts.x_tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += xs[i];
    centroid /= n;

    const Eigen::VectorXd xr = centroid + (centroid - xs[n]);  // reflection
    const double fr = f(xr);
    if (fr < fs[0]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[n]);  // expansion
      const double fe = f(xe);
      if (fe < fr) {
        xs[n] = xe;
        fs[n] = fe;
      } else {
        xs[n] = xr;
        fs[n] = fr;
      }
    } else if (fr < fs[n - 1]) {
      xs[n] = xr;
      fs[n] = fr;
    } else {
      const Eigen::VectorXd xc = centroid + 0.5 * (xs[n] - centroid);  // contraction
      const double fc = f(xc);
      if (fc < fs[n]) {
        xs[n] = xc;
        fs[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {  // shrink toward best
          xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
          fs[i] = f(xs[i]);
        }
      }
    }
  }
  order();
  res.x = xs[0];
  res.f = fs[0];
  res.iterations = it;
  return res;
}

}  // namespace bleloc
