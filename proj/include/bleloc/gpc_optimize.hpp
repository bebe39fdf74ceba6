#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <random>

#include "bleloc/gpc.hpp"
#include "bleloc/nelder_mead.hpp"

namespace bleloc {

struct GpcOptimizeOptions {
  int restarts = 3;          // first start is the given init, the rest are perturbed
  int max_iter = 120;        // simplex iterations per restart
  double restart_spread = 0.7;
  uint64_t seed = 0;
  EpOptions ep;
};

namespace detail {

inline Eigen::Vector4d pack_hyper(const GpcHyperparams& h) {
  return {std::log(h.lengthscales(0)), std::log(h.lengthscales(1)), std::log(h.signal_variance),
          h.mean_constant};
}

inline GpcHyperparams unpack_hyper(const Eigen::Vector4d& v) {
  GpcHyperparams h;
  h.lengthscales = {std::exp(v(0)), std::exp(v(1))};
  h.signal_variance = std::exp(v(2));
  h.mean_constant = v(3);
  return h;
}

}  // namespace detail

/// Maximizes the EP log marginal likelihood over (lengthscales,
/// signal variance, mean constant) by direct simplex search in log-parameter
/// space. Candidates where EP fails to converge score -inf. Returns the best
/// hyperparameters ever evaluated, which is never worse than the init.
inline GpcHyperparams optimize_hyperparams(const Eigen::MatrixXd& inputs,
                                           const Eigen::VectorXi& labels,
                                           const GpcHyperparams& init,
                                           const GpcOptimizeOptions& opts = {}) {
  init.validate();

  Eigen::Vector4d best_x = detail::pack_hyper(init);
  double best_f = std::numeric_limits<double>::infinity();
  bool any_converged = false;

  auto objective = [&](const Eigen::VectorXd& v) -> double {
    // keep the search inside a sane numerical box
    if (v.head(3).cwiseAbs().maxCoeff() > 12.0 || std::abs(v(3)) > 50.0)
      return std::numeric_limits<double>::infinity();
    try {
      const auto ep = ep_infer(inputs, labels, detail::unpack_hyper(v), opts.ep);
      const double f = -ep.log_marginal;
      any_converged = true;
      if (f < best_f) {
        best_f = f;
        best_x = v;
      }
      return f;
    } catch (const NumericError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  objective(detail::pack_hyper(init));

  std::mt19937_64 gen(opts.seed);
  NelderMeadOptions nm;
  nm.max_iter = opts.max_iter;
  nm.init_step = 0.4;
  for (int r = 0; r < opts.restarts; ++r) {
    Eigen::Vector4d x0 = detail::pack_hyper(init);
    if (r > 0) {
      for (int k = 0; k < 4; ++k) {
        const double u = static_cast<double>(gen()) / static_cast<double>(std::mt19937_64::max());
        x0(k) += opts.restart_spread * (2.0 * u - 1.0);
      }
    }
    nelder_mead(objective, x0, nm);
  }

  if (!any_converged)
    throw NumericError("optimize_hyperparams: EP failed to converge at every candidate");
  return detail::unpack_hyper(best_x);
}

/// End-to-end training: optional hyperparameter optimization followed by a
/// final EP run at the selected hyperparameters.
inline GpcModel train_gpc(const std::vector<TrainingPoint>& points, const GpcHyperparams& init,
                          bool optimize = true, const GpcOptimizeOptions& opts = {}) {
  if (points.empty()) throw DataError("train_gpc: empty training set");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd inputs(n, 2);
  Eigen::VectorXi labels(n);
  bool has_pos = false, has_neg = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = points[static_cast<size_t>(i)];
    inputs(i, 0) = p.distance;
    inputs(i, 1) = p.rssi;
    labels(i) = p.label;
    (p.label > 0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw DataError("train_gpc: training data contains a single class");

  GpcHyperparams hyper = init;
  if (optimize) hyper = optimize_hyperparams(inputs, labels, init, opts);
  return make_gpc_model(inputs, labels, hyper, opts.ep);
}

}  // namespace bleloc
