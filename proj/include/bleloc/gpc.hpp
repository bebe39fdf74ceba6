#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bleloc/common.hpp"
#include "bleloc/io.hpp"
#include "bleloc/math.hpp"

namespace bleloc {

/// Squared-exponential ARD kernel over (distance m, rssi dBm), constant mean.
struct GpcHyperparams {
  Eigen::Vector2d lengthscales{1.0, 5.0};  // meters, dBm
  double signal_variance = 1.0;
  double mean_constant = 0.0;

  void validate() const {
    if (!(lengthscales.array() > 0).all() || !lengthscales.allFinite())
      throw std::invalid_argument("gpc: lengthscales must be positive");
    if (!(signal_variance > 0) || !std::isfinite(signal_variance))
      throw std::invalid_argument("gpc: signal_variance must be positive");
    if (!std::isfinite(mean_constant))
      throw std::invalid_argument("gpc: mean_constant must be finite");
  }
};

inline double kernel(const GpcHyperparams& h, const Eigen::Vector2d& x1,
                     const Eigen::Vector2d& x2) {
  const Eigen::Vector2d d = (x1 - x2).cwiseQuotient(h.lengthscales);
  return h.signal_variance * std::exp(-0.5 * d.squaredNorm());
}

/// Gram matrix with a relative jitter on the diagonal for factorization
/// stability.
inline Eigen::MatrixXd gram_matrix(const GpcHyperparams& h, const Eigen::MatrixXd& inputs,
                                   double jitter_rel = 1e-8) {
  const Eigen::Index n = inputs.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = h.signal_variance + jitter_rel * h.signal_variance;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      K(i, j) = kernel(h, inputs.row(i), inputs.row(j));
      K(j, i) = K(i, j);
    }
  }
  return K;
}

struct EpOptions {
  int max_sweeps = 100;
  double tol = 1e-6;  // max site-parameter change per sweep
};

struct EpResult {
  Eigen::VectorXd site_nu;   // tilde-nu
  Eigen::VectorXd site_tau;  // tilde-tau (>= 0)
  double log_marginal = 0;
  int sweeps = 0;
  Eigen::VectorXd post_mean;  // latent posterior mean at training inputs
};

namespace detail {

/// Moments of N(mu, s2) * Phi(y * f) in f, via the probit-Gaussian identity.
struct ProbitMoments {
  double log_z, mean, var;
};

inline ProbitMoments probit_moments(double y, double mu, double s2) {
  const double denom = std::sqrt(1.0 + s2);
  const double z = y * mu / denom;
  const double lam = gauss_over_cdf(z);
  ProbitMoments m;
  m.log_z = log_norm_cdf(z);
  m.mean = mu + y * s2 * lam / denom;
  m.var = s2 - s2 * s2 * lam * (z + lam) / (1.0 + s2);
  return m;
}

/// Posterior (Sigma, mu) from site precisions via the B-matrix factorization:
/// B = I + S^1/2 K S^1/2, Sigma = K - K S^1/2 B^-1 S^1/2 K.
struct EpPosterior {
  Eigen::MatrixXd sigma;
  Eigen::VectorXd mu;
  Eigen::LLT<Eigen::MatrixXd> llt_b;   // Cholesky of B
  Eigen::VectorXd sqrt_tau;
};

inline EpPosterior ep_posterior(const Eigen::MatrixXd& K, const Eigen::VectorXd& nu,
                                const Eigen::VectorXd& tau, double mean_constant) {
  const Eigen::Index n = K.rows();
  EpPosterior p;
  p.sqrt_tau = tau.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
  B.noalias() += p.sqrt_tau.asDiagonal() * K * p.sqrt_tau.asDiagonal();
  p.llt_b.compute(B);
  if (p.llt_b.info() != Eigen::Success)
    throw NumericError("ep_infer: Cholesky factorization of B failed");
  const Eigen::MatrixXd SK = p.sqrt_tau.asDiagonal() * K;
  const Eigen::MatrixXd V = p.llt_b.matrixL().solve(SK);
  p.sigma = K - V.transpose() * V;
  const Eigen::VectorXd nu_adj =
      nu - tau * mean_constant;  // site contribution relative to the prior mean
  p.mu = Eigen::VectorXd::Constant(n, mean_constant) + p.sigma * nu_adj;
  return p;
}

}  // namespace detail

/// Expectation-propagation fixed point for the probit likelihood. Sites are
/// refined in index order with rank-1 posterior updates and the posterior is
/// recomputed from a fresh factorization after every sweep.
inline EpResult ep_infer(const Eigen::MatrixXd& inputs, const Eigen::VectorXi& labels,
                         const GpcHyperparams& hyper, const EpOptions& opts = {}) {
  hyper.validate();
  const Eigen::Index n = inputs.rows();
  if (n < 1) throw std::invalid_argument("ep_infer: need at least one training point");
  if (labels.size() != n) throw std::invalid_argument("ep_infer: labels/inputs size mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (labels(i) != 1 && labels(i) != -1)
      throw std::invalid_argument("ep_infer: labels must be +1 or -1");

  const Eigen::MatrixXd K = gram_matrix(hyper, inputs);
  const double m = hyper.mean_constant;

  Eigen::VectorXd nu = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd sigma = K;
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(n, m);

  double max_delta = 0;
  int sweep = 0;
  bool converged = false;
  detail::EpPosterior post;
  for (sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    max_delta = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s2_i = sigma(i, i);
      double tau_cav = 1.0 / s2_i - tau(i);
      double nu_cav = mu(i) / s2_i - nu(i);
      if (tau_cav <= 0) {
        // cavity collapsed; skip this site for the sweep
        continue;
      }
      const double mu_cav = nu_cav / tau_cav;
      const double s2_cav = 1.0 / tau_cav;

      const auto mom = detail::probit_moments(labels(i), mu_cav, s2_cav);
      if (mom.var <= 0) continue;

      double tau_new = 1.0 / mom.var - tau_cav;
      double nu_new = mom.mean / mom.var - nu_cav;
      if (tau_new < 0) {  // probit sites are analytically non-negative; clamp fp noise
        tau_new = 0;
      }
      const double d_tau = tau_new - tau(i);
      const double d_nu = nu_new - nu(i);
      tau(i) = tau_new;
      nu(i) = nu_new;
      max_delta = std::max({max_delta, std::abs(d_tau), std::abs(d_nu)});

      // rank-1 refresh of the posterior
      const double denom = 1.0 + d_tau * s2_i;
      const Eigen::VectorXd si = sigma.col(i);
      sigma.noalias() -= (d_tau / denom) * (si * si.transpose());
      mu += ((d_nu - d_tau * mu(i)) / denom) * si;
    }
    // stable recompute; rank-1 updates drift over a sweep
    post = detail::ep_posterior(K, nu, tau, m);
    sigma = post.sigma;
    mu = post.mu;
    if (max_delta < opts.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NumericError("ep_infer: no fixed point after " + std::to_string(opts.max_sweeps) +
                       " sweeps (last max site change " + std::to_string(max_delta) + ")");

  // EP log marginal likelihood: site normalizers plus the Gaussian
  // convolution term, with cavities recomputed at the converged posterior.
  const Eigen::MatrixXd L = post.llt_b.matrixL();
  double log_z = 0;
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s2_i = post.sigma(i, i);
    const double tau_cav = 1.0 / s2_i - tau(i);
    const double nu_cav = post.mu(i) / s2_i - nu(i);
    if (tau_cav <= 0)
      throw NumericError("ep_infer: collapsed cavity in marginal-likelihood evaluation");
    const double mu_cav = nu_cav / tau_cav;
    const double s2_cav = 1.0 / tau_cav;
    const double z = labels(i) * mu_cav / std::sqrt(1.0 + s2_cav);
    log_z += log_norm_cdf(z);
    log_z += 0.5 * std::log1p(tau(i) * s2_cav);
    if (tau(i) > 0) {
      const double num = tau(i) * mu_cav - nu(i);
      log_z += num * num / (2.0 * tau(i) * (tau(i) * s2_cav + 1.0));
      b(i) = nu(i) / std::sqrt(tau(i)) - std::sqrt(tau(i)) * m;
    } else {
      b(i) = 0;
    }
  }
  log_z -= L.diagonal().array().log().sum();
  const Eigen::VectorXd q = post.llt_b.matrixL().solve(b);
  log_z -= 0.5 * q.squaredNorm();

  EpResult res;
  res.site_nu = std::move(nu);
  res.site_tau = std::move(tau);
  res.log_marginal = log_z;
  res.sweeps = sweep;
  res.post_mean = post.mu;
  return res;
}

/// Trained classifier. Immutable after construction; prediction state
/// (Cholesky of B, prediction weights) is cached at build time.
struct GpcModel {
  GpcHyperparams hyper;
  Eigen::MatrixXd train_inputs;  // n x 2: (distance m, rssi dBm)
  Eigen::VectorXi train_labels;  // +1 / -1
  Eigen::VectorXd site_nu;
  Eigen::VectorXd site_tau;
  double log_marginal = 0;

  // derived, rebuilt by finalize()
  Eigen::MatrixXd chol_b_lower;
  Eigen::VectorXd sqrt_tau;
  Eigen::VectorXd pred_weights;

  void finalize() {
    const Eigen::MatrixXd K = gram_matrix(hyper, train_inputs);
    auto post = detail::ep_posterior(K, site_nu, site_tau, hyper.mean_constant);
    chol_b_lower = post.llt_b.matrixL();
    sqrt_tau = post.sqrt_tau;
    const Eigen::VectorXd nu_adj = site_nu - site_tau * hyper.mean_constant;
    const Eigen::VectorXd t = sqrt_tau.cwiseProduct(K * nu_adj);
    const Eigen::VectorXd solved =
        chol_b_lower.transpose().triangularView<Eigen::Upper>().solve(
            chol_b_lower.triangularView<Eigen::Lower>().solve(t));
    pred_weights = nu_adj - sqrt_tau.cwiseProduct(solved);
  }
};

/// Runs EP at the given hyperparameters and packages the trained model.
inline GpcModel make_gpc_model(const Eigen::MatrixXd& inputs, const Eigen::VectorXi& labels,
                               const GpcHyperparams& hyper, const EpOptions& opts = {}) {
  GpcModel model;
  model.hyper = hyper;
  model.train_inputs = inputs;
  model.train_labels = labels;
  auto ep = ep_infer(inputs, labels, hyper, opts);
  model.site_nu = std::move(ep.site_nu);
  model.site_tau = std::move(ep.site_tau);
  model.log_marginal = ep.log_marginal;
  model.finalize();
  return model;
}

struct GpcPrediction {
  double latent_mean = 0;
  double latent_var = 0;
  double p_los = 0.5;  // p(y = +1 | D, x)
};

inline GpcPrediction predict(const GpcModel& model, const Eigen::Vector2d& query) {
  const Eigen::Index n = model.train_inputs.rows();
  Eigen::VectorXd k_star(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k_star(i) = kernel(model.hyper, model.train_inputs.row(i), query);

  GpcPrediction out;
  out.latent_mean = model.hyper.mean_constant + k_star.dot(model.pred_weights);
  const Eigen::VectorXd v = model.chol_b_lower.triangularView<Eigen::Lower>().solve(
      model.sqrt_tau.cwiseProduct(k_star));
  out.latent_var = std::max(0.0, model.hyper.signal_variance - v.squaredNorm());
  out.p_los = norm_cdf(out.latent_mean / std::sqrt(1.0 + out.latent_var));
  return out;
}

// ---------------------------------------------------------------------------
// Model file (versioned)
// ---------------------------------------------------------------------------

inline void save_gpc_model(const std::string& path, const GpcModel& m) {
  nlohmann::json j;
  j["version"] = 1;
  j["hyper"] = {{"lengthscales", {m.hyper.lengthscales(0), m.hyper.lengthscales(1)}},
                {"signal_variance", m.hyper.signal_variance},
                {"mean_constant", m.hyper.mean_constant}};
  auto& inputs = j["inputs"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.train_inputs.rows(); ++i)
    inputs.push_back({m.train_inputs(i, 0), m.train_inputs(i, 1)});
  j["labels"] = std::vector<int>(m.train_labels.data(), m.train_labels.data() + m.train_labels.size());
  j["site_nu"] = std::vector<double>(m.site_nu.data(), m.site_nu.data() + m.site_nu.size());
  j["site_tau"] = std::vector<double>(m.site_tau.data(), m.site_tau.data() + m.site_tau.size());
  j["log_marginal"] = m.log_marginal;
  auto out = detail::open_output(path);
  out << j.dump() << '\n';
}

inline GpcModel load_gpc_model(const std::string& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  GpcModel m;
  try {
    in >> j;
    if (j.at("version").get<int>() != 1)
      throw DataError(path + ": unsupported model file version");
    const auto& h = j.at("hyper");
    m.hyper.lengthscales = {h.at("lengthscales")[0].get<double>(),
                            h.at("lengthscales")[1].get<double>()};
    m.hyper.signal_variance = h.at("signal_variance").get<double>();
    m.hyper.mean_constant = h.at("mean_constant").get<double>();
    const auto& inputs = j.at("inputs");
    const auto n = static_cast<Eigen::Index>(inputs.size());
    m.train_inputs.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      m.train_inputs(i, 0) = inputs[static_cast<size_t>(i)][0].get<double>();
      m.train_inputs(i, 1) = inputs[static_cast<size_t>(i)][1].get<double>();
    }
    auto labels = j.at("labels").get<std::vector<int>>();
    auto nu = j.at("site_nu").get<std::vector<double>>();
    auto tau = j.at("site_tau").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(labels.size()) != n ||
        static_cast<Eigen::Index>(nu.size()) != n || static_cast<Eigen::Index>(tau.size()) != n)
      throw DataError(path + ": inconsistent array lengths in model file");
    m.train_labels = Eigen::Map<Eigen::VectorXi>(labels.data(), n);
    m.site_nu = Eigen::Map<Eigen::VectorXd>(nu.data(), n);
    m.site_tau = Eigen::Map<Eigen::VectorXd>(tau.data(), n);
    m.log_marginal = j.at("log_marginal").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  m.hyper.validate();
  if ((m.site_tau.array() < 0).any()) throw DataError(path + ": negative site precision");
  m.finalize();
  return m;
}

}  // namespace bleloc
