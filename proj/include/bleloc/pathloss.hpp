#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bleloc/common.hpp"
#include "bleloc/io.hpp"
#include "bleloc/math.hpp"

namespace bleloc {

/// Log-distance path-loss model
///   rssi = a_x + 10*gamma*log10(d/d0) + eps,  eps ~ N(0, sigma^2).
/// gamma's sign is whatever the data says; the model is used as printed.
struct PathLossParams {
  double a_x = -64.53;   // dBm, attenuated transmission power
  double gamma = -1.72;  // path-loss exponent
  double d0 = 1.78;      // meters, reference distance (> 0)
  double sigma = 0.0;    // dBm, noise std (>= 0)
};

/// Noise-free model RSSI at a given range.
inline double mean_rssi(const PathLossParams& p, double distance) {
  if (distance <= 0) throw std::invalid_argument("mean_rssi: distance must be positive");
  return p.a_x + 10.0 * p.gamma * std::log10(distance / p.d0);
}

/// Model inversion: the range whose mean RSSI equals the given value.
inline double distance_from_rssi(const PathLossParams& p, double rssi) {
  if (p.gamma == 0) throw NumericError("distance_from_rssi: degenerate model (gamma = 0)");
  return p.d0 * std::pow(10.0, (rssi - p.a_x) / (10.0 * p.gamma));
}

/// Least-squares fit of (a_x, gamma) with d0 held fixed; a_x and d0 are only
/// jointly identifiable through a_x - 10*gamma*log10(d0), so the reference
/// distance is a choice, not a fit parameter. sigma is set to the RMS
/// residual. Requires at least two points at two distinct distances.
inline PathLossParams fit_pathloss(const std::vector<std::pair<double, double>>& data,
                                   double d0 = 1.0) {
  if (d0 <= 0) throw std::invalid_argument("fit_pathloss: d0 must be positive");
  if (data.size() < 2) throw NumericError("fit_pathloss: need at least 2 points");

  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  bool distinct = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [d, rssi] = data[static_cast<size_t>(i)];
    if (d <= 0) throw std::invalid_argument("fit_pathloss: distances must be positive");
    A(i, 0) = 1.0;
    A(i, 1) = 10.0 * std::log10(d / d0);
    b(i) = rssi;
    if (d != data[0].first) distinct = true;
  }
  if (!distinct)
    throw NumericError("fit_pathloss: rank-deficient data (all points at one distance)");

  const Eigen::Vector2d theta = A.colPivHouseholderQr().solve(b);
  PathLossParams out;
  out.a_x = theta(0);
  out.gamma = theta(1);
  out.d0 = d0;
  out.sigma = std::sqrt((A * theta - b).squaredNorm() / static_cast<double>(n));
  return out;
}

/// Log-domain scale of the range distribution implied by a sigma_ln dBm
/// RSSI spread: a delta-dBm error maps to a 10^(delta/(10*gamma)) range factor.
inline double lognormal_range_scale(const PathLossParams& p, double sigma_ln) {
  if (p.gamma == 0) throw NumericError("lognormal_range_scale: degenerate model (gamma = 0)");
  return sigma_ln * std::numbers::ln10 / (10.0 * std::abs(p.gamma));
}

/// Log-normal pdf of a measured range given the model-predicted range as the
/// distribution median.
inline double lognormal_range_density(const PathLossParams& p, double sigma_ln, double predicted,
                                      double measured) {
  if (predicted <= 0 || measured <= 0 || sigma_ln <= 0)
    throw std::invalid_argument("lognormal_range_density: inputs must be positive");
  const double s = lognormal_range_scale(p, sigma_ln);
  const double u = (std::log(measured) - std::log(predicted)) / s;
  return std::exp(-0.5 * u * u) / (measured * s * kSqrt2Pi);
}

inline PathLossParams load_pathloss(const std::string& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
    PathLossParams p;
    p.a_x = j.at("a_x").get<double>();
    p.gamma = j.at("gamma").get<double>();
    p.d0 = j.at("d0").get<double>();
    p.sigma = j.at("sigma").get<double>();
    if (p.d0 <= 0 || p.sigma < 0 || !std::isfinite(p.a_x) || !std::isfinite(p.gamma))
      throw DataError(path + ": invalid path-loss parameters");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline void save_pathloss(const std::string& path, const PathLossParams& p) {
  nlohmann::json j;
  j["version"] = 1;
  j["a_x"] = p.a_x;
  j["gamma"] = p.gamma;
  j["d0"] = p.d0;
  j["sigma"] = p.sigma;
  auto out = detail::open_output(path);
  out << j.dump(2) << '\n';
}

}  // namespace bleloc
