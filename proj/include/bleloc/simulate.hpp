#pragma once

#include <Eigen/Core>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bleloc/common.hpp"
#include "bleloc/io.hpp"
#include "bleloc/pathloss.hpp"
#include "bleloc/types.hpp"

namespace bleloc {

/// Axis-aligned planar rectangle blocking line of sight.
struct Obstacle {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  bool degenerate() const { return !(x_max > x_min) || !(y_max > y_min); }
};

/// Synthetic data-collection run: a constant-speed walk along a waypoint
/// polyline through a beacon-populated space, with obstacle-driven NLOS.
struct Scenario {
  BeaconMap beacons;
  std::vector<Obstacle> obstacles;
  std::vector<Eigen::Vector2d> waypoints;
  double speed = 0.2;            // m/s
  double receiver_height = 1.0;  // m
  PathLossParams pathloss;
  double nlos_extra_loss = 8.0;  // dBm mean attenuation added by blockage
  double nlos_extra_std = 2.0;   // dBm extra noise std under blockage
  double sample_rate = 10.0;     // Hz per beacon
  double dropout = 0.0;          // i.i.d. per (pose, beacon) slot
  uint64_t seed = 0;

  void validate() const {
    beacons.validate();
    if (!(speed > 0)) throw ConfigError("scenario: speed must be positive");
    if (!(sample_rate > 0)) throw ConfigError("scenario: sample_rate must be positive");
    if (!(dropout >= 0 && dropout < 1)) throw ConfigError("scenario: dropout must be in [0,1)");
    if (nlos_extra_loss < 0 || nlos_extra_std < 0)
      throw ConfigError("scenario: NLOS offsets must be non-negative");
    if (waypoints.size() < 2) throw ConfigError("scenario: need at least 2 waypoints");
    for (const auto& o : obstacles)
      if (o.degenerate()) throw ConfigError("scenario: degenerate obstacle rectangle");
  }
};

/// Constant-speed interpolation along the waypoint polyline, sampled at
/// sample_rate. The endpoint appears when the total length is an exact
/// multiple of the per-sample step.
inline std::vector<GroundtruthPose> generate_trajectory(const Scenario& sc) {
  sc.validate();
  std::vector<double> seg_len;
  double total = 0;
  for (size_t i = 0; i + 1 < sc.waypoints.size(); ++i) {
    const double len = (sc.waypoints[i + 1] - sc.waypoints[i]).norm();
    seg_len.push_back(len);
    total += len;
  }
  if (total <= 0) throw ConfigError("generate_trajectory: zero-length polyline");

  std::vector<GroundtruthPose> out;
  const double dt = 1.0 / sc.sample_rate;
  const auto n_steps = static_cast<size_t>(std::floor(total / sc.speed / dt + 1e-9));
  out.reserve(n_steps + 1);
  size_t seg = 0;
  double seg_start = 0;
  for (size_t k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double arc = std::min(sc.speed * t, total);
    while (seg + 1 < seg_len.size() && arc > seg_start + seg_len[seg]) seg_start += seg_len[seg++];
    const double a = seg_len[seg] > 0 ? (arc - seg_start) / seg_len[seg] : 0.0;
    const Eigen::Vector2d p = (1.0 - a) * sc.waypoints[seg] + a * sc.waypoints[seg + 1];
    out.push_back({t, {p.x(), p.y(), sc.receiver_height}});
  }
  return out;
}

/// True iff the receiver-to-beacon segment, projected to the plane, misses
/// the interior of every obstacle rectangle.
inline bool is_los(const Eigen::Vector3d& position, const Eigen::Vector3d& beacon,
                   const std::vector<Obstacle>& obstacles) {
  const double ax = position.x(), ay = position.y();
  const double dx = beacon.x() - ax, dy = beacon.y() - ay;
  for (const auto& o : obstacles) {
    // open-slab intersection: touching the boundary does not block
    double lo = 0.0, hi = 1.0;
    bool empty = false;
    auto clip = [&](double a, double d, double mn, double mx) {
      if (d == 0.0) {
        if (!(a > mn && a < mx)) empty = true;
        return;
      }
      double t0 = (mn - a) / d;
      double t1 = (mx - a) / d;
      if (t0 > t1) std::swap(t0, t1);
      lo = std::max(lo, t0);
      hi = std::min(hi, t1);
    };
    clip(ax, dx, o.x_min, o.x_max);
    if (!empty) clip(ay, dy, o.y_min, o.y_max);
    if (!empty && lo < hi) return false;
  }
  return true;
}

struct SimStream {
  std::vector<RssiObservation> observations;
  std::vector<LosLabel> labels;  // parallel to observations
  std::vector<GroundtruthPose> groundtruth;
};

/// Samples the RSSI stream along the scenario trajectory: per pose and
/// beacon, the slot survives with probability 1-dropout and emits the
/// path-loss mean plus Gaussian noise; blocked slots lose nlos_extra_loss
/// dBm and pick up nlos_extra_std of additional noise.
inline SimStream sample_rssi_stream(const Scenario& sc) {
  sc.validate();
  SimStream stream;
  stream.groundtruth = generate_trajectory(sc);

  std::mt19937_64 rng(sc.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);

  for (const auto& pose : stream.groundtruth) {
    for (const auto& beacon : sc.beacons.entries) {
      if (u01(rng) < sc.dropout) continue;
      const double d = (pose.position - beacon.position).norm();
      const bool los = is_los(pose.position, beacon.position, sc.obstacles);
      double rssi = mean_rssi(sc.pathloss, std::max(d, 1e-9));
      if (los) {
        rssi += sc.pathloss.sigma * n01(rng);
      } else {
        rssi += -sc.nlos_extra_loss + (sc.pathloss.sigma + sc.nlos_extra_std) * n01(rng);
      }
      stream.observations.push_back({pose.t, beacon.id, rssi});
      stream.labels.push_back({pose.t, beacon.id, los});
    }
  }
  return stream;
}

// ---------------------------------------------------------------------------
// Scenario file
// ---------------------------------------------------------------------------

inline Scenario load_scenario(const std::string& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  Scenario sc;
  try {
    in >> j;
    for (const auto& b : j.at("beacons")) {
      Beacon beacon;
      beacon.id = b.at("id").get<std::string>();
      beacon.position = {b.at("position")[0].get<double>(), b.at("position")[1].get<double>(),
                         b.at("position")[2].get<double>()};
      sc.beacons.entries.push_back(std::move(beacon));
    }
    for (const auto& o : j.value("obstacles", nlohmann::json::array()))
      sc.obstacles.push_back(
          {o[0].get<double>(), o[1].get<double>(), o[2].get<double>(), o[3].get<double>()});
    for (const auto& w : j.at("waypoints"))
      sc.waypoints.emplace_back(w[0].get<double>(), w[1].get<double>());
    sc.speed = j.value("speed", sc.speed);
    sc.receiver_height = j.value("receiver_height", sc.receiver_height);
    if (j.contains("pathloss")) {
      const auto& p = j.at("pathloss");
      sc.pathloss.a_x = p.at("a_x").get<double>();
      sc.pathloss.gamma = p.at("gamma").get<double>();
      sc.pathloss.d0 = p.at("d0").get<double>();
      sc.pathloss.sigma = p.at("sigma").get<double>();
    }
    sc.nlos_extra_loss = j.value("nlos_extra_loss", sc.nlos_extra_loss);
    sc.nlos_extra_std = j.value("nlos_extra_std", sc.nlos_extra_std);
    sc.sample_rate = j.value("sample_rate", sc.sample_rate);
    sc.dropout = j.value("dropout", sc.dropout);
    sc.seed = j.value("seed", sc.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  sc.validate();
  return sc;
}

inline void save_scenario(const std::string& path, const Scenario& sc) {
  nlohmann::json j;
  j["version"] = 1;
  j["beacons"] = nlohmann::json::array();
  for (const auto& b : sc.beacons.entries)
    j["beacons"].push_back(
        {{"id", b.id}, {"position", {b.position.x(), b.position.y(), b.position.z()}}});
  j["obstacles"] = nlohmann::json::array();
  for (const auto& o : sc.obstacles) j["obstacles"].push_back({o.x_min, o.y_min, o.x_max, o.y_max});
  j["waypoints"] = nlohmann::json::array();
  for (const auto& w : sc.waypoints) j["waypoints"].push_back({w.x(), w.y()});
  j["speed"] = sc.speed;
  j["receiver_height"] = sc.receiver_height;
  j["pathloss"] = {{"a_x", sc.pathloss.a_x},
                   {"gamma", sc.pathloss.gamma},
                   {"d0", sc.pathloss.d0},
                   {"sigma", sc.pathloss.sigma}};
  j["nlos_extra_loss"] = sc.nlos_extra_loss;
  j["nlos_extra_std"] = sc.nlos_extra_std;
  j["sample_rate"] = sc.sample_rate;
  j["dropout"] = sc.dropout;
  j["seed"] = sc.seed;
  auto out = detail::open_output(path);
  out << j.dump(2) << '\n';
}

}  // namespace bleloc
