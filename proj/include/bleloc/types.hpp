#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bleloc/common.hpp"

namespace bleloc {

struct Beacon {
  std::string id;
  Eigen::Vector3d position;  // meters
};

/// The known, fully observable beacon set. Ids are unique, positions finite.
struct BeaconMap {
  std::vector<Beacon> entries;

  const Beacon* find(const std::string& id) const {
    for (const auto& b : entries)
      if (b.id == id) return &b;
    return nullptr;
  }

  int index_of(const std::string& id) const {
    for (size_t i = 0; i < entries.size(); ++i)
      if (entries[i].id == id) return static_cast<int>(i);
    return -1;
  }

  void validate() const {
    if (entries.empty()) throw DataError("beacon map is empty");
    for (size_t i = 0; i < entries.size(); ++i) {
      if (!entries[i].position.allFinite())
        throw DataError("beacon '" + entries[i].id + "' has a non-finite position");
      for (size_t j = i + 1; j < entries.size(); ++j)
        if (entries[i].id == entries[j].id)
          throw DataError("duplicate beacon id '" + entries[i].id + "'");
    }
  }
};

/// One timestamped RSSI reading. The only sensor input of the system.
struct RssiObservation {
  double t = 0;            // seconds
  std::string beacon_id;
  double rssi = 0;         // dBm
};

/// LOS/NLOS annotation of one observation (simulator output, evaluation input).
struct LosLabel {
  double t = 0;
  std::string beacon_id;
  bool los = false;
};

/// Classifier training sample: groundtruth range, observed RSSI, class.
struct TrainingPoint {
  double distance = 0;  // meters, >= 0
  double rssi = 0;      // dBm
  int label = 0;        // +1 LOS, -1 NLOS
};

struct GroundtruthPose {
  double t = 0;
  Eigen::Vector3d position;  // meters
};

/// Linear interpolation of a groundtruth trajectory at time t.
/// Returns nullopt outside the covered interval.
inline std::optional<Eigen::Vector3d> interpolate_position(
    const std::vector<GroundtruthPose>& trajectory, double t) {
  if (trajectory.empty()) return std::nullopt;
  if (t < trajectory.front().t || t > trajectory.back().t) return std::nullopt;
  auto it = std::lower_bound(trajectory.begin(), trajectory.end(), t,
                             [](const GroundtruthPose& p, double v) { return p.t < v; });
  if (it == trajectory.begin()) return it->position;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double span = hi.t - lo.t;
  if (span <= 0) return lo.position;
  const double a = (t - lo.t) / span;
  return (1.0 - a) * lo.position + a * hi.position;
}

}  // namespace bleloc
