#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bleloc/common.hpp"
#include "bleloc/types.hpp"

namespace bleloc {

/// Median-filtered RSSI over one time window. beacon_id is empty when the
/// median was taken across all beacons in the window.
struct MedianSample {
  double t = 0;  // window start
  std::string beacon_id;
  double rssi = 0;
};

/// Per-beacon medians, or one median across all beacons of a window
/// (co-located transmitter setups).
enum class MedianGrouping { PerBeacon, AllBeacons };

namespace detail {
inline double median_of(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace detail

/// Buckets observations into consecutive windows of width `window` seconds
/// (anchored at the first observation) and reports the median RSSI of every
/// non-empty bucket. Even-sized buckets use the midpoint of the central pair.
inline std::vector<MedianSample> median_window_filter(
    const std::vector<RssiObservation>& obs, double window,
    MedianGrouping grouping = MedianGrouping::PerBeacon) {
  if (window <= 0) throw std::invalid_argument("median_window_filter: window must be positive");
  std::vector<MedianSample> out;
  if (obs.empty()) return out;

  const double t0 = obs.front().t;
  // key: (bucket index, beacon id or "")
  std::map<std::pair<int64_t, std::string>, std::vector<double>> buckets;
  for (const auto& o : obs) {
    const auto k = static_cast<int64_t>(std::floor((o.t - t0) / window));
    std::string group = grouping == MedianGrouping::PerBeacon ? o.beacon_id : std::string();
    buckets[{k, std::move(group)}].push_back(o.rssi);
  }
  for (auto& [key, values] : buckets) {
    MedianSample s;
    s.t = t0 + static_cast<double>(key.first) * window;
    s.beacon_id = key.second;
    s.rssi = detail::median_of(values);
    out.push_back(std::move(s));
  }
  return out;
}

/// Deterministic stratified downsampling: picks min(target_count, n) points
/// uniformly at random within each label class, proportionally to class
/// sizes (within one point), preserving input order.
inline std::vector<TrainingPoint> downsample(const std::vector<TrainingPoint>& points,
                                             size_t target_count, uint64_t seed) {
  if (target_count < 1) throw std::invalid_argument("downsample: target_count must be >= 1");
  if (points.size() <= target_count) return points;

  std::vector<size_t> pos_idx, neg_idx;
  for (size_t i = 0; i < points.size(); ++i)
    (points[i].label > 0 ? pos_idx : neg_idx).push_back(i);

  const double n = static_cast<double>(points.size());
  size_t quota_pos = static_cast<size_t>(
      std::llround(static_cast<double>(target_count) * static_cast<double>(pos_idx.size()) / n));
  quota_pos = std::min(quota_pos, pos_idx.size());
  size_t quota_neg = target_count - quota_pos;
  if (quota_neg > neg_idx.size()) {  // rebalance if one class is too small
    quota_pos += quota_neg - neg_idx.size();
    quota_neg = neg_idx.size();
    quota_pos = std::min(quota_pos, pos_idx.size());
  }

  std::mt19937_64 gen(seed);
  auto pick = [&gen](std::vector<size_t>& idx, size_t k) {
    // partial Fisher-Yates; avoids distribution-dependent draws
    for (size_t i = 0; i < k; ++i) {
      const size_t j = i + static_cast<size_t>(gen() % (idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
  };
  pick(pos_idx, quota_pos);
  pick(neg_idx, quota_neg);

  std::vector<size_t> keep;
  keep.reserve(quota_pos + quota_neg);
  keep.insert(keep.end(), pos_idx.begin(), pos_idx.end());
  keep.insert(keep.end(), neg_idx.begin(), neg_idx.end());
  std::sort(keep.begin(), keep.end());

  std::vector<TrainingPoint> out;
  out.reserve(keep.size());
  for (size_t i : keep) out.push_back(points[i]);
  return out;
}

/// Joins a labeled RSSI stream with groundtruth ranges into classifier
/// training points: median RSSI per window (and beacon), range to the beacon
/// interpolated at the window time, majority label of the bucket. Points
/// beyond max_range or outside the groundtruth interval are dropped.
inline std::vector<TrainingPoint> build_training_points(
    const std::vector<RssiObservation>& obs, const std::vector<LosLabel>& labels,
    const std::vector<GroundtruthPose>& groundtruth, const BeaconMap& beacons, double window,
    double max_range = 10.0, MedianGrouping grouping = MedianGrouping::PerBeacon) {
  if (obs.size() != labels.size())
    throw DataError("build_training_points: labels do not cover the observation stream");
  if (obs.empty()) return {};

  struct Bucket {
    std::vector<double> rssi;
    int label_sum = 0;
    double range_sum = 0;  // averaged over member observations
    size_t count = 0;
  };
  const double t0 = obs.front().t;
  std::map<std::pair<int64_t, std::string>, Bucket> buckets;
  for (size_t i = 0; i < obs.size(); ++i) {
    const auto& o = obs[i];
    if (labels[i].beacon_id != o.beacon_id)
      throw DataError("build_training_points: label stream out of order at t=" +
                      std::to_string(o.t));
    const Beacon* b = beacons.find(o.beacon_id);
    if (b == nullptr) throw DataError("build_training_points: unknown beacon '" + o.beacon_id + "'");
    const auto pos = interpolate_position(groundtruth, o.t);
    if (!pos) continue;
    const double range = (*pos - b->position).norm();
    const auto k = static_cast<int64_t>(std::floor((o.t - t0) / window));
    std::string group = grouping == MedianGrouping::PerBeacon ? o.beacon_id : std::string();
    auto& bucket = buckets[{k, std::move(group)}];
    bucket.rssi.push_back(o.rssi);
    bucket.label_sum += labels[i].los ? 1 : -1;
    bucket.range_sum += range;
    ++bucket.count;
  }

  std::vector<TrainingPoint> out;
  for (auto& [key, bucket] : buckets) {
    if (bucket.label_sum == 0) continue;  // mixed LOS/NLOS bucket, ambiguous
    TrainingPoint p;
    p.distance = bucket.range_sum / static_cast<double>(bucket.count);
    p.rssi = detail::median_of(bucket.rssi);
    p.label = bucket.label_sum > 0 ? +1 : -1;
    if (p.distance > max_range) continue;
    out.push_back(p);
  }
  return out;
}

}  // namespace bleloc
