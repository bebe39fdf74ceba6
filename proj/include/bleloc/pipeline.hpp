#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bleloc/crlb.hpp"
#include "bleloc/io.hpp"
#include "bleloc/particle_filter.hpp"
#include "bleloc/types.hpp"

namespace bleloc {

/// Observations grouped into consecutive windows of the filter sampling
/// time; empty windows become prediction-only steps.
inline std::vector<std::vector<RssiObservation>> bucket_observations(
    const std::vector<RssiObservation>& obs, double window) {
  if (!(window > 0)) throw std::invalid_argument("bucket_observations: window must be positive");
  std::vector<std::vector<RssiObservation>> out;
  if (obs.empty()) return out;
  const double t0 = obs.front().t;
  const auto last = static_cast<int64_t>(std::floor((obs.back().t - t0) / window));
  out.resize(last + 1);
  for (const auto& o : obs) {
    auto k = static_cast<int64_t>(std::floor((o.t - t0) / window));
    out[std::min<int64_t>(k, last)].push_back(o);
  }
  return out;
}

/// Runs the SIR filter over a full observation stream and returns one trace
/// row per step.
inline std::vector<TraceRow> run_filter(const std::vector<RssiObservation>& obs,
                                        const BeaconMap& beacons, const MotionParams& motion,
                                        const MeasurementConfig& cfg, size_t n_p, double n_thr,
                                        const PriorRegion& prior, double receiver_height,
                                        uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParticleSet state = init_particles(n_p, prior, receiver_height, motion.sigma_v, rng);
  if (!obs.empty()) state.t = obs.front().t;

  std::vector<TraceRow> trace;
  const auto batches = bucket_observations(obs, motion.ts);
  trace.reserve(batches.size());
  const double t0 = obs.empty() ? 0.0 : obs.front().t;
  for (size_t k = 0; k < batches.size(); ++k) {
    const auto res = step(state, batches[k], beacons, motion, cfg, n_thr, rng);
    state = res.state;
    TraceRow row;
    row.t = t0 + static_cast<double>(k) * motion.ts;
    const Eigen::Vector2d e = estimate(state);
    row.est_x = e.x();
    row.est_y = e.y();
    row.ess = res.ess;
    row.resampled = res.resampled;
    trace.push_back(row);
  }
  return trace;
}

/// Planar estimate errors of a trace against interpolated groundtruth.
inline std::vector<double> trace_errors(const std::vector<TraceRow>& trace,
                                        const std::vector<GroundtruthPose>& groundtruth) {
  std::vector<double> errors;
  errors.reserve(trace.size());
  for (const auto& row : trace) {
    const auto pos = interpolate_position(groundtruth, row.t);
    if (!pos) continue;
    const double dx = row.est_x - pos->x();
    const double dy = row.est_y - pos->y();
    errors.push_back(std::sqrt(dx * dx + dy * dy));
  }
  return errors;
}

/// Axis-aligned prior region covering the beacons with a margin.
inline PriorRegion default_prior_region(const BeaconMap& beacons, double margin = 2.0) {
  PriorRegion r;
  r.x_min = r.y_min = std::numeric_limits<double>::infinity();
  r.x_max = r.y_max = -std::numeric_limits<double>::infinity();
  for (const auto& b : beacons.entries) {
    r.x_min = std::min(r.x_min, b.position.x());
    r.x_max = std::max(r.x_max, b.position.x());
    r.y_min = std::min(r.y_min, b.position.y());
    r.y_max = std::max(r.y_max, b.position.y());
  }
  r.x_min -= margin;
  r.x_max += margin;
  r.y_min -= margin;
  r.y_max += margin;
  return r;
}

}  // namespace bleloc
