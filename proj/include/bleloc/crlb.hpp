#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bleloc/common.hpp"
#include "bleloc/particle_filter.hpp"
#include "bleloc/types.hpp"

namespace bleloc {

/// Per-step beacon visibility extracted from an observation stream:
/// consecutive windows of the filter sampling time, anchored at the first
/// observation. Shared by the filter driver and the bound so both see the
/// same discretization.
struct MeasurementSchedule {
  std::vector<double> times;                 // window start per step
  std::vector<std::vector<int>> beacon_idx;  // observed beacon indices per step
};

inline MeasurementSchedule make_schedule(const std::vector<RssiObservation>& obs,
                                         const BeaconMap& beacons, double window) {
  if (!(window > 0)) throw std::invalid_argument("make_schedule: window must be positive");
  MeasurementSchedule sched;
  if (obs.empty()) return sched;
  const double t0 = obs.front().t;
  const auto last = static_cast<int64_t>(std::floor((obs.back().t - t0) / window));
  sched.times.resize(last + 1);
  sched.beacon_idx.resize(last + 1);
  for (int64_t k = 0; k <= last; ++k) sched.times[k] = t0 + static_cast<double>(k) * window;
  for (const auto& o : obs) {
    const auto k = static_cast<int64_t>(std::floor((o.t - t0) / window));
    const int idx = beacons.index_of(o.beacon_id);
    if (idx < 0) throw DataError("make_schedule: unknown beacon id '" + o.beacon_id + "'");
    sched.beacon_idx[std::min<int64_t>(k, last)].push_back(idx);
  }
  return sched;
}

/// One posterior information recursion step:
/// J' = (Q + F J^-1 F^T)^-1 + H^T R^-1 H.
inline Eigen::Matrix4d crlb_recursion_step(const Eigen::Matrix4d& info, const Eigen::Matrix4d& F,
                                           const Eigen::Matrix4d& Q, const Eigen::MatrixXd& H,
                                           const Eigen::MatrixXd& R) {
  const Eigen::Matrix4d cov = info.inverse();
  Eigen::Matrix4d predicted = (Q + F * cov * F.transpose()).inverse();
  if (H.rows() > 0) predicted += H.transpose() * R.inverse() * H;
  return predicted;
}

struct CrlbStep {
  double t = 0;
  Eigen::Matrix4d info = Eigen::Matrix4d::Zero();
  double position_bound = 0;  // sqrt of the position block trace of J^-1
};

struct CrlbTrace {
  std::vector<CrlbStep> steps;
  double rms_bound = 0;  // sqrt of the mean position-block trace
};

inline Eigen::Matrix4d cv_transition(double ts) {
  Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
  F(0, 1) = ts;
  F(2, 3) = ts;
  return F;
}

inline Eigen::Matrix4d cv_process_noise(const MotionParams& motion) {
  Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
  Q(0, 0) = motion.sigma_u * motion.sigma_u;
  Q(1, 1) = motion.sigma_v * motion.sigma_v;
  Q(2, 2) = motion.sigma_u * motion.sigma_u;
  Q(3, 3) = motion.sigma_v * motion.sigma_v;
  return Q;
}

/// Posterior Cramer-Rao bound along a recorded trajectory for the range
/// measurement models. Classifier gating only discards information, so the
/// gated variants share their base model's bound. For the log-normal model
/// the measurement is treated in log-range, with noise scale
/// sigma_ln*ln(10)/(10*|gamma|).
inline CrlbTrace pcrlb_trace(const std::vector<GroundtruthPose>& groundtruth,
                             const MeasurementSchedule& schedule, const BeaconMap& beacons,
                             const MotionParams& motion, const MeasurementConfig& cfg,
                             const Eigen::Matrix4d& prior_cov, int warmup = 10) {
  motion.validate();
  if (groundtruth.empty()) throw std::invalid_argument("pcrlb_trace: empty groundtruth");
  const Eigen::Matrix4d F = cv_transition(motion.ts);
  const Eigen::Matrix4d Q = cv_process_noise(motion);
  const bool lognormal = uses_lognormal(cfg.mode);
  const double noise_var = lognormal
                               ? std::pow(lognormal_range_scale(cfg.pathloss, cfg.sigma_ln), 2)
                               : cfg.sigma_n * cfg.sigma_n;

  CrlbTrace trace;
  Eigen::Matrix4d J = prior_cov.inverse();
  double sum_trace = 0;
  size_t counted = 0;
  for (size_t k = 0; k < schedule.times.size(); ++k) {
    const double t = schedule.times[k];
    const auto pos = interpolate_position(groundtruth, t);
    if (!pos) continue;

    const auto& visible = schedule.beacon_idx[k];
    Eigen::MatrixXd H(visible.size(), 4);
    Eigen::MatrixXd R = noise_var * Eigen::MatrixXd::Identity(visible.size(), visible.size());
    for (size_t m = 0; m < visible.size(); ++m) {
      const Eigen::Vector3d& b = beacons.entries[visible[m]].position;
      const double dx = pos->x() - b.x();
      const double dy = pos->y() - b.y();
      const double dz = pos->z() - b.z();
      const double r = std::max(std::sqrt(dx * dx + dy * dy + dz * dz), 1e-9);
      // d range/dx and, for log-range, a further 1/r
      const double scale = lognormal ? 1.0 / (r * r) : 1.0 / r;
      H(m, 0) = dx * scale;
      H(m, 1) = 0;
      H(m, 2) = dy * scale;
      H(m, 3) = 0;
    }
    J = crlb_recursion_step(J, F, Q, H, R);

    Eigen::FullPivLU<Eigen::Matrix4d> lu(J);
    if (!lu.isInvertible()) {
      if (static_cast<int>(k) >= warmup)
        throw NumericError("pcrlb_trace: singular information matrix at step " +
                           std::to_string(k));
      continue;
    }
    const Eigen::Matrix4d cov = lu.inverse();
    CrlbStep stepv;
    stepv.t = t;
    stepv.info = J;
    const double pos_trace = cov(0, 0) + cov(2, 2);
    stepv.position_bound = std::sqrt(pos_trace);
    trace.steps.push_back(stepv);
    sum_trace += pos_trace;
    ++counted;
  }
  if (counted == 0) throw NumericError("pcrlb_trace: no usable steps");
  trace.rms_bound = std::sqrt(sum_trace / static_cast<double>(counted));
  return trace;
}

/// eta = sqrt(CRLB)/RMSE * 100.
inline double efficiency(double crlb_rms, double rmse_value) {
  if (!(rmse_value > 0)) throw std::invalid_argument("efficiency: rmse must be positive");
  return 100.0 * crlb_rms / rmse_value;
}

}  // namespace bleloc
