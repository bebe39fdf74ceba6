#pragma once

#include <Eigen/Core>
#include <cmath>
#include <random>
#include <vector>

#include "bleloc/common.hpp"
#include "bleloc/los_grid.hpp"
#include "bleloc/math.hpp"
#include "bleloc/pathloss.hpp"
#include "bleloc/types.hpp"

namespace bleloc {

/// State layout: [x, vx, y, vy] (m, m/s).
struct Particle {
  Eigen::Vector4d state = Eigen::Vector4d::Zero();
  double weight = 0;
};

struct ParticleSet {
  std::vector<Particle> particles;
  double receiver_height = 0;  // meters, fixed z of the receiver
  double t = 0;
  bool degenerate_reset = false;  // last weight update hit all-zero likelihoods

  size_t size() const { return particles.size(); }
};

/// Constant-velocity model: x += ts*vx per axis plus diagonal Gaussian noise
/// Q = diag(sigma_u^2, sigma_v^2, sigma_u^2, sigma_v^2).
struct MotionParams {
  double sigma_u = 0.1;   // m
  double sigma_v = 0.05;  // m/s
  double ts = 0.1;        // s

  void validate() const {
    if (!(ts > 0)) throw std::invalid_argument("MotionParams: ts must be positive");
    if (sigma_u < 0 || sigma_v < 0)
      throw std::invalid_argument("MotionParams: noise stds must be non-negative");
  }
};

enum class MeasurementMode { Gaussian, GaussianClassifier, Lognormal, LognormalClassifier };

inline bool uses_classifier(MeasurementMode m) {
  return m == MeasurementMode::GaussianClassifier || m == MeasurementMode::LognormalClassifier;
}

inline bool uses_lognormal(MeasurementMode m) {
  return m == MeasurementMode::Lognormal || m == MeasurementMode::LognormalClassifier;
}

struct MeasurementConfig {
  MeasurementMode mode = MeasurementMode::Gaussian;
  double sigma_n = 3.0;          // m, Gaussian range noise
  double sigma_ln = 0.4;         // dBm, log-normal RSSI spread
  double p_los_threshold = 0.4;
  double p_rand = 0.1;           // constant likelihood of the NLOS branch
  PathLossParams pathloss;
  const LosGrid* grid = nullptr;

  void validate() const {
    if (!(p_los_threshold > 0 && p_los_threshold < 1))
      throw std::invalid_argument("MeasurementConfig: p_los_threshold must be in (0,1)");
    if ((grid != nullptr) != uses_classifier(mode))
      throw std::invalid_argument(
          "MeasurementConfig: grid must be present exactly for classifier modes");
  }
};

/// Default NLOS-branch constants from the two likelihood families: 0.1 for
/// the Gaussian, (d0*sigma_ln*sqrt(2*pi))^-1 for the log-normal.
inline double default_p_rand(MeasurementMode mode, const PathLossParams& p, double sigma_ln) {
  if (uses_lognormal(mode)) return 1.0 / (p.d0 * sigma_ln * kSqrt2Pi);
  return 0.1;
}

struct PriorRegion {
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
};

inline ParticleSet init_particles(size_t n_p, const PriorRegion& region, double receiver_height,
                                  double sigma_v, std::mt19937_64& rng) {
  if (n_p < 2) throw std::invalid_argument("init_particles: need at least 2 particles");
  if (region.x_max < region.x_min || region.y_max < region.y_min)
    throw std::invalid_argument("init_particles: degenerate prior region");
  std::uniform_real_distribution<double> ux(region.x_min, region.x_max);
  std::uniform_real_distribution<double> uy(region.y_min, region.y_max);
  std::normal_distribution<double> nv(0.0, sigma_v);
  ParticleSet set;
  set.receiver_height = receiver_height;
  set.particles.resize(n_p);
  for (auto& p : set.particles) {
    p.state << ux(rng), nv(rng), uy(rng), nv(rng);
    p.weight = 1.0 / static_cast<double>(n_p);
  }
  return set;
}

inline ParticleSet predict(const ParticleSet& state, const MotionParams& motion,
                           std::mt19937_64& rng) {
  motion.validate();
  std::normal_distribution<double> nu(0.0, motion.sigma_u);
  std::normal_distribution<double> nv(0.0, motion.sigma_v);
  ParticleSet out = state;
  for (auto& p : out.particles) {
    p.state(0) += motion.ts * p.state(1) + nu(rng);
    p.state(1) += nv(rng);
    p.state(2) += motion.ts * p.state(3) + nu(rng);
    p.state(3) += nv(rng);
  }
  out.t += motion.ts;
  return out;
}

/// 3-D range from a planar receiver position at fixed height to a beacon.
inline double range_to_beacon(const Eigen::Vector2d& position, double receiver_height,
                              const Eigen::Vector3d& beacon) {
  const Eigen::Vector3d p(position.x(), position.y(), receiver_height);
  return (p - beacon).norm();
}

namespace detail {
inline double normalize_weights(ParticleSet& set) {
  double sum = 0;
  for (const auto& p : set.particles) sum += p.weight;
  if (sum > 0 && std::isfinite(sum)) {
    for (auto& p : set.particles) p.weight /= sum;
    set.degenerate_reset = false;
  } else {
    const double w = 1.0 / static_cast<double>(set.particles.size());
    for (auto& p : set.particles) p.weight = w;
    set.degenerate_reset = true;
  }
  return sum;
}
}  // namespace detail

/// One measurement update. Converts the observed RSSI to a range, evaluates
/// the per-particle likelihood for the configured model, gates it through
/// the classifier when enabled, and renormalizes. All-zero likelihoods reset
/// the weights to uniform and raise degenerate_reset.
inline ParticleSet weight_update(const ParticleSet& state, const RssiObservation& obs,
                                 const BeaconMap& beacons, const MeasurementConfig& cfg) {
  cfg.validate();
  const Beacon* beacon = beacons.find(obs.beacon_id);
  if (beacon == nullptr)
    throw DataError("weight_update: unknown beacon id '" + obs.beacon_id + "'");

  const double z = distance_from_rssi(cfg.pathloss, obs.rssi);
  const bool lognormal = uses_lognormal(cfg.mode);
  const bool classify = uses_classifier(cfg.mode);
  const double inv_sigma_n = 1.0 / cfg.sigma_n;

  ParticleSet out = state;
  for (auto& p : out.particles) {
    const double h =
        std::max(range_to_beacon({p.state(0), p.state(2)}, out.receiver_height, beacon->position),
                 1e-9);
    double likelihood;
    if (lognormal)
      likelihood = lognormal_range_density(cfg.pathloss, cfg.sigma_ln, h, z);
    else
      likelihood = norm_pdf((z - h) * inv_sigma_n) * inv_sigma_n;
    if (classify) {
      const double p_los = cfg.grid->query(h, obs.rssi);
      likelihood = p_los > cfg.p_los_threshold ? p_los * likelihood : cfg.p_rand;
    }
    p.weight *= likelihood;
  }
  detail::normalize_weights(out);
  return out;
}

/// (sum of squared weights)^-1, in [1, n_p] for normalized weights.
inline double effective_sample_size(const ParticleSet& state) {
  double s = 0;
  for (const auto& p : state.particles) s += p.weight * p.weight;
  return 1.0 / s;
}

/// Systematic resampling with a single uniform offset; offspring counts of
/// every particle are floor or ceil of n_p * weight. Weights reset uniform.
inline ParticleSet systematic_resample(const ParticleSet& state, std::mt19937_64& rng) {
  const size_t n = state.particles.size();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double offset = u01(rng) / static_cast<double>(n);

  ParticleSet out = state;
  out.particles.clear();
  out.particles.reserve(n);
  double cumulative = state.particles[0].weight;
  size_t i = 0;
  for (size_t j = 0; j < n; ++j) {
    const double pointer = offset + static_cast<double>(j) / static_cast<double>(n);
    while (pointer > cumulative && i + 1 < n) {
      ++i;
      cumulative += state.particles[i].weight;
    }
    out.particles.push_back(state.particles[i]);
    out.particles.back().weight = 1.0 / static_cast<double>(n);
  }
  return out;
}

/// Weighted mean of particle positions.
inline Eigen::Vector2d estimate(const ParticleSet& state) {
  Eigen::Vector2d e = Eigen::Vector2d::Zero();
  for (const auto& p : state.particles) e += p.weight * Eigen::Vector2d(p.state(0), p.state(2));
  return e;
}

struct StepResult {
  ParticleSet state;
  double ess = 0;       // after the weight updates, before any resampling
  bool resampled = false;
};

/// One filter cycle: motion prediction, sequential weight updates for every
/// observation in the batch, and systematic resampling when the effective
/// sample size drops below n_thr.
inline StepResult step(const ParticleSet& state, const std::vector<RssiObservation>& obs_batch,
                       const BeaconMap& beacons, const MotionParams& motion,
                       const MeasurementConfig& cfg, double n_thr, std::mt19937_64& rng) {
  StepResult res;
  res.state = predict(state, motion, rng);
  for (const auto& obs : obs_batch) res.state = weight_update(res.state, obs, beacons, cfg);
  res.ess = effective_sample_size(res.state);
  if (res.ess < n_thr) {
    res.state = systematic_resample(res.state, rng);
    res.resampled = true;
  }
  return res;
}

}  // namespace bleloc
