#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bleloc/common.hpp"
#include "bleloc/gpc.hpp"
#include "bleloc/kdtree.hpp"

namespace bleloc {

struct GridBounds {
  double d_min = 0, d_max = 10;      // meters
  double r_min = -100, r_max = -40;  // dBm
};

/// Classifier predictions precomputed on a regular (distance, RSSI) lattice,
/// indexed by a kd-tree in resolution-normalized coordinates so the two axes
/// are commensurate. Immutable after build; queries need no synchronization.
class LosGrid {
 public:
  LosGrid() = default;

  LosGrid(GridBounds bounds, double res_d, double res_r, std::vector<double> p_los)
      : bounds_(bounds), res_d_(res_d), res_r_(res_r), p_(std::move(p_los)) {
    n_d_ = axis_count(bounds_.d_min, bounds_.d_max, res_d_);
    n_r_ = axis_count(bounds_.r_min, bounds_.r_max, res_r_);
    if (p_.size() != static_cast<size_t>(n_d_) * static_cast<size_t>(n_r_))
      throw DataError("LosGrid: node array does not match bounds/resolution");
    for (double v : p_)
      if (!(v >= 0.0 && v <= 1.0)) throw DataError("LosGrid: p_los outside [0,1]");
    build_index();
  }

  static int64_t axis_count(double lo, double hi, double res) {
    if (!(hi > lo)) throw std::invalid_argument("LosGrid: degenerate bounds");
    if (!(res > 0)) throw std::invalid_argument("LosGrid: resolution must be positive");
    return static_cast<int64_t>(std::ceil((hi - lo) / res)) + 1;
  }

  const GridBounds& bounds() const { return bounds_; }
  double res_d() const { return res_d_; }
  double res_r() const { return res_r_; }
  int64_t n_d() const { return n_d_; }
  int64_t n_r() const { return n_r_; }
  size_t node_count() const { return p_.size(); }
  const std::vector<double>& values() const { return p_; }

  /// Node coordinates of the row-major node index.
  std::pair<double, double> node_coords(size_t idx) const {
    const auto i_d = static_cast<int64_t>(idx) / n_r_;
    const auto i_r = static_cast<int64_t>(idx) % n_r_;
    return {bounds_.d_min + static_cast<double>(i_d) * res_d_,
            bounds_.r_min + static_cast<double>(i_r) * res_r_};
  }

  /// Nearest-node lookup; out-of-bounds queries clamp to the boundary.
  double query(double distance, double rssi, size_t* visited = nullptr) const {
    const double d = std::clamp(distance, bounds_.d_min, bounds_.d_max);
    const double r = std::clamp(rssi, bounds_.r_min, bounds_.r_max);
    const size_t idx = index_.nearest({d / res_d_, r / res_r_}, visited);
    return p_[idx];
  }

  /// Bilinear interpolation over the enclosing cell (accuracy studies; the
  /// production path is nearest-node).
  double query_bilinear(double distance, double rssi) const {
    const double d = std::clamp(distance, bounds_.d_min, bounds_.d_max);
    const double r = std::clamp(rssi, bounds_.r_min, bounds_.r_max);
    const double fd = (d - bounds_.d_min) / res_d_;
    const double fr = (r - bounds_.r_min) / res_r_;
    const auto i0 = std::min(static_cast<int64_t>(fd), n_d_ - 2);
    const auto j0 = std::min(static_cast<int64_t>(fr), n_r_ - 2);
    const double ad = fd - static_cast<double>(i0);
    const double ar = fr - static_cast<double>(j0);
    auto at = [&](int64_t i, int64_t j) { return p_[static_cast<size_t>(i * n_r_ + j)]; };
    return (1 - ad) * (1 - ar) * at(i0, j0) + ad * (1 - ar) * at(i0 + 1, j0) +
           (1 - ad) * ar * at(i0, j0 + 1) + ad * ar * at(i0 + 1, j0 + 1);
  }

 private:
  void build_index() {
    std::vector<KdTree2::Point> pts(p_.size());
    for (size_t i = 0; i < p_.size(); ++i) {
      const auto [d, r] = node_coords(i);
      pts[i] = {d / res_d_, r / res_r_};
    }
    index_ = KdTree2(std::move(pts));
  }

  GridBounds bounds_;
  double res_d_ = 0, res_r_ = 0;
  int64_t n_d_ = 0, n_r_ = 0;
  std::vector<double> p_;
  KdTree2 index_;
};

/// Evaluates the classifier on every lattice node. Node count is capped to
/// keep accidental resolutions from exhausting memory.
inline LosGrid build_grid(const GpcModel& model, const GridBounds& bounds, double res_d,
                          double res_r, size_t node_cap = 10'000'000) {
  const int64_t n_d = LosGrid::axis_count(bounds.d_min, bounds.d_max, res_d);
  const int64_t n_r = LosGrid::axis_count(bounds.r_min, bounds.r_max, res_r);
  const auto total = static_cast<size_t>(n_d) * static_cast<size_t>(n_r);
  if (total > node_cap)
    throw ConfigError("build_grid: " + std::to_string(total) + " nodes exceeds cap of " +
                      std::to_string(node_cap));
  std::vector<double> p(total);
  for (int64_t i = 0; i < n_d; ++i) {
    const double d = bounds.d_min + static_cast<double>(i) * res_d;
    for (int64_t j = 0; j < n_r; ++j) {
      const double r = bounds.r_min + static_cast<double>(j) * res_r;
      p[static_cast<size_t>(i * n_r + j)] = predict(model, {d, r}).p_los;
    }
  }
  return LosGrid(bounds, res_d, res_r, std::move(p));
}

inline void save_grid(const std::string& path, const LosGrid& grid) {
  nlohmann::json j;
  j["version"] = 1;
  j["bounds"] = {{"d_min", grid.bounds().d_min},
                 {"d_max", grid.bounds().d_max},
                 {"r_min", grid.bounds().r_min},
                 {"r_max", grid.bounds().r_max}};
  j["resolution"] = {grid.res_d(), grid.res_r()};
  j["p_los"] = grid.values();
  auto out = detail::open_output(path);
  out << j.dump() << '\n';
}

inline LosGrid load_grid(const std::string& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("version").get<int>() != 1)
      throw DataError(path + ": unsupported grid file version");
    GridBounds b;
    b.d_min = j.at("bounds").at("d_min").get<double>();
    b.d_max = j.at("bounds").at("d_max").get<double>();
    b.r_min = j.at("bounds").at("r_min").get<double>();
    b.r_max = j.at("bounds").at("r_max").get<double>();
    const double res_d = j.at("resolution")[0].get<double>();
    const double res_r = j.at("resolution")[1].get<double>();
    auto p = j.at("p_los").get<std::vector<double>>();
    return LosGrid(b, res_d, res_r, std::move(p));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace bleloc
