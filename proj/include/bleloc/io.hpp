#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bleloc/common.hpp"
#include "bleloc/types.hpp"

namespace bleloc {

namespace detail {

/// Shortest round-trip representation of a double.
inline std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

/// Iterates non-blank CSV rows, skipping an optional header on the first
/// content line (detected by a non-numeric first field).
template <typename RowFn>
void for_each_csv_row(const std::string& path, size_t n_fields, RowFn&& fn) {
  auto in = open_input(path);
  std::string line;
  size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    auto fields = split_csv(sv);
    if (first_content) {
      first_content = false;
      double probe;
      if (!parse_double(fields[0], probe)) continue;  // header line
    }
    if (fields.size() != n_fields)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(n_fields) + " fields, got " + std::to_string(fields.size()));
    fn(fields, line_no);
  }
}

inline double field_as_double(const std::vector<std::string_view>& fields, size_t idx,
                              const std::string& path, size_t line_no) {
  double v;
  if (!parse_double(fields[idx], v) || !std::isfinite(v))
    throw DataError(path + ":" + std::to_string(line_no) + ": cannot parse '" +
                    std::string(fields[idx]) + "' as a finite number");
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// RSSI log CSV: t_seconds,beacon_id,rssi_dbm
// ---------------------------------------------------------------------------

inline std::vector<RssiObservation> load_rssi_log(const std::string& path) {
  std::vector<RssiObservation> out;
  detail::for_each_csv_row(path, 3, [&](const auto& f, size_t line_no) {
    RssiObservation o;
    o.t = detail::field_as_double(f, 0, path, line_no);
    o.beacon_id = std::string(f[1]);
    o.rssi = detail::field_as_double(f, 2, path, line_no);
    if (o.beacon_id.empty())
      throw DataError(path + ":" + std::to_string(line_no) + ": empty beacon id");
    if (!out.empty() && o.t < out.back().t)
      throw DataError(path + ":" + std::to_string(line_no) + ": timestamps must be non-decreasing");
    out.push_back(std::move(o));
  });
  return out;
}

inline void save_rssi_log(const std::string& path, const std::vector<RssiObservation>& obs) {
  auto out = detail::open_output(path);
  out << "t_seconds,beacon_id,rssi_dbm\n";
  for (const auto& o : obs)
    out << detail::fmt_double(o.t) << ',' << o.beacon_id << ',' << detail::fmt_double(o.rssi)
        << '\n';
}

// ---------------------------------------------------------------------------
// Groundtruth CSV: t_seconds,x,y,z
// ---------------------------------------------------------------------------

inline std::vector<GroundtruthPose> load_groundtruth(const std::string& path) {
  std::vector<GroundtruthPose> out;
  detail::for_each_csv_row(path, 4, [&](const auto& f, size_t line_no) {
    GroundtruthPose p;
    p.t = detail::field_as_double(f, 0, path, line_no);
    p.position = {detail::field_as_double(f, 1, path, line_no),
                  detail::field_as_double(f, 2, path, line_no),
                  detail::field_as_double(f, 3, path, line_no)};
    if (!out.empty() && p.t <= out.back().t)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": timestamps must be strictly increasing");
    out.push_back(std::move(p));
  });
  return out;
}

inline void save_groundtruth(const std::string& path, const std::vector<GroundtruthPose>& gt) {
  auto out = detail::open_output(path);
  out << "t_seconds,x,y,z\n";
  for (const auto& p : gt)
    out << detail::fmt_double(p.t) << ',' << detail::fmt_double(p.position.x()) << ','
        << detail::fmt_double(p.position.y()) << ',' << detail::fmt_double(p.position.z()) << '\n';
}

// ---------------------------------------------------------------------------
// LOS label CSV: t,beacon_id,los(0/1)
// ---------------------------------------------------------------------------

inline std::vector<LosLabel> load_labels(const std::string& path) {
  std::vector<LosLabel> out;
  detail::for_each_csv_row(path, 3, [&](const auto& f, size_t line_no) {
    LosLabel l;
    l.t = detail::field_as_double(f, 0, path, line_no);
    l.beacon_id = std::string(f[1]);
    const double v = detail::field_as_double(f, 2, path, line_no);
    if (v != 0.0 && v != 1.0)
      throw DataError(path + ":" + std::to_string(line_no) + ": los flag must be 0 or 1");
    l.los = v != 0.0;
    out.push_back(std::move(l));
  });
  return out;
}

inline void save_labels(const std::string& path, const std::vector<LosLabel>& labels) {
  auto out = detail::open_output(path);
  out << "t_seconds,beacon_id,los\n";
  for (const auto& l : labels)
    out << detail::fmt_double(l.t) << ',' << l.beacon_id << ',' << (l.los ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------
// Beacon map (structured key-value file)
// ---------------------------------------------------------------------------

inline BeaconMap load_beacon_map(const std::string& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  BeaconMap map;
  try {
    for (const auto& b : j.at("beacons")) {
      Beacon beacon;
      beacon.id = b.at("id").get<std::string>();
      const auto& pos = b.at("position");
      if (pos.size() != 3) throw DataError(path + ": beacon position must have 3 components");
      beacon.position = {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()};
      map.entries.push_back(std::move(beacon));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  map.validate();
  return map;
}

inline void save_beacon_map(const std::string& path, const BeaconMap& map) {
  nlohmann::json j;
  j["version"] = 1;
  j["beacons"] = nlohmann::json::array();
  for (const auto& b : map.entries)
    j["beacons"].push_back(
        {{"id", b.id}, {"position", {b.position.x(), b.position.y(), b.position.z()}}});
  auto out = detail::open_output(path);
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Filter trace CSV: t,est_x,est_y,ess,resampled(0/1)
// ---------------------------------------------------------------------------

struct TraceRow {
  double t = 0;
  double est_x = 0;
  double est_y = 0;
  double ess = 0;
  bool resampled = false;
};

inline std::vector<TraceRow> load_trace(const std::string& path) {
  std::vector<TraceRow> out;
  detail::for_each_csv_row(path, 5, [&](const auto& f, size_t line_no) {
    TraceRow r;
    r.t = detail::field_as_double(f, 0, path, line_no);
    r.est_x = detail::field_as_double(f, 1, path, line_no);
    r.est_y = detail::field_as_double(f, 2, path, line_no);
    r.ess = detail::field_as_double(f, 3, path, line_no);
    r.resampled = detail::field_as_double(f, 4, path, line_no) != 0.0;
    out.push_back(r);
  });
  return out;
}

inline void save_trace(const std::string& path, const std::vector<TraceRow>& rows) {
  auto out = detail::open_output(path);
  out << "t,est_x,est_y,ess,resampled\n";
  for (const auto& r : rows)
    out << detail::fmt_double(r.t) << ',' << detail::fmt_double(r.est_x) << ','
        << detail::fmt_double(r.est_y) << ',' << detail::fmt_double(r.ess) << ','
        << (r.resampled ? 1 : 0) << '\n';
}

}  // namespace bleloc
