#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>

#include "bleloc/io.hpp"
#include "bleloc/preprocess.hpp"
#include "bleloc/types.hpp"
#include "test_util.hpp"

using namespace bleloc;

namespace {

BeaconMap two_beacons() {
  BeaconMap map;
  map.entries.push_back({"b1", {0.0, 0.0, 2.0}});
  map.entries.push_back({"b2", {5.0, 0.0, 2.0}});
  return map;
}

}  // namespace

TEST(RssiLog, ParsesPlainRows) {
  testutil::TempDir dir;
  const auto path = dir.file("log.csv");
  testutil::write_file(path, "0.10,b1,-58\n0.20,b2,-60.5\n");
  const auto obs = load_rssi_log(path);
  ASSERT_EQ(obs.size(), 2u);
  EXPECT_DOUBLE_EQ(obs[0].t, 0.10);
  EXPECT_EQ(obs[0].beacon_id, "b1");
  EXPECT_DOUBLE_EQ(obs[0].rssi, -58);
  EXPECT_DOUBLE_EQ(obs[1].rssi, -60.5);
}

TEST(RssiLog, EmptyFileGivesEmptyList) {
  testutil::TempDir dir;
  const auto path = dir.file("log.csv");
  testutil::write_file(path, "");
  EXPECT_TRUE(load_rssi_log(path).empty());
}

TEST(RssiLog, OptionalHeaderSkipped) {
  testutil::TempDir dir;
  const auto path = dir.file("log.csv");
  testutil::write_file(path, "t_seconds,beacon_id,rssi_dbm\n0.1,b1,-58\n");
  EXPECT_EQ(load_rssi_log(path).size(), 1u);
}

TEST(RssiLog, MalformedRowNamesLine) {
  testutil::TempDir dir;
  const auto path = dir.file("log.csv");
  testutil::write_file(path, "0.1,b1,-58\nx,b1,-58\n");
  try {
    load_rssi_log(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(RssiLog, MalformedFirstRowIsError) {
  // a bad numeric in a non-header first row: treated as header only when the
  // first field is non-numeric, so a broken rssi column must still throw
  testutil::TempDir dir;
  const auto path = dir.file("log.csv");
  testutil::write_file(path, "0.1,b1,oops\n");
  EXPECT_THROW(load_rssi_log(path), DataError);
}

TEST(RssiLog, DecreasingTimestampsRejected) {
  testutil::TempDir dir;
  const auto path = dir.file("log.csv");
  testutil::write_file(path, "0.2,b1,-58\n0.1,b1,-59\n");
  EXPECT_THROW(load_rssi_log(path), DataError);
}

TEST(RssiLog, RoundTripExact) {
  testutil::TempDir dir;
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> ud(0, 100);
  std::vector<RssiObservation> obs;
  double t = 0;
  for (int i = 0; i < 200; ++i) {
    t += ud(gen) / 100.0;
    obs.push_back({t, i % 2 == 0 ? "b1" : "b2", -30.0 - ud(gen)});
  }
  const auto path = dir.file("log.csv");
  save_rssi_log(path, obs);
  const auto back = load_rssi_log(path);
  ASSERT_EQ(back.size(), obs.size());
  for (size_t i = 0; i < obs.size(); ++i) {
    EXPECT_EQ(back[i].t, obs[i].t);
    EXPECT_EQ(back[i].beacon_id, obs[i].beacon_id);
    EXPECT_EQ(back[i].rssi, obs[i].rssi);
  }
}

TEST(Groundtruth, RoundTripAndMonotonicity) {
  testutil::TempDir dir;
  std::vector<GroundtruthPose> gt = {{0.0, {1, 2, 3}}, {0.5, {1.1, 2.2, 3.3}}};
  const auto path = dir.file("gt.csv");
  save_groundtruth(path, gt);
  const auto back = load_groundtruth(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].position, gt[1].position);

  testutil::write_file(path, "0.5,0,0,0\n0.5,1,1,1\n");
  EXPECT_THROW(load_groundtruth(path), DataError);
}

TEST(BeaconMapFile, RoundTripAndValidation) {
  testutil::TempDir dir;
  const auto path = dir.file("beacons.json");
  save_beacon_map(path, two_beacons());
  const auto map = load_beacon_map(path);
  ASSERT_EQ(map.entries.size(), 2u);
  EXPECT_EQ(map.entries[1].id, "b2");
  EXPECT_DOUBLE_EQ(map.entries[1].position.x(), 5.0);

  testutil::write_file(path, R"({"beacons":[{"id":"a","position":[0,0,0]},{"id":"a","position":[1,1,1]}]})");
  EXPECT_THROW(load_beacon_map(path), DataError);
}

TEST(InterpolatePosition, LinearBetweenPoses) {
  std::vector<GroundtruthPose> gt = {{0.0, {0, 0, 1}}, {1.0, {2, 4, 1}}};
  const auto p = interpolate_position(gt, 0.25);
  ASSERT_TRUE(p.has_value());
  EXPECT_NEAR(p->x(), 0.5, 1e-12);
  EXPECT_NEAR(p->y(), 1.0, 1e-12);
  EXPECT_FALSE(interpolate_position(gt, 1.5).has_value());
  EXPECT_FALSE(interpolate_position(gt, -0.1).has_value());
}

// ---------------------------------------------------------------------------
// median_window_filter
// ---------------------------------------------------------------------------

TEST(MedianWindow, OddBucketTakesMiddle) {
  std::vector<RssiObservation> obs = {
      {0.001, "b1", -50}, {0.002, "b1", -60}, {0.003, "b1", -90}};
  const auto out = median_window_filter(obs, 0.010);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0].rssi, -60);
}

TEST(MedianWindow, SingleObservationIsIdentity) {
  std::vector<RssiObservation> obs = {{0.004, "b1", -72}};
  const auto out = median_window_filter(obs, 0.010);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0].rssi, -72);
  EXPECT_DOUBLE_EQ(out[0].t, 0.004);
}

TEST(MedianWindow, EvenBucketAveragesCentralPair) {
  std::vector<RssiObservation> obs = {{0.001, "b1", -50}, {0.002, "b1", -60}};
  const auto out = median_window_filter(obs, 0.010);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0].rssi, -55);
}

TEST(MedianWindow, GroupingModes) {
  std::vector<RssiObservation> obs = {
      {0.001, "b1", -50}, {0.002, "b2", -70}, {0.012, "b1", -55}};
  const auto per_beacon = median_window_filter(obs, 0.010, MedianGrouping::PerBeacon);
  EXPECT_EQ(per_beacon.size(), 3u);  // (w0,b1), (w0,b2), (w1,b1)
  const auto merged = median_window_filter(obs, 0.010, MedianGrouping::AllBeacons);
  ASSERT_EQ(merged.size(), 2u);
  EXPECT_DOUBLE_EQ(merged[0].rssi, -60);  // median of {-50,-70}
}

TEST(MedianWindow, OutputBoundedByBucketAndCountsNonEmpty) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ut(0, 1.0);
  std::uniform_real_distribution<double> ur(-90, -40);
  std::vector<RssiObservation> obs;
  for (int i = 0; i < 500; ++i) obs.push_back({ut(gen), "b1", ur(gen)});
  std::sort(obs.begin(), obs.end(),
            [](const auto& a, const auto& b) { return a.t < b.t; });
  const double window = 0.05;
  const auto out = median_window_filter(obs, window);

  // reference bucketing
  std::map<int64_t, std::pair<double, double>> minmax;
  for (const auto& o : obs) {
    const auto k = static_cast<int64_t>(std::floor((o.t - obs.front().t) / window));
    auto it = minmax.find(k);
    if (it == minmax.end())
      minmax[k] = {o.rssi, o.rssi};
    else {
      it->second.first = std::min(it->second.first, o.rssi);
      it->second.second = std::max(it->second.second, o.rssi);
    }
  }
  ASSERT_EQ(out.size(), minmax.size());
  for (const auto& s : out) {
    const auto k = static_cast<int64_t>(std::llround((s.t - obs.front().t) / window));
    EXPECT_GE(s.rssi, minmax[k].first);
    EXPECT_LE(s.rssi, minmax[k].second);
  }
}

TEST(MedianWindow, RejectsNonPositiveWindow) {
  EXPECT_THROW(median_window_filter({}, 0.0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// downsample
// ---------------------------------------------------------------------------

namespace {
std::vector<TrainingPoint> make_points(size_t n_pos, size_t n_neg) {
  std::vector<TrainingPoint> pts;
  for (size_t i = 0; i < n_pos; ++i) pts.push_back({1.0 + i, -50.0, +1});
  for (size_t i = 0; i < n_neg; ++i) pts.push_back({1.0 + i, -70.0, -1});
  return pts;
}
}  // namespace

TEST(Downsample, HitsTargetCount) {
  const auto pts = make_points(1000, 1000);
  EXPECT_EQ(downsample(pts, 1000, 42).size(), 1000u);
}

TEST(Downsample, SmallInputUnchanged) {
  const auto pts = make_points(5, 5);
  const auto out = downsample(pts, 100, 42);
  ASSERT_EQ(out.size(), 10u);
  for (size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].label, pts[i].label);
}

TEST(Downsample, LabelBalancePreserved) {
  const auto pts = make_points(50, 50);
  const auto out = downsample(pts, 10, 9);
  int pos = 0;
  for (const auto& p : out) pos += p.label > 0 ? 1 : 0;
  EXPECT_NEAR(pos, 5, 1);
  EXPECT_EQ(out.size(), 10u);
}

TEST(Downsample, SkewedBalanceWithinOnePoint) {
  const auto pts = make_points(300, 100);
  const auto out = downsample(pts, 100, 1);
  int pos = 0;
  for (const auto& p : out) pos += p.label > 0 ? 1 : 0;
  EXPECT_NEAR(pos, 75, 1);
}

TEST(Downsample, DeterministicGivenSeed) {
  const auto pts = make_points(500, 500);
  const auto a = downsample(pts, 200, 123);
  const auto b = downsample(pts, 200, 123);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].distance, b[i].distance);
    EXPECT_EQ(a[i].label, b[i].label);
  }
  const auto c = downsample(pts, 200, 124);
  bool any_diff = false;
  for (size_t i = 0; i < a.size(); ++i) any_diff |= a[i].distance != c[i].distance;
  EXPECT_TRUE(any_diff);
}

// ---------------------------------------------------------------------------
// build_training_points
// ---------------------------------------------------------------------------

TEST(BuildTrainingPoints, PairsRangeAndMedianRssi) {
  const auto beacons = two_beacons();
  std::vector<GroundtruthPose> gt = {{0.0, {0, 0, 2}}, {10.0, {0, 10, 2}}};
  std::vector<RssiObservation> obs = {
      {1.0, "b1", -50}, {1.001, "b1", -52}, {1.002, "b1", -58}};
  std::vector<LosLabel> labels = {{1.0, "b1", true}, {1.001, "b1", true}, {1.002, "b1", true}};
  const auto pts = build_training_points(obs, labels, gt, beacons, 0.010);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_DOUBLE_EQ(pts[0].rssi, -52);
  // ranges averaged over the bucket: robot at (0,t,2) so 1.0, 1.001, 1.002
  EXPECT_NEAR(pts[0].distance, 1.001, 1e-9);
  EXPECT_EQ(pts[0].label, +1);
}

TEST(BuildTrainingPoints, DropsBeyondMaxRange) {
  const auto beacons = two_beacons();
  std::vector<GroundtruthPose> gt = {{0.0, {0, 0, 2}}, {100.0, {0, 100, 2}}};
  std::vector<RssiObservation> obs = {{50.0, "b1", -80}};
  std::vector<LosLabel> labels = {{50.0, "b1", false}};
  EXPECT_TRUE(build_training_points(obs, labels, gt, beacons, 0.010, 10.0).empty());
}

TEST(BuildTrainingPoints, LabelStreamMustCover) {
  const auto beacons = two_beacons();
  std::vector<GroundtruthPose> gt = {{0.0, {0, 0, 2}}, {10.0, {0, 10, 2}}};
  std::vector<RssiObservation> obs = {{1.0, "b1", -50}};
  EXPECT_THROW(build_training_points(obs, {}, gt, beacons, 0.010), DataError);
}
