#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bleloc/los_grid.hpp"
#include "test_util.hpp"

using namespace bleloc;

namespace {

/// Small smooth model for grid fidelity checks.
GpcModel smooth_test_model() {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> ud(0.0, 10.0);
  std::uniform_real_distribution<double> ur(-100.0, -40.0);
  Eigen::MatrixXd inputs(40, 2);
  Eigen::VectorXi labels(40);
  for (int i = 0; i < 40; ++i) {
    inputs(i, 0) = ud(gen);
    inputs(i, 1) = ur(gen);
    // deterministic smooth boundary: LOS when rssi is high for the distance
    labels(i) = inputs(i, 1) > -55.0 - 2.5 * inputs(i, 0) ? 1 : -1;
  }
  GpcHyperparams h;
  h.lengthscales = {2.0, 8.0};
  h.signal_variance = 1.0;
  h.mean_constant = 0.0;
  return make_gpc_model(inputs, labels, h);
}

KdTree2 uniform_grid_tree(int nd, int nr) {
  std::vector<KdTree2::Point> pts;
  pts.reserve(static_cast<size_t>(nd) * nr);
  for (int i = 0; i < nd; ++i)
    for (int j = 0; j < nr; ++j) pts.push_back({static_cast<double>(i), static_cast<double>(j)});
  return KdTree2(std::move(pts));
}

}  // namespace

// ---------------------------------------------------------------------------
// kd-tree
// ---------------------------------------------------------------------------

TEST(KdTree, MatchesBruteForceWithTieBreak) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<KdTree2::Point> pts(400);
  for (auto& p : pts) p = {std::round(u(gen)), std::round(u(gen))};  // force ties
  KdTree2 tree(pts);
  for (int q = 0; q < 2000; ++q) {
    const KdTree2::Point query{u(gen), u(gen)};
    size_t best = pts.size();
    double best_d2 = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < pts.size(); ++i) {
      const double dx = pts[i][0] - query[0], dy = pts[i][1] - query[1];
      const double d2 = dx * dx + dy * dy;
      if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
        best_d2 = d2;
        best = i;
      }
    }
    EXPECT_EQ(tree.nearest(query), best);
  }
}

TEST(KdTree, VisitCountLogarithmicOnUniformGrids) {
  std::mt19937_64 gen(5);
  for (const auto [nd, nr] : std::vector<std::pair<int, int>>{
           {21, 21}, {41, 61}, {101, 61}, {201, 121}, {301, 121}}) {
    const auto tree = uniform_grid_tree(nd, nr);
    std::uniform_real_distribution<double> ux(0.0, nd - 1.0), uy(0.0, nr - 1.0);
    size_t total = 0;
    const int n_queries = 1000;
    for (int q = 0; q < n_queries; ++q) {
      size_t v = 0;
      tree.nearest({ux(gen), uy(gen)}, &v);
      total += v;
    }
    const double mean = static_cast<double>(total) / n_queries;
    const double bound = 3.0 * std::log2(static_cast<double>(tree.size())) + 10.0;
    EXPECT_LE(mean, bound) << "grid " << nd << "x" << nr;
  }
}

// ---------------------------------------------------------------------------
// build_grid
// ---------------------------------------------------------------------------

TEST(BuildGrid, NodeCountFromBoundsAndResolution) {
  const auto model = smooth_test_model();
  GridBounds b{0.0, 10.0, -100.0, -40.0};
  const auto grid = build_grid(model, b, 0.1, 1.0);
  EXPECT_EQ(grid.n_d(), 101);
  EXPECT_EQ(grid.n_r(), 61);
  EXPECT_EQ(grid.node_count(), 6161u);
}

TEST(BuildGrid, DegenerateBoundsRejected) {
  const auto model = smooth_test_model();
  EXPECT_THROW(build_grid(model, {5.0, 5.0, -100.0, -40.0}, 0.1, 1.0), std::invalid_argument);
  EXPECT_THROW(build_grid(model, {0.0, 10.0, -40.0, -40.0}, 0.1, 1.0), std::invalid_argument);
  EXPECT_THROW(build_grid(model, {0.0, 10.0, -100.0, -40.0}, 0.0, 1.0), std::invalid_argument);
}

TEST(BuildGrid, NodeCapEnforced) {
  const auto model = smooth_test_model();
  EXPECT_THROW(build_grid(model, {0.0, 10.0, -100.0, -40.0}, 0.1, 1.0, 1000), ConfigError);
}

TEST(BuildGrid, ValuesAreProbabilitiesAndMatchPredict) {
  const auto model = smooth_test_model();
  const auto grid = build_grid(model, {0.0, 4.0, -80.0, -60.0}, 0.5, 2.5);
  for (size_t i = 0; i < grid.node_count(); ++i) {
    const double v = grid.values()[i];
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    const auto [d, r] = grid.node_coords(i);
    EXPECT_EQ(v, predict(model, {d, r}).p_los);
  }
}

// ---------------------------------------------------------------------------
// query
// ---------------------------------------------------------------------------

TEST(Query, ExactRetrievalAtEveryNode) {
  const auto model = smooth_test_model();
  const auto grid = build_grid(model, {0.0, 6.0, -90.0, -50.0}, 0.25, 2.0);
  for (size_t i = 0; i < grid.node_count(); ++i) {
    const auto [d, r] = grid.node_coords(i);
    EXPECT_EQ(grid.query(d, r), grid.values()[i]);
  }
}

TEST(Query, TieBreaksToLowestNodeIndex) {
  const auto model = smooth_test_model();
  const auto grid = build_grid(model, {0.0, 1.0, -60.0, -50.0}, 0.5, 5.0);
  // query equidistant between node (0,j) and node (1,j): lower row-major
  // index wins, i.e. the smaller distance node
  const double mid_d = 0.25;
  EXPECT_EQ(grid.query(mid_d, -60.0), grid.values()[0]);
  // equidistant in rssi between (0,0) and (0,1)
  EXPECT_EQ(grid.query(0.0, -57.5), grid.values()[0]);
}

TEST(Query, OutOfBoundsClampsToBoundary) {
  const auto model = smooth_test_model();
  const auto grid = build_grid(model, {0.0, 6.0, -90.0, -50.0}, 0.25, 2.0);
  EXPECT_EQ(grid.query(-5.0, -70.0), grid.query(0.0, -70.0));
  EXPECT_EQ(grid.query(100.0, -70.0), grid.query(6.0, -70.0));
  EXPECT_EQ(grid.query(3.0, -200.0), grid.query(3.0, -90.0));
  EXPECT_EQ(grid.query(3.0, 0.0), grid.query(3.0, -50.0));
  EXPECT_EQ(grid.query(-1.0, -300.0), grid.query(0.0, -90.0));
}

TEST(Query, CloseToDirectPredictionOnFineGrid) {
  const auto model = smooth_test_model();
  const auto grid = build_grid(model, {0.0, 10.0, -100.0, -40.0}, 0.05, 0.5);
  std::mt19937_64 gen(29);
  std::uniform_real_distribution<double> ud(0.0, 10.0);
  std::uniform_real_distribution<double> ur(-100.0, -40.0);
  double max_err = 0;
  for (int q = 0; q < 3000; ++q) {
    const double d = ud(gen), r = ur(gen);
    max_err = std::max(max_err, std::abs(grid.query(d, r) - predict(model, {d, r}).p_los));
  }
  EXPECT_LT(max_err, 0.05);
}

TEST(Query, HalvingResolutionNeverIncreasesMaxError) {
  const auto model = smooth_test_model();
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> ud(0.0, 6.0);
  std::uniform_real_distribution<double> ur(-90.0, -50.0);
  std::vector<Eigen::Vector2d> queries(300);
  for (auto& q : queries) q = {ud(gen), ur(gen)};

  const GridBounds b{0.0, 6.0, -90.0, -50.0};
  double prev_max = std::numeric_limits<double>::infinity();
  for (const auto [rd, rr] : std::vector<std::pair<double, double>>{
           {0.8, 8.0}, {0.4, 4.0}, {0.2, 2.0}}) {
    const auto grid = build_grid(model, b, rd, rr);
    double max_err = 0;
    for (const auto& q : queries)
      max_err =
          std::max(max_err, std::abs(grid.query(q.x(), q.y()) - predict(model, q).p_los));
    EXPECT_LE(max_err, prev_max + 1e-12);
    prev_max = max_err;
  }
}

TEST(Query, BilinearInterpolationIsCloserOnSmoothModel) {
  const auto model = smooth_test_model();
  const auto grid = build_grid(model, {0.0, 6.0, -90.0, -50.0}, 0.5, 4.0);
  std::mt19937_64 gen(37);
  std::uniform_real_distribution<double> ud(0.0, 6.0);
  std::uniform_real_distribution<double> ur(-90.0, -50.0);
  double nn_err = 0, bil_err = 0;
  for (int q = 0; q < 500; ++q) {
    const double d = ud(gen), r = ur(gen);
    const double truth = predict(model, {d, r}).p_los;
    nn_err += std::abs(grid.query(d, r) - truth);
    bil_err += std::abs(grid.query_bilinear(d, r) - truth);
  }
  EXPECT_LT(bil_err, nn_err);
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

TEST(GridFile, RoundTripPreservesQueries) {
  const auto model = smooth_test_model();
  const auto grid = build_grid(model, {0.0, 6.0, -90.0, -50.0}, 0.5, 4.0);
  testutil::TempDir dir;
  const auto path = dir.file("grid.json");
  save_grid(path, grid);
  const auto back = load_grid(path);
  EXPECT_EQ(back.node_count(), grid.node_count());
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> ud(-1.0, 7.0);
  std::uniform_real_distribution<double> ur(-95.0, -45.0);
  for (int q = 0; q < 200; ++q) {
    const double d = ud(gen), r = ur(gen);
    EXPECT_EQ(back.query(d, r), grid.query(d, r));
  }
}

TEST(GridFile, RejectsCorruptValues) {
  testutil::TempDir dir;
  const auto path = dir.file("grid.json");
  testutil::write_file(path,
                       R"({"version":1,"bounds":{"d_min":0,"d_max":1,"r_min":-60,"r_max":-50},)"
                       R"("resolution":[1.0,10.0],"p_los":[0.5,0.5,0.5,1.5]})");
  EXPECT_THROW(load_grid(path), DataError);
}
