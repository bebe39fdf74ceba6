#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace bleloc {

/// Static 2-D kd-tree with exact nearest-neighbor queries. Equidistant
/// candidates resolve to the lowest point index. An optional counter reports
/// the number of tree nodes visited by a query.
class KdTree2 {
 public:
  using Point = std::array<double, 2>;

  KdTree2() = default;

  explicit KdTree2(std::vector<Point> points) : points_(std::move(points)) {
    if (points_.empty()) return;
    std::vector<size_t> idx(points_.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    nodes_.reserve(points_.size());
    root_ = build(idx, 0, points_.size(), 0);
  }

  size_t size() const { return points_.size(); }
  const Point& point(size_t i) const { return points_[i]; }

  /// Index of the nearest point under the Euclidean metric.
  size_t nearest(const Point& q, size_t* visited = nullptr) const {
    size_t best = points_.size();
    double best_d2 = std::numeric_limits<double>::infinity();
    size_t count = 0;
    search(root_, q, best, best_d2, count);
    if (visited != nullptr) *visited = count;
    return best;
  }

 private:
  struct Node {
    size_t point = 0;
    int left = -1;
    int right = -1;
    int axis = 0;
  };

  static double dist2(const Point& a, const Point& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return dx * dx + dy * dy;
  }

  int build(std::vector<size_t>& idx, size_t lo, size_t hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 2;
    const size_t mid = lo + (hi - lo) / 2;
    std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                     [&](size_t a, size_t b) {
                       if (points_[a][axis] != points_[b][axis])
                         return points_[a][axis] < points_[b][axis];
                       return a < b;
                     });
    Node node;
    node.point = idx[mid];
    node.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    nodes_[self].left = build(idx, lo, mid, depth + 1);
    nodes_[self].right = build(idx, mid + 1, hi, depth + 1);
    return self;
  }

  void search(int node_id, const Point& q, size_t& best, double& best_d2, size_t& count) const {
    if (node_id < 0) return;
    const Node& node = nodes_[node_id];
    ++count;
    const double d2 = dist2(points_[node.point], q);
    if (d2 < best_d2 || (d2 == best_d2 && node.point < best)) {
      best_d2 = d2;
      best = node.point;
    }
    const double diff = q[node.axis] - points_[node.point][node.axis];
    const int near_side = diff < 0 ? node.left : node.right;
    const int far_side = diff < 0 ? node.right : node.left;
    search(near_side, q, best, best_d2, count);
    // <= keeps equidistant far-side candidates reachable for the index tie-break
    if (diff * diff <= best_d2) search(far_side, q, best, best_d2, count);
  }

  std::vector<Point> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace bleloc
