#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bleloc/common.hpp"

namespace bleloc {

/// Planar root-mean-squared error between aligned estimate/groundtruth pairs.
inline double rmse(const std::vector<Eigen::Vector2d>& estimates,
                   const std::vector<Eigen::Vector2d>& groundtruth) {
  if (estimates.empty()) throw std::invalid_argument("rmse: empty input");
  if (estimates.size() != groundtruth.size())
    throw std::invalid_argument("rmse: estimate/groundtruth length mismatch");
  double s = 0;
  for (size_t i = 0; i < estimates.size(); ++i) s += (estimates[i] - groundtruth[i]).squaredNorm();
  return std::sqrt(s / static_cast<double>(estimates.size()));
}

/// Right-continuous empirical CDF: F(x) = #{v <= x} / n.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("EmpiricalCdf: empty sample");
    std::sort(values_.begin(), values_.end());
  }

  double operator()(double x) const {
    const auto it = std::upper_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
  }

  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

 private:
  std::vector<double> values_;
};

/// Pointwise median of per-run CDFs on a query grid (multi-run aggregation).
inline std::vector<double> median_cdf(const std::vector<std::vector<double>>& runs,
                                      const std::vector<double>& grid) {
  if (runs.empty()) throw std::invalid_argument("median_cdf: no runs");
  std::vector<EmpiricalCdf> cdfs;
  cdfs.reserve(runs.size());
  for (const auto& r : runs) cdfs.emplace_back(r);
  std::vector<double> out;
  out.reserve(grid.size());
  std::vector<double> column(runs.size());
  for (double x : grid) {
    for (size_t r = 0; r < cdfs.size(); ++r) column[r] = cdfs[r](x);
    std::sort(column.begin(), column.end());
    const size_t n = column.size();
    out.push_back(n % 2 == 1 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]));
  }
  return out;
}

struct RocPoint {
  double threshold = 0;  // predict positive when score >= threshold
  double fpr = 0;
  double tpr = 0;
};

struct RocResult {
  std::vector<RocPoint> curve;  // from (0,0) to (1,1)
  double auc = 0;
};

/// ROC swept over every distinct score threshold, with AUC by trapezoid
/// integration; ties are grouped so the AUC equals the Mann-Whitney
/// statistic P(score+ > score-) + 0.5 P(tie).
inline RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("roc_auc: scores/labels length mismatch");
  size_t n_pos = 0, n_neg = 0;
  for (int l : labels) (l > 0 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) throw DataError("roc_auc: both classes must be present");

  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  RocResult res;
  res.curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  size_t tp = 0, fp = 0;
  double prev_fpr = 0, prev_tpr = 0;
  size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {  // group ties
      (labels[order[i]] > 0 ? tp : fp) += 1;
      ++i;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
    res.curve.push_back({s, fpr, tpr});
    res.auc += 0.5 * (tpr + prev_tpr) * (fpr - prev_fpr);
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  return res;
}

}  // namespace bleloc
