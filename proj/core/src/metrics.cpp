#include "evident/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace evident {

namespace {

struct SweepPoint {
  double threshold;
  double tp, fp;  // cumulative counts for score >= threshold
};

// One point per distinct threshold, descending; ties grouped.
std::vector<SweepPoint> sweep(const std::vector<double>& scores,
                              const std::vector<int>& truths) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  std::vector<SweepPoint> points;
  double tp = 0.0, fp = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      if (truths[order[i]] == 1) tp += 1.0; else fp += 1.0;
      ++i;
    }
    points.push_back({t, tp, fp});
  }
  return points;
}

void check_scored(const std::vector<double>& scores, const std::vector<int>& truths) {
  if (scores.size() != truths.size() || scores.empty()) {
    throw std::invalid_argument("metrics: scores/truths size mismatch");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("metrics: non-finite score");
  }
}

}  // namespace

CurveMetrics binary_curve_metrics(const ScoredSet& data) {
  check_scored(data.scores, data.truths);
  const double P = static_cast<double>(
      std::count(data.truths.begin(), data.truths.end(), 1));
  const double N = static_cast<double>(data.truths.size()) - P;
  if (P == 0.0 || N == 0.0) {
    throw std::invalid_argument("binary_curve_metrics: need both classes present");
  }

  const std::vector<SweepPoint> points = sweep(data.scores, data.truths);

  CurveMetrics m;
  double prev_tpr = 0.0, prev_fpr = 0.0, prev_recall = 0.0;
  bool operating_found = false;
  for (const SweepPoint& pt : points) {
    const double tpr = pt.tp / P;
    const double fpr = pt.fp / N;
    m.auroc += 0.5 * (tpr + prev_tpr) * (fpr - prev_fpr);
    const double precision = pt.tp / (pt.tp + pt.fp);
    m.aupr += (tpr - prev_recall) * precision;
    if (!operating_found && tpr >= 0.95) {
      operating_found = true;
      m.threshold = pt.threshold;
      m.realized_tpr = tpr;
      m.fpr_at_95tpr = fpr;
      m.detection_error = 0.5 * (1.0 - tpr) + 0.5 * fpr;
    }
    prev_tpr = tpr;
    prev_fpr = fpr;
    prev_recall = tpr;
  }
  return m;
}

double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& truths) {
  check_scored(scores, truths);
  const double P = static_cast<double>(
      std::count(truths.begin(), truths.end(), 1));
  if (P == 0.0) throw std::invalid_argument("average_precision: no positives");

  double ap = 0.0, prev_recall = 0.0;
  for (const SweepPoint& pt : sweep(scores, truths)) {
    const double recall = pt.tp / P;
    const double precision = pt.tp / (pt.tp + pt.fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

MeanApResult mean_ap(const Eigen::MatrixXd& prob, const Eigen::MatrixXd& truth) {
  if (prob.rows() != truth.rows() || prob.cols() != truth.cols() || prob.rows() == 0) {
    throw std::invalid_argument("mean_ap: shape mismatch");
  }
  const Eigen::Index K = prob.cols();
  const Eigen::Index n = prob.rows();

  MeanApResult result;
  result.per_class.assign(static_cast<std::size_t>(K),
                          std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  int evaluable = 0;
  std::vector<double> scores(static_cast<std::size_t>(n));
  std::vector<int> truths(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < K; ++k) {
    if ((truth.col(k).array() == 1.0).count() == 0) {
      result.skipped_classes.push_back(static_cast<int>(k));
      continue;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      scores[static_cast<std::size_t>(i)] = prob(i, k);
      truths[static_cast<std::size_t>(i)] = truth(i, k) == 1.0 ? 1 : 0;
    }
    const double ap = average_precision(scores, truths);
    result.per_class[static_cast<std::size_t>(k)] = ap;
    sum += ap;
    evaluable += 1;
  }
  if (evaluable == 0) throw std::invalid_argument("mean_ap: no evaluable classes");
  result.map = sum / static_cast<double>(evaluable);
  return result;
}

}  // namespace evident
