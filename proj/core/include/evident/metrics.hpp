#pragma once

#include <vector>

#include <Eigen/Core>

namespace evident {

// Scores oriented so higher = more novel; truths are binary novelty labels.
struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> truths;
};

struct CurveMetrics {
  double auroc = 0.0;
  double aupr = 0.0;
  double fpr_at_95tpr = 0.0;
  double detection_error = 0.0;  // 0.5*(1-TPR) + 0.5*FPR at the operating point
  double realized_tpr = 0.0;     // TPR actually achieved at that point
  double threshold = 0.0;        // largest threshold with TPR >= 0.95
};

// Threshold sweep over all distinct scores (descending, ties cross together):
// trapezoidal AUROC, step-sum AUPR, and the TPR >= 0.95 operating point.
// Throws std::invalid_argument on size mismatch or single-class truths.
CurveMetrics binary_curve_metrics(const ScoredSet& data);

// Average precision for one class; same sweep and tie rule as above.
double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& truths);

struct MeanApResult {
  double map = 0.0;
  std::vector<double> per_class;    // AP per class; NaN where skipped
  std::vector<int> skipped_classes; // classes with no positives
};

// Mean AP over classes that have at least one positive; prob is n x K class
// scores, truth is n x K multi-hot. Throws if no class is evaluable.
MeanApResult mean_ap(const Eigen::MatrixXd& prob, const Eigen::MatrixXd& truth);

}  // namespace evident
