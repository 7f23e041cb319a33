#pragma once

// Learning-curve bookkeeping and the AUC-100 benchmark.

#include <span>
#include <vector>

namespace exprl::metrics {

struct CurvePoint {
  int epoch = 0;
  double score = 0.0;
};

// Epochs start at 1 and are contiguous; scores finite.
struct LearningCurve {
  std::vector<CurvePoint> points;

  void validate() const;
  int first_epoch() const { return points.front().epoch; }
  int last_epoch() const { return points.back().epoch; }
};

struct Auc100Result {
  double raw_area = 0.0;
  double ref_max = 0.0;
  double value = 0.0;  // raw_area / (100 * ref_max); may exceed 1
};

// Trapezoid-rule area of score over epoch in [first, last], normalized by
// 100 * ref_max. Requires >= 2 points.
Auc100Result auc100(const LearningCurve& curve, double ref_max);

struct EpochResidual {
  double mean = 0.0;
  double cv = 0.0;  // coefficient of variation of the normalized error
};

struct ResidualSummary {
  int peak_epoch = 0;  // 1-based, first epoch attaining the maximum mean
  double peak_mean = 0.0;
  double final_mean = 0.0;
  double final_over_peak = 0.0;
};

ResidualSummary residual_summary(std::span<const EpochResidual> per_epoch);

// Pointwise mean of curves covering the same epoch range.
LearningCurve aggregate_trials(const std::vector<LearningCurve>& curves);

double median(std::vector<double> values);

// Mean and coefficient of variation (population std / mean) of a sample.
struct SampleStats {
  double mean = 0.0;
  double cv = 0.0;
};
SampleStats sample_stats(std::span<const double> values);

}  // namespace exprl::metrics
