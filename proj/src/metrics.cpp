#include "exprl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace exprl::metrics {

void LearningCurve::validate() const {
  if (points.empty()) throw std::invalid_argument("metrics: empty learning curve");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].score))
      throw std::invalid_argument("metrics: non-finite score at epoch " +
                                  std::to_string(points[i].epoch));
    if (i > 0 && points[i].epoch != points[i - 1].epoch + 1)
      throw std::invalid_argument("metrics: epochs not contiguous at index " + std::to_string(i));
  }
}

Auc100Result auc100(const LearningCurve& curve, double ref_max) {
  if (curve.points.size() < 2)
    throw std::invalid_argument("metrics: auc100 needs at least 2 curve points");
  if (!(ref_max > 0.0)) throw std::invalid_argument("metrics: auc100 ref_max must be positive");
  curve.validate();
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const double width = curve.points[i].epoch - curve.points[i - 1].epoch;
    area += 0.5 * (curve.points[i].score + curve.points[i - 1].score) * width;
  }
  Auc100Result result;
  result.raw_area = area;
  result.ref_max = ref_max;
  result.value = area / (100.0 * ref_max);
  return result;
}

ResidualSummary residual_summary(std::span<const EpochResidual> per_epoch) {
  if (per_epoch.empty()) throw std::invalid_argument("metrics: residual_summary needs data");
  ResidualSummary s;
  s.peak_epoch = 1;
  s.peak_mean = per_epoch[0].mean;
  for (std::size_t i = 1; i < per_epoch.size(); ++i) {
    if (per_epoch[i].mean > s.peak_mean) {
      s.peak_mean = per_epoch[i].mean;
      s.peak_epoch = static_cast<int>(i) + 1;
    }
  }
  s.final_mean = per_epoch.back().mean;
  s.final_over_peak = s.peak_mean == 0.0 ? 1.0 : s.final_mean / s.peak_mean;
  return s;
}

LearningCurve aggregate_trials(const std::vector<LearningCurve>& curves) {
  if (curves.empty()) throw std::invalid_argument("metrics: aggregate_trials needs curves");
  curves.front().validate();
  const std::size_t n = curves.front().points.size();
  const int first = curves.front().first_epoch();
  for (const LearningCurve& c : curves) {
    c.validate();
    if (c.points.size() != n || c.first_epoch() != first)
      throw std::invalid_argument("metrics: aggregate_trials epoch ranges differ");
  }
  LearningCurve mean;
  mean.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const LearningCurve& c : curves) sum += c.points[i].score;
    mean.points[i] = {curves.front().points[i].epoch, sum / static_cast<double>(curves.size())};
  }
  return mean;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("metrics: median of empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

SampleStats sample_stats(std::span<const double> values) {
  SampleStats s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  const double stddev = std::sqrt(sq / static_cast<double>(values.size()));
  s.cv = s.mean == 0.0 ? 0.0 : stddev / s.mean;
  return s;
}

}  // namespace exprl::metrics
