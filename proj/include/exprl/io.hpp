#pragma once

// Small file-format helpers: CSV tables, learning-curve files, and the
// hand-emitted SVG line charts used by the comparison reports.

#include <string>
#include <vector>

#include "exprl/metrics.hpp"

namespace exprl::io {

std::string format_double(double v);  // %.17g, '.' decimal separator

// Rows of already-formatted cells; the header goes first.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::vector<std::vector<std::string>> read_csv(const std::string& path);

// curve.csv: epoch,mean_test_score,mean_residual,residual_cv,sigma_version
struct CurveRow {
  int epoch = 0;
  double mean_test_score = 0.0;
  double mean_residual = 0.0;
  double residual_cv = 0.0;
  int sigma_version = 0;
};

void write_curve_csv(const std::string& path, const std::vector<CurveRow>& rows);
std::vector<CurveRow> read_curve_csv(const std::string& path);
metrics::LearningCurve curve_from_rows(const std::vector<CurveRow>& rows);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal line chart: axes, ticks, legend, one polyline per series.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series);

}  // namespace exprl::io
