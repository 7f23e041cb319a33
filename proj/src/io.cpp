#include "exprl/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace exprl::io {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);  // binary: stable LF line endings
  if (!out) throw std::runtime_error("io: cannot open " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("io: write failed for " + path);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("io: cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

void write_curve_csv(const std::string& path, const std::vector<CurveRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.reserve(rows.size());
  for (const CurveRow& r : rows)
    cells.push_back({std::to_string(r.epoch), format_double(r.mean_test_score),
                     format_double(r.mean_residual), format_double(r.residual_cv),
                     std::to_string(r.sigma_version)});
  write_csv(path, {"epoch", "mean_test_score", "mean_residual", "residual_cv", "sigma_version"},
            cells);
}

std::vector<CurveRow> read_curve_csv(const std::string& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows.front().size() < 2 || rows.front()[0] != "epoch")
    throw std::runtime_error("io: " + path + " is not a curve.csv file");
  std::vector<CurveRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& cells = rows[i];
    CurveRow r;
    r.epoch = std::stoi(cells.at(0));
    r.mean_test_score = std::stod(cells.at(1));
    if (cells.size() >= 5) {
      r.mean_residual = std::stod(cells[2]);
      r.residual_cv = std::stod(cells[3]);
      r.sigma_version = std::stoi(cells[4]);
    }
    out.push_back(r);
  }
  return out;
}

metrics::LearningCurve curve_from_rows(const std::vector<CurveRow>& rows) {
  metrics::LearningCurve curve;
  for (const CurveRow& r : rows) curve.points.push_back({r.epoch, r.mean_test_score});
  return curve;
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series) {
  if (series.empty()) throw std::invalid_argument("io: svg chart needs at least one series");
  constexpr double W = 860, H = 520;
  constexpr double L = 70, R = 200, T = 50, B = 60;  // margins; legend lives right
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Series& s : series) {
    for (double v : s.x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
    for (double v : s.y) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) { ymax = ymin + 1.0; ymin -= 1.0; }
  const double px = (W - L - R) / (xmax - xmin);
  const double py = (H - T - B) / (ymax - ymin);
  auto X = [&](double v) { return L + (v - xmin) * px; };
  auto Y = [&](double v) { return H - B - (v - ymin) * py; };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("io: cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" << title << "</text>\n";
  // axes
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 5.0;
    const double fy = ymin + (ymax - ymin) * i / 5.0;
    out << "<line x1=\"" << X(fx) << "\" y1=\"" << H - B << "\" x2=\"" << X(fx) << "\" y2=\""
        << H - B + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << X(fx) << "\" y=\"" << H - B + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << tick_label(fx) << "</text>\n";
    out << "<line x1=\"" << L - 5 << "\" y1=\"" << Y(fy) << "\" x2=\"" << L << "\" y2=\"" << Y(fy)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << L - 8 << "\" y=\"" << Y(fy) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(fy)
        << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << (T + H - B) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 "
      << (T + H - B) / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (i) out << ' ';
      out << X(series[s].x[i]) << ',' << Y(series[s].y[i]);
    }
    out << "\"/>\n";
    const double ly = T + 18.0 * static_cast<double>(s);
    out << "<line x1=\"" << W - R + 16 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 44
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - R + 50 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("io: write failed for " + path);
}

}  // namespace exprl::io
