#pragma once

// Minimal self-contained SVG charts (bars, lines) for the report command.
// No external assets; output is plain well-formed XML.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace gmva::svg {

struct Series {
  std::string label;
  std::vector<double> values;
};

namespace detail {

constexpr int kWidth = 720, kHeight = 440;
constexpr int kLeft = 70, kRight = 160, kTop = 50, kBottom = 60;
constexpr int kPlotW = kWidth - kLeft - kRight;
constexpr int kPlotH = kHeight - kTop - kBottom;

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return palette[i % 8];
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline void header(std::ostringstream& os, const std::string& title) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  os << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft << "\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\">"
     << escape(title) << "</text>\n";
}

inline void axes(std::ostringstream& os, double ymin, double ymax, const std::string& ylabel) {
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
     << kTop + kPlotH << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + kPlotH << "\" x2=\"" << kLeft + kPlotW
     << "\" y2=\"" << kTop + kPlotH << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    double v = ymin + (ymax - ymin) * i / 5.0;
    double y = kTop + kPlotH - kPlotH * static_cast<double>(i) / 5.0;
    os << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\"" << y
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt(v)
       << "</text>\n";
  }
  os << "<text x=\"16\" y=\"" << kTop + kPlotH / 2
     << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
     << kTop + kPlotH / 2 << ")\" text-anchor=\"middle\">" << escape(ylabel) << "</text>\n";
}

inline void legend(std::ostringstream& os, const std::vector<Series>& series) {
  double y = kTop + 10;
  for (std::size_t s = 0; s < series.size(); ++s) {
    os << "<rect x=\"" << kLeft + kPlotW + 14 << "\" y=\"" << y - 9
       << "\" width=\"12\" height=\"12\" fill=\"" << color(s) << "\"/>\n";
    os << "<text x=\"" << kLeft + kPlotW + 30 << "\" y=\"" << y + 2
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(series[s].label)
       << "</text>\n";
    y += 18;
  }
}

}  // namespace detail

// Grouped bars, one group per category, one bar per series.
inline std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                             const std::vector<Series>& series, const std::string& ylabel,
                             double ymin = 0.0, double ymax = 100.0) {
  using namespace detail;
  std::ostringstream os;
  header(os, title);
  axes(os, ymin, ymax, ylabel);
  const std::size_t nc = categories.size();
  const std::size_t ns = series.size();
  if (nc > 0 && ns > 0) {
    const double group_w = static_cast<double>(kPlotW) / nc;
    const double bar_w = group_w * 0.8 / ns;
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t s = 0; s < ns; ++s) {
        if (c >= series[s].values.size()) continue;
        double v = std::clamp(series[s].values[c], ymin, ymax);
        double h = kPlotH * (v - ymin) / (ymax - ymin);
        double x = kLeft + group_w * c + group_w * 0.1 + bar_w * s;
        os << "<rect x=\"" << x << "\" y=\"" << kTop + kPlotH - h << "\" width=\"" << bar_w
           << "\" height=\"" << h << "\" fill=\"" << color(s) << "\"/>\n";
      }
      os << "<text x=\"" << kLeft + group_w * (c + 0.5) << "\" y=\"" << kTop + kPlotH + 18
         << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
         << escape(categories[c]) << "</text>\n";
    }
  }
  legend(os, series);
  os << "</svg>\n";
  return os.str();
}

// Polyline per series over shared numeric x positions.
inline std::string line_chart(const std::string& title, const std::vector<double>& xs,
                              const std::vector<Series>& series, const std::string& xlabel,
                              const std::string& ylabel, double ymin, double ymax) {
  using namespace detail;
  std::ostringstream os;
  header(os, title);
  if (ymax <= ymin) ymax = ymin + 1.0;
  axes(os, ymin, ymax, ylabel);
  double xmin = 0.0, xmax = 1.0;
  if (!xs.empty()) {
    xmin = *std::min_element(xs.begin(), xs.end());
    xmax = *std::max_element(xs.begin(), xs.end());
    if (xmax <= xmin) xmax = xmin + 1.0;
  }
  auto px = [&](double x) { return kLeft + kPlotW * (x - xmin) / (xmax - xmin); };
  auto py = [&](double y) {
    double v = std::clamp(y, ymin, ymax);
    return kTop + kPlotH - kPlotH * (v - ymin) / (ymax - ymin);
  };
  for (int i = 0; i <= 5 && !xs.empty(); ++i) {
    double v = xmin + (xmax - xmin) * i / 5.0;
    os << "<text x=\"" << px(v) << "\" y=\"" << kTop + kPlotH + 18
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << fmt(v)
       << "</text>\n";
  }
  os << "<text x=\"" << kLeft + kPlotW / 2 << "\" y=\"" << kHeight - 14
     << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << escape(xlabel)
     << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& vals = series[s].values;
    if (!xs.empty() && !vals.empty()) {
      os << "<polyline fill=\"none\" stroke=\"" << color(s) << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < xs.size() && i < vals.size(); ++i)
        os << px(xs[i]) << "," << py(vals[i]) << " ";
      os << "\"/>\n";
      for (std::size_t i = 0; i < xs.size() && i < vals.size(); ++i)
        os << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(vals[i]) << "\" r=\"3\" fill=\""
           << color(s) << "\"/>\n";
    }
  }
  legend(os, series);
  os << "</svg>\n";
  return os.str();
}

}  // namespace gmva::svg
