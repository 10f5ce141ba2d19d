#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace flagstat::cli {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 30, kBottom = 60;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

// Keys whose value differs between cells; those label the x axis.
std::string cell_label(const ResultTable& t, std::size_t cell) {
  std::string label;
  for (const auto& [key, value] : t.cells[cell]) {
    bool varies = false;
    for (const ParamMap& other : t.cells) {
      auto it = other.find(key);
      varies |= it == other.end() || it->second != value;
    }
    if (!varies && t.cells.size() > 1) continue;
    if (!label.empty()) label += ", ";
    label += key + "=" + num(value);
  }
  return label;
}

}  // namespace

std::string error_chart_svg(const ResultTable& table) {
  const auto agg = table.aggregate();
  double ymax = 0.0;
  for (const AggregateRow& a : agg)
    if (a.succeeded && std::isfinite(a.error_mean)) ymax = std::max(ymax, a.error_mean);
  if (ymax <= 0.0) ymax = 1.0;
  ymax *= 1.05;

  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const std::size_t n = table.cells.size();
  auto x_of = [&](std::size_t c) { return kLeft + (n > 1 ? plot_w * c / (n - 1.0) : plot_w / 2); };
  auto y_of = [&](double v) { return kTop + plot_h * (1.0 - v / ymax); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kLeft << "\" y=\"18\" font-size=\"13\">" << to_string(table.kind) << "</text>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
    << kTop + plot_h << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = ymax * i / 4.0;
    s << "<text x=\"" << kLeft - 6 << "\" y=\"" << y_of(v) + 4 << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  for (std::size_t c = 0; c < n; ++c) {
    s << "<text x=\"" << x_of(c) << "\" y=\"" << kTop + plot_h + 16 << "\" text-anchor=\"middle\">"
      << escape(cell_label(table, c)) << "</text>\n";
  }
  s << "<text x=\"" << kLeft - 55 << "\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 " << kLeft - 55
    << ' ' << kTop + plot_h / 2 << ")\" text-anchor=\"middle\">mean error</text>\n";

  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    const char* color = kColors[m % std::size(kColors)];
    std::string points;
    for (std::size_t c = 0; c < n; ++c) {
      const AggregateRow a = table.aggregate_for(c, table.methods[m]);
      if (!a.succeeded) continue;
      points += num(x_of(c)) + "," + num(y_of(a.error_mean)) + " ";
      s << "<circle cx=\"" << num(x_of(c)) << "\" cy=\"" << num(y_of(a.error_mean)) << "\" r=\"3\" fill=\"" << color
        << "\"/>\n";
    }
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
    const double ly = kTop + 14.0 * m + 6;
    s << "<line x1=\"" << kWidth - kRight + 12 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 32 << "\" y2=\""
      << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << kWidth - kRight + 38 << "\" y=\"" << ly + 4 << "\">" << to_string(table.methods[m])
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace flagstat::cli
