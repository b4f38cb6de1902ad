#pragma once

// Minimal SVG line plots for comparing trajectories. The first series is drawn
// solid, the second dashed, further ones dotted; each signal gets its own
// colour.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "kronsim/error.hpp"
#include "kronsim/timeseries.hpp"

namespace kronsim {

struct PlotStyle {
  int width = 800;
  int height = 480;
  int margin_left = 80;
  int margin_right = 200;
  int margin_top = 30;
  int margin_bottom = 50;
  std::string title;
};

namespace detail {

inline std::string fmt_num(double v, int precision = 6) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
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

inline const char* palette(std::size_t k) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  return colors[k % (sizeof(colors) / sizeof(colors[0]))];
}

inline const char* dash_pattern(std::size_t series) {
  if (series == 0) return "";
  if (series == 1) return "8,5";
  return "2,4";
}

}  // namespace detail

/// Path data for one signal of one series, in plot pixel coordinates.
struct PlotCurve {
  std::string label;
  std::size_t series;
  std::size_t signal;
  std::string path;
};

struct Plot {
  std::vector<PlotCurve> curves;
  double y_min = 0.0;
  double y_max = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  std::string svg;
};

/// Lays out and renders the plot. `labels` names each series in the legend
/// (defaults to "series N").
inline Plot render_plot(const std::vector<TimeSeries>& series, const std::vector<std::string>& signals,
                        const PlotStyle& style = {}, std::vector<std::string> labels = {}) {
  if (series.empty() || signals.empty()) {
    throw Error(ErrorKind::EmptySelection, "nothing to plot");
  }
  for (std::size_t s = 1; s < series.size(); ++s) {
    if (series[s].times() != series[0].times()) {
      throw Error(ErrorKind::GridMismatch, "plotted series must share one sample grid");
    }
  }
  if (series[0].empty()) throw Error(ErrorKind::EmptySelection, "series has no samples");
  for (const auto& ts : series) {
    for (const auto& sig : signals) {
      if (!ts.has(sig)) throw Error(ErrorKind::UnknownField, "no signal named '" + sig + "'");
    }
  }
  while (labels.size() < series.size()) labels.push_back("series " + std::to_string(labels.size() + 1));

  Plot plot;
  const auto& t = series[0].times();
  plot.t_min = t.front();
  plot.t_max = t.back();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& ts : series) {
    for (const auto& sig : signals) {
      for (double v : ts.column(sig)) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  const double pad = hi > lo ? 0.05 * (hi - lo) : std::max(1e-3, 0.05 * std::abs(lo));
  plot.y_min = lo - pad;
  plot.y_max = hi + pad;
  const double t_span = plot.t_max > plot.t_min ? plot.t_max - plot.t_min : 1.0;

  const double x0 = style.margin_left;
  const double x1 = style.width - style.margin_right;
  const double y0 = style.height - style.margin_bottom;
  const double y1 = style.margin_top;
  auto px = [&](double tv) { return x0 + (tv - plot.t_min) / t_span * (x1 - x0); };
  auto py = [&](double v) { return y0 - (v - plot.y_min) / (plot.y_max - plot.y_min) * (y0 - y1); };

  for (std::size_t s = 0; s < series.size(); ++s) {
    for (std::size_t g = 0; g < signals.size(); ++g) {
      const auto values = series[s].column(signals[g]);
      std::string d;
      for (std::size_t k = 0; k < values.size(); ++k) {
        d += k == 0 ? 'M' : 'L';
        d += detail::fmt_num(px(t[k]), 7);
        d += ',';
        d += detail::fmt_num(py(values[k]), 7);
      }
      plot.curves.push_back({signals[g] + " (" + labels[s] + ")", s, g, std::move(d)});
    }
  }

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\""
      << style.height << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!style.title.empty()) {
    out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
        << detail::escape_xml(style.title) << "</text>\n";
  }
  out << "<g stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\"/>\n"
      << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\"/>\n"
      << "</g>\n";
  out << "<g font-size=\"11\" font-family=\"sans-serif\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double tv = plot.t_min + t_span * k / 5.0;
    const double yv = plot.y_min + (plot.y_max - plot.y_min) * k / 5.0;
    out << "<text x=\"" << px(tv) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">"
        << detail::fmt_num(tv, 4) << "</text>\n";
    out << "<text x=\"" << x0 - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
        << detail::fmt_num(yv, 5) << "</text>\n";
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << style.height - 10
      << "\" text-anchor=\"middle\">time (s)</text>\n";
  out << "</g>\n";

  for (const auto& c : plot.curves) {
    out << "<path class=\"series" << c.series << "\" fill=\"none\" stroke=\"" << detail::palette(c.signal)
        << "\" stroke-width=\"1.5\"";
    if (const char* dash = detail::dash_pattern(c.series); *dash) {
      out << " stroke-dasharray=\"" << dash << "\"";
    }
    out << " d=\"" << c.path << "\"/>\n";
  }

  out << "<g font-size=\"11\" font-family=\"sans-serif\">\n";
  for (std::size_t k = 0; k < plot.curves.size(); ++k) {
    const auto& c = plot.curves[k];
    const double ly = y1 + 14.0 * static_cast<double>(k) + 6;
    out << "<line x1=\"" << x1 + 10 << "\" y1=\"" << ly << "\" x2=\"" << x1 + 40 << "\" y2=\"" << ly
        << "\" stroke=\"" << detail::palette(c.signal) << "\" stroke-width=\"1.5\"";
    if (const char* dash = detail::dash_pattern(c.series); *dash) {
      out << " stroke-dasharray=\"" << dash << "\"";
    }
    out << "/>\n<text x=\"" << x1 + 46 << "\" y=\"" << ly + 4 << "\">" << detail::escape_xml(c.label)
        << "</text>\n";
  }
  out << "</g>\n</svg>\n";
  plot.svg = out.str();
  return plot;
}

inline Plot emit_plot_svg(const std::vector<TimeSeries>& series, const std::vector<std::string>& signals,
                          const std::string& path, const PlotStyle& style = {},
                          std::vector<std::string> labels = {}) {
  Plot plot = render_plot(series, signals, style, std::move(labels));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << plot.svg;
  return plot;
}

}  // namespace kronsim
