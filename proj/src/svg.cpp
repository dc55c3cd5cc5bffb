#include "sgmv/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "sgmv/error.hpp"

namespace sgmv {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
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

struct Axis {
  double lo;
  double hi;
  std::vector<double> ticks;
};

Axis linear_axis(double lo, double hi) {
  if (hi - lo <= 0.0) {
    const double pad = lo == 0.0 ? 1.0 : 0.5 * std::abs(lo);
    lo -= pad;
    hi += pad;
  }
  const double rough = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(rough)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= rough) break;
  }
  Axis a{std::floor(lo / step) * step, std::ceil(hi / step) * step, {}};
  if (a.hi - a.lo < step) a.hi = a.lo + step;
  for (double t = a.lo; t <= a.hi + 0.5 * step; t += step) {
    a.ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return a;
}

// Works in log10 units; ticks sit on integer decades.
Axis log_axis(double lo, double hi) {
  Axis a{std::floor(std::log10(lo)), std::ceil(std::log10(hi)), {}};
  if (a.hi <= a.lo) a.hi = a.lo + 1.0;
  const double span = a.hi - a.lo;
  const double step = std::max(1.0, std::ceil(span / 8.0));
  for (double t = a.lo; t <= a.hi + 0.5; t += step) a.ticks.push_back(t);
  if (a.ticks.size() < 2) a.ticks.push_back(a.hi);
  return a;
}

}  // namespace

std::string render_svg_lines(const std::vector<Series>& series,
                             const SvgOptions& opt) {
  if (series.empty()) throw RenderError("no series to render");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    if (s.points.empty()) throw RenderError("series '" + s.name + "' is empty");
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) {
        throw RenderError("series '" + s.name + "' has non-finite values");
      }
      if (opt.log_y && y <= 0.0) {
        throw RenderError("series '" + s.name + "' has nonpositive values on a log axis");
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  const Axis ax = linear_axis(xmin, xmax);
  const Axis ay = opt.log_y ? log_axis(ymin, ymax) : linear_axis(ymin, ymax);

  const double left = 80, right = 20, top = 40, bottom = 60;
  const double pw = opt.width - left - right;
  const double ph = opt.height - top - bottom;
  auto px = [&](double x) { return left + (x - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double y) {
    const double v = opt.log_y ? std::log10(y) : y;
    return top + (1.0 - (v - ay.lo) / (ay.hi - ay.lo)) * ph;
  };
  auto py_tick = [&](double t) { return top + (1.0 - (t - ay.lo) / (ay.hi - ay.lo)) * ph; };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width
      << "\" height=\"" << opt.height << "\" viewBox=\"0 0 " << opt.width << ' '
      << opt.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty()) {
    out << "<text x=\"" << num(opt.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-size=\"14\">" << escape(opt.title) << "</text>\n";
  }
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  out << "<g class=\"xticks\">\n";
  for (double t : ax.ticks) {
    out << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\""
        << num(px(t)) << "\" y2=\"" << num(top + ph + 5) << "\" stroke=\"black\"/>"
        << "<text x=\"" << num(px(t)) << "\" y=\"" << num(top + ph + 18)
        << "\" text-anchor=\"middle\">" << label(t) << "</text>\n";
  }
  out << "</g>\n<g class=\"yticks\">\n";
  for (double t : ay.ticks) {
    const std::string text = opt.log_y ? "1e" + label(t) : label(t);
    out << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(py_tick(t)) << "\" x2=\""
        << num(left) << "\" y2=\"" << num(py_tick(t)) << "\" stroke=\"black\"/>"
        << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py_tick(t) + 4)
        << "\" text-anchor=\"end\">" << text << "</text>\n";
  }
  out << "</g>\n";
  out << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(opt.height - 15.0)
      << "\" text-anchor=\"middle\">" << escape(opt.x_label) << "</text>\n";
  out << "<text x=\"18\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 18 " << num(top + ph / 2) << ")\">"
      << escape(opt.y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].points.size(); ++i) {
      auto [x, y] = series[s].points[i];
      out << (i ? " " : "") << num(px(x)) << ',' << num(py(y));
    }
    out << "\"/>\n";
  }
  if (series.size() > 1) {
    out << "<g class=\"legend\">\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double y = top + 14 + 16.0 * static_cast<double>(s);
      out << "<line x1=\"" << num(left + pw - 150) << "\" y1=\"" << num(y) << "\" x2=\""
          << num(left + pw - 125) << "\" y2=\"" << num(y) << "\" stroke=\""
          << kPalette[s % std::size(kPalette)] << "\" stroke-width=\"2\"/>"
          << "<text x=\"" << num(left + pw - 118) << "\" y=\"" << num(y + 4) << "\">"
          << escape(series[s].name) << "</text>\n";
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void emit_svg_lines(const std::vector<Series>& series, const SvgOptions& options,
                    const std::string& path) {
  const std::string text = render_svg_lines(series, options);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace sgmv
