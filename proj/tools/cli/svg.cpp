#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace heavysum::cli::svg {

namespace {

constexpr double kW = 640, kH = 400, kL = 70, kR = 20, kT = 40, kB = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string f(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); }
  double py(double y) const { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); }

  static Frame fit(double x0, double x1, double y0, double y1) {
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) {
      y0 -= 0.5;
      y1 += 0.5;
    }
    double pad = 0.05 * (y1 - y0);
    return {x0, x1, y0 - pad, y1 + pad};
  }

  std::string axes(const std::string& title, const std::string& xl, const std::string& yl) const {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f(kW) + "\" height=\"" + f(kH) +
                    "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + f(kW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) + "</text>\n";
    s += "<line x1=\"" + f(kL) + "\" y1=\"" + f(kH - kB) + "\" x2=\"" + f(kW - kR) + "\" y2=\"" + f(kH - kB) +
         "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + f(kL) + "\" y1=\"" + f(kT) + "\" x2=\"" + f(kL) + "\" y2=\"" + f(kH - kB) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
      s += "<text x=\"" + f(px(xv)) + "\" y=\"" + f(kH - kB + 16) + "\" text-anchor=\"middle\">" + label(xv) + "</text>\n";
      s += "<text x=\"" + f(kL - 6) + "\" y=\"" + f(py(yv) + 4) + "\" text-anchor=\"end\">" + label(yv) + "</text>\n";
    }
    s += "<text x=\"" + f(kW / 2) + "\" y=\"" + f(kH - 10) + "\" text-anchor=\"middle\">" + escape(xl) + "</text>\n";
    s += "<text x=\"16\" y=\"" + f(kH / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + f(kH / 2) + ")\">" +
         escape(yl) + "</text>\n";
    return s;
  }
};

}  // namespace

std::string trend(const std::string& title, const std::string& x_label, const std::string& y_label,
                  const std::vector<Series>& series) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min({y0, s.y[i], s.lo.empty() ? s.y[i] : s.lo[i]});
      y1 = std::max({y1, s.y[i], s.hi.empty() ? s.y[i] : s.hi[i]});
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  const double xpad = 0.03 * (x1 > x0 ? x1 - x0 : 1.0);
  auto fr = Frame::fit(x0 - xpad, x1 + xpad, y0, y1);
  std::string out = fr.axes(title, x_label, y_label);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string color = kColors[k % 5];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) pts += f(fr.px(s.x[i])) + "," + f(fr.py(s.y[i])) + " ";
    out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out += "<circle cx=\"" + f(fr.px(s.x[i])) + "\" cy=\"" + f(fr.py(s.y[i])) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
      if (!s.lo.empty())
        out += "<line x1=\"" + f(fr.px(s.x[i])) + "\" y1=\"" + f(fr.py(s.lo[i])) + "\" x2=\"" + f(fr.px(s.x[i])) +
               "\" y2=\"" + f(fr.py(s.hi[i])) + "\" stroke=\"" + color + "\"/>\n";
    }
    out += "<text x=\"" + f(kW - kR - 4) + "\" y=\"" + f(kT + 14 * (k + 1)) + "\" text-anchor=\"end\" fill=\"" + color +
           "\">" + escape(s.name) + "</text>\n";
  }
  return out + "</svg>\n";
}

std::string histogram(const std::string& title, const std::string& x_label, const std::vector<double>& counts) {
  double top = 0.0;
  for (double c : counts) top = std::max(top, c);
  auto fr = Frame::fit(-0.5, static_cast<double>(counts.size()) - 0.5, 0.0, top);
  fr.y0 = 0.0;
  std::string out = fr.axes(title, x_label, "count");
  const double w = 0.8 * (fr.px(1.0) - fr.px(0.0));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double x = fr.px(static_cast<double>(i)) - w / 2, y = fr.py(counts[i]);
    out += "<rect x=\"" + f(x) + "\" y=\"" + f(y) + "\" width=\"" + f(w) + "\" height=\"" + f(fr.py(0.0) - y) +
           "\" fill=\"" + kColors[0] + "\"/>\n";
  }
  return out + "</svg>\n";
}

std::string step_path(const std::string& title, const std::vector<double>& t, const std::vector<double>& v,
                      const std::vector<double>& jump_times) {
  double y0 = INFINITY, y1 = -INFINITY;
  for (double y : v) y0 = std::min(y0, y), y1 = std::max(y1, y);
  if (v.empty()) y0 = 0, y1 = 1;
  auto fr = Frame::fit(0.0, 1.0, y0, y1);
  std::string out = fr.axes(title, "t", "value");
  std::string pts;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0) pts += f(fr.px(t[i])) + "," + f(fr.py(v[i - 1])) + " ";  // horizontal, then vertical
    pts += f(fr.px(t[i])) + "," + f(fr.py(v[i])) + " ";
  }
  out += "<polyline fill=\"none\" stroke=\"" + std::string(kColors[0]) + "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
  for (double tj : jump_times) {
    auto it = std::lower_bound(t.begin(), t.end(), tj);
    if (it == t.end()) continue;
    double y = v[static_cast<std::size_t>(it - t.begin())];
    out += "<circle cx=\"" + f(fr.px(tj)) + "\" cy=\"" + f(fr.py(y)) + "\" r=\"4\" fill=\"none\" stroke=\"" +
           kColors[1] + "\" stroke-width=\"1.5\"/>\n";
  }
  return out + "</svg>\n";
}

}  // namespace heavysum::cli::svg
