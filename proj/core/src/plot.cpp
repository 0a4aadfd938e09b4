#include "ckt/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace ckt {
namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

}  // namespace

std::string method_color(const std::string& method) {
  if (method == "logit") return "orange";
  if (method == "probit") return "red";
  if (method == "tree") return "blue";
  if (method == "forest" || method == "forest_unadapted") return "green";
  if (method == "knn") return "purple";
  return "black";
}

std::string curves_svg(const CurveTable& t, const std::string& title, const std::string& x_label) {
  constexpr double W = 720, H = 480, left = 70, right = 150, top = 40, bottom = 60;
  const double pw = W - left - right;
  const double ph = H - top - bottom;
  double x0 = t.z.empty() ? 0.0 : t.z.front();
  double x1 = t.z.empty() ? 1.0 : t.z.back();
  if (!(x1 > x0)) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
  for (const auto& col : t.values) {
    for (double v : col) {
      if (std::isfinite(v)) {
        y0 = std::min(y0, v);
        y1 = std::max(y1, v);
      }
    }
  }
  if (!std::isfinite(y0)) y0 = -1.0, y1 = 1.0;
  const double pad = std::max(0.05, 0.05 * (y1 - y0));
  y0 = std::max(-1.0, y0 - pad);
  y1 = std::min(1.0, y1 + pad);
  if (!(y1 > y0)) y1 = y0 + 0.1;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    svg << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">" << tick(xv)
        << "</text>\n";
    svg << "<text x=\"" << num(left - 8) << "\" y=\"" << num(sy(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
        << "</text>\n";
    svg << "<line x1=\"" << left << "\" x2=\"" << num(left + pw) << "\" y1=\"" << num(sy(yv)) << "\" y2=\""
        << num(sy(yv)) << "\" stroke=\"#ddd\"/>\n";
  }
  svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - 18) << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << "Kendall's tau</text>\n";

  for (std::size_t m = 0; m < t.methods.size(); ++m) {
    const std::string color = method_color(t.methods[m]);
    std::string points;
    auto flush = [&] {
      if (!points.empty()) {
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << points << "\"/>\n";
      }
      points.clear();
    };
    for (std::size_t g = 0; g < t.z.size(); ++g) {
      const double v = t.values[m][g];
      if (!std::isfinite(v)) {
        flush();
        continue;
      }
      points += num(sx(t.z[g])) + "," + num(sy(v)) + " ";
    }
    flush();
    const double ly = top + 16 + 20.0 * static_cast<double>(m);
    svg << "<line x1=\"" << num(left + pw + 14) << "\" x2=\"" << num(left + pw + 40) << "\" y1=\"" << num(ly)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << num(left + pw + 46) << "\" y=\"" << num(ly + 4) << "\">" << escape(t.methods[m])
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace ckt
