#pragma once

#include <string>

#include "ckt/finance.hpp"

namespace ckt {

/// Static SVG line chart, one polyline per method; NaN values break the line.
std::string curves_svg(const CurveTable& table, const std::string& title, const std::string& x_label);

/// Stroke color used for a method name (black for unknown names).
std::string method_color(const std::string& method);

}  // namespace ckt
