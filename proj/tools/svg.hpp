#pragma once

#include <string>

#include "flagstat/synthlab.hpp"

namespace flagstat::cli {

// Mean error per grid cell, one polyline per method. Cells are spaced evenly
// along x and labelled with their parameters.
std::string error_chart_svg(const ResultTable& table);

}  // namespace flagstat::cli
