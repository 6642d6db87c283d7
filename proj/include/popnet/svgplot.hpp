#pragma once

#include <string>
#include <vector>

#include "popnet/metrics.hpp"

namespace popnet {

// One polyline per report across the four metric categories (M, Fm, Sm, Em).
// Byte-deterministic for identical inputs.
std::string render_metrics_svg(
    const std::vector<std::pair<std::string, ImageMetrics>>& series);

}  // namespace popnet
