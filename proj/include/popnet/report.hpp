#pragma once

// Metric report serialization: JSON (schema in docs/metrics_report.schema.json)
// plus a CSV mirror next to it.

#include <string>

#include "popnet/metrics.hpp"

namespace popnet {

std::string report_to_json(const MetricsReport& report);
void write_report(const std::string& json_path, const MetricsReport& report);
MetricsReport read_report_json(const std::string& path);

}  // namespace popnet
