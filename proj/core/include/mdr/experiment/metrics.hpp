#pragma once

#include <filesystem>
#include <fstream>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mdr/evaluation.hpp"

namespace mdr {

/// Schema tag carried by every metrics line. Bump on incompatible changes.
inline constexpr std::string_view kMetricsSchema = "mdrlab.metrics.v1";

nlohmann::json to_json(const SplitMetrics& metrics);
nlohmann::json to_json(const MetricsRecord& record);
SplitMetrics split_metrics_from_json(const nlohmann::json& j);
MetricsRecord metrics_record_from_json(const nlohmann::json& j);

/// One JSON object per line, one line per evaluation step.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  void write(const MetricsRecord& record);

 private:
  std::ofstream out_;
};

std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path);

}  // namespace mdr
