#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "normgame/analytics/metrics.hpp"
#include "normgame/error.hpp"

namespace normgame::analytics {

// Raised when a metrics file carries an unexpected header or schema version.
class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

inline constexpr int kMetricsSchemaVersion = 1;

// Fixed column order; the first column is schema_version.
const std::vector<std::string>& metrics_csv_columns();

std::string metrics_csv_header();
std::string to_csv_row(const MetricsRecord& r);
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records);
// Atomic write via temp file and rename.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& records);

std::vector<MetricsRecord> parse_metrics_csv(const std::string& text, const std::string& origin = "<memory>");
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

// Shortest round-trip decimal for doubles; never locale dependent.
std::string format_number(double x);

}  // namespace normgame::analytics
