#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "normgame/analytics/metrics.hpp"
#include "normgame/json_io.hpp"

namespace normgame::experiment {

struct SummaryRequest {
  std::filesystem::path input_dir;
  Regime group_a = Regime::Individual;
  Regime group_b = Regime::Group;
  // Empty means the default report metrics.
  std::vector<std::string> metrics;
};

struct Summary {
  std::vector<std::filesystem::path> sources;
  std::vector<analytics::MetricsRecord> records;
  Json report;
  std::string table;
};

// Finds every metrics.csv below input_dir; falls back to *.jsonl event logs when
// there are none. Throws InputError when nothing is found, SchemaError on a
// foreign header.
Summary summarize(const SummaryRequest& request);

// "individual:group" -> {Individual, Group}. Throws InputError.
std::pair<Regime, Regime> parse_comparison(const std::string& flag);

}  // namespace normgame::experiment
