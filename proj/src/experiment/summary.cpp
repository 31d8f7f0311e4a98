#include "normgame/experiment/summary.hpp"

#include <algorithm>

#include "normgame/analytics/metrics_csv.hpp"
#include "normgame/experiment/experiment.hpp"

namespace normgame::experiment {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> find_files(const fs::path& root, const std::string& name, const std::string& ext) {
  std::vector<fs::path> out;
  std::error_code ec;
  if (fs::is_regular_file(root, ec)) {
    out.push_back(root);
    return out;
  }
  if (!fs::is_directory(root, ec)) throw InputError("input '" + root.string() + "' does not exist");
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    const auto& p = it->path();
    if ((!name.empty() && p.filename() == name) || (!ext.empty() && p.extension() == ext)) out.push_back(p);
  }
  if (ec) throw IoError("cannot scan '" + root.string() + "': " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Summary summarize(const SummaryRequest& request) {
  Summary s;
  if (fs::is_regular_file(request.input_dir)) {
    s.sources.push_back(request.input_dir);
    if (request.input_dir.extension() == ".jsonl") {
      s.records = analytics::compute_metrics(read_event_log(request.input_dir));
    } else {
      s.records = analytics::read_metrics_csv(request.input_dir);
    }
  } else {
    s.sources = find_files(request.input_dir, "metrics.csv", "");
    if (!s.sources.empty()) {
      for (const auto& p : s.sources) {
        auto rs = analytics::read_metrics_csv(p);
        s.records.insert(s.records.end(), rs.begin(), rs.end());
      }
    } else {
      s.sources = find_files(request.input_dir, "", ".jsonl");
      for (const auto& p : s.sources) {
        auto rs = analytics::compute_metrics(read_event_log(p));
        s.records.insert(s.records.end(), rs.begin(), rs.end());
      }
    }
  }
  if (s.sources.empty() || s.records.empty())
    throw InputError("no metrics.csv or event logs found under '" + request.input_dir.string() + "'");
  const auto& metrics = request.metrics.empty() ? kReportMetrics : request.metrics;
  const auto& names = analytics::metric_names();
  for (const auto& m : metrics)
    if (std::find(names.begin(), names.end(), m) == names.end()) throw InputError("unknown metric '" + m + "'");
  s.report = comparison_report(s.records, request.group_a, request.group_b, metrics);
  s.table = render_report(s.report);
  return s;
}

std::pair<Regime, Regime> parse_comparison(const std::string& flag) {
  const auto colon = flag.find(':');
  if (colon == std::string::npos) throw InputError("comparison must look like 'individual:group', got '" + flag + "'");
  const auto a = parse_regime(flag.substr(0, colon));
  const auto b = parse_regime(flag.substr(colon + 1));
  if (!a || !b) throw InputError("unknown regime in comparison '" + flag + "'");
  if (*a == *b) throw InputError("comparison needs two different regimes");
  return {*a, *b};
}

}  // namespace normgame::experiment
