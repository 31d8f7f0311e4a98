// Batch experiments, analysis and replay from the command line.
#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "normgame/experiment/experiment.hpp"
#include "normgame/experiment/summary.hpp"
#include "normgame/replay.hpp"

namespace fs = std::filesystem;
using namespace normgame;

namespace {

int simulate(const fs::path& spec_path, const fs::path& out_dir) {
  auto spec = experiment::read_spec(spec_path);
  if (!out_dir.empty()) spec.output_dir = out_dir;
  const auto artifacts = experiment::run_experiment(spec);
  fmt::print("{} games\n", artifacts.logs.size());
  fmt::print("metrics: {}\nreport: {}\n", artifacts.metrics_csv.string(), artifacts.report_json.string());
  std::ifstream text(artifacts.report_text);
  std::cout << text.rdbuf();
  return 0;
}

int analyze(const fs::path& in, const std::string& comparison, const std::vector<std::string>& metrics,
            const fs::path& out) {
  experiment::SummaryRequest request;
  request.input_dir = in;
  std::tie(request.group_a, request.group_b) = experiment::parse_comparison(comparison);
  request.metrics = metrics;
  const auto summary = experiment::summarize(request);
  std::cout << summary.table;
  fs::path target = out;
  if (target.empty()) target = fs::is_directory(in) ? in / "summary.json" : fs::path("summary.json");
  std::ofstream json(target);
  if (!json) throw IoError("cannot write '" + target.string() + "'");
  Json report = summary.report;
  Json sources = Json::array();
  for (const auto& s : summary.sources) sources.push_back(s.string());
  report["sources"] = sources;
  json << report.dump(2) << "\n";
  fmt::print("summary: {}\n", target.string());
  return 0;
}

int replay_log(const fs::path& log) {
  const GameState state = replay(read_event_log(log));
  std::cout << to_json(state).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Security-compliance sanction game: experiments and analysis"};
  app.require_subcommand(1);

  fs::path spec_path, out_dir;
  auto* sim = app.add_subcommand("simulate", "Run every game of an experiment spec");
  sim->add_option("--spec", spec_path, "Experiment spec JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "Output directory (overrides output_dir from --spec)");

  fs::path in_path, summary_out;
  std::string comparison = "individual:group";
  std::vector<std::string> metrics;
  auto* ana = app.add_subcommand("analyze", "Pool metrics under a directory and compare two regimes");
  ana->add_option("--in", in_path, "Directory with metrics.csv files or event logs")->required();
  ana->add_option("--compare", comparison, "Regimes to pair, as a:b")->capture_default_str();
  ana->add_option("--metric", metrics, "Metric to compare (repeatable; default: the report set)");
  ana->add_option("--json", summary_out, "Where to write summary.json");

  fs::path log_path;
  auto* rep = app.add_subcommand("replay", "Rebuild and print the final state of an event log");
  rep->add_option("--log", log_path, "Event log (.jsonl)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    if (*sim) return simulate(spec_path, out_dir);
    if (*ana) return analyze(in_path, comparison, metrics, summary_out);
    if (*rep) return replay_log(log_path);
  } catch (const std::exception& e) {
    std::cerr << "normgame: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
