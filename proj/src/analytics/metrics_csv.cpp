#include "normgame/analytics/metrics_csv.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

namespace normgame::analytics {

namespace {

std::string opt(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw InputError(where + ": not a number: '" + s + "'");
  return v;
}

int to_int(const std::string& s, const std::string& where) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw InputError(where + ": not an integer: '" + s + "'");
  return v;
}

std::optional<double> to_opt(const std::string& s, const std::string& where) {
  if (s.empty()) return std::nullopt;
  return to_double(s, where);
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, ptr);
}

const std::vector<std::string>& metrics_csv_columns() {
  static const std::vector<std::string> kColumns{
      "schema_version",
      "game_id",
      "player_id",
      "regime",
      "regime_ordinal",
      "risk_score",
      "immunity_loss_count",
      "immunity_repaired_before_deadline_count",
      "compliance_rate",
      "manager_sanction_issuances",
      "attacks_in_game",
      "sanctions_per_100_attacks",
      "score",
      "rounds_skipped",
      "resilience_mean_rounds",
      "censored_loss_count",
      "peer_sanctions_issued",
      "project_tasks_completed",
      "score_per_task"};
  return kColumns;
}

std::string metrics_csv_header() {
  std::string out;
  for (const auto& c : metrics_csv_columns()) out += (out.empty() ? "" : ",") + c;
  return out;
}

std::string to_csv_row(const MetricsRecord& r) {
  std::ostringstream o;
  o << kMetricsSchemaVersion << ',' << r.game_id << ',' << r.player_id << ',' << to_string(r.regime) << ','
    << r.regime_ordinal << ',' << format_number(r.risk_score) << ',' << r.immunity_loss_count << ','
    << r.immunity_repaired_before_deadline_count << ',' << opt(r.compliance_rate) << ','
    << r.manager_sanction_issuances << ',' << r.attacks_in_game << ',' << opt(r.sanctions_per_100_attacks) << ','
    << r.score << ',' << r.rounds_skipped << ',' << opt(r.resilience_mean_rounds) << ',' << r.censored_loss_count
    << ',' << r.peer_sanctions_issued << ',' << r.project_tasks_completed << ',' << opt(r.score_per_task);
  return o.str();
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
  out << metrics_csv_header() << '\n';
  for (const auto& r : records) out << to_csv_row(r) << '\n';
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& records) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    write_metrics_csv(out, records);
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp + "': " + ec.message());
}

std::vector<MetricsRecord> parse_metrics_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(origin + ": empty metrics file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != metrics_csv_header())
    throw SchemaError(origin + ": schema-version mismatch: unexpected metrics header");

  std::vector<MetricsRecord> out;
  std::size_t line_no = 1;
  const std::size_t ncols = metrics_csv_columns().size();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    auto f = split(line);
    if (f.size() != ncols) throw InputError(where + ": expected " + std::to_string(ncols) + " fields");
    if (to_int(f[0], where) != kMetricsSchemaVersion)
      throw SchemaError(where + ": schema-version mismatch: version " + f[0]);
    MetricsRecord r;
    r.game_id = f[1];
    r.player_id = f[2];
    auto regime = parse_regime(f[3]);
    if (!regime) throw InputError(where + ": unknown regime '" + f[3] + "'");
    r.regime = *regime;
    r.regime_ordinal = to_int(f[4], where);
    r.risk_score = to_double(f[5], where);
    r.immunity_loss_count = to_int(f[6], where);
    r.immunity_repaired_before_deadline_count = to_int(f[7], where);
    r.compliance_rate = to_opt(f[8], where);
    r.manager_sanction_issuances = to_int(f[9], where);
    r.attacks_in_game = to_int(f[10], where);
    r.sanctions_per_100_attacks = to_opt(f[11], where);
    r.score = to_int(f[12], where);
    r.rounds_skipped = to_int(f[13], where);
    r.resilience_mean_rounds = to_opt(f[14], where);
    r.censored_loss_count = to_int(f[15], where);
    r.peer_sanctions_issued = to_int(f[16], where);
    r.project_tasks_completed = to_int(f[17], where);
    r.score_per_task = to_opt(f[18], where);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open metrics file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_metrics_csv(buf.str(), path.string());
}

}  // namespace normgame::analytics
