#include "normgame/analytics/compare.hpp"

#include <map>

namespace normgame::analytics {

namespace {

struct KeyedValues {
  std::map<std::string, std::vector<double>> present;
  std::map<std::string, bool> seen;
};

KeyedValues collect(std::span<const MetricsRecord> records, const std::string& metric, const PairingKey& key) {
  KeyedValues out;
  for (const MetricsRecord& r : records) {
    const std::string k = key(r);
    out.seen[k] = true;
    if (auto v = metric_value(r, metric)) out.present[k].push_back(*v);
  }
  return out;
}

double average(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

std::string by_player(const MetricsRecord& r) { return r.player_id; }

TestResult test_pairs(std::span<const double> a, std::span<const double> b) {
  const TTestResult t = paired_t_test(a, b);
  TestResult r;
  r.t_statistic = t.t;
  r.degrees_of_freedom = t.df;
  r.p_two_tailed = t.p_two_tailed;
  r.hedges_g = hedges_g(a, b);
  r.effect = effect_label(r.hedges_g);
  return r;
}

Comparison compare(std::span<const MetricsRecord> group_a, std::span<const MetricsRecord> group_b,
                   const std::string& metric, const PairingKey& key) {
  metric_value(MetricsRecord{}, metric);  // rejects unknown names up front
  const KeyedValues a = collect(group_a, metric, key);
  const KeyedValues b = collect(group_b, metric, key);

  std::vector<std::string> orphans;
  for (const auto& [k, _] : a.seen)
    if (!b.seen.contains(k)) orphans.push_back(k);
  for (const auto& [k, _] : b.seen)
    if (!a.seen.contains(k)) orphans.push_back(k);
  if (!orphans.empty()) {
    std::string list;
    for (const auto& o : orphans) list += (list.empty() ? "" : ", ") + o;
    throw PairingError("unmatched pairing keys: " + list, orphans);
  }

  Comparison c;
  c.metric = metric;
  std::vector<double> xs, ys;
  for (const auto& [k, _] : a.seen) {
    auto ia = a.present.find(k);
    auto ib = b.present.find(k);
    if (ia == a.present.end() || ib == b.present.end()) {
      c.exclusions.push_back(k);
      continue;
    }
    xs.push_back(average(ia->second));
    ys.push_back(average(ib->second));
  }
  c.pairs = xs.size();
  if (c.pairs < 2) throw InputError("comparison of '" + metric + "' has fewer than two usable pairs");
  c.mean_a = mean(xs);
  c.mean_b = mean(ys);
  c.result = test_pairs(xs, ys);
  return c;
}

Json to_json(const Comparison& c) {
  Json j;
  j["metric"] = c.metric;
  j["mean_a"] = c.mean_a;
  j["mean_b"] = c.mean_b;
  j["pairs"] = c.pairs;
  j["t"] = c.result.t_statistic;
  j["df"] = c.result.degrees_of_freedom;
  j["p_two_tailed"] = c.result.p_two_tailed;
  j["hedges_g"] = c.result.hedges_g;
  j["effect"] = std::string(to_string(c.result.effect));
  j["exclusions"] = c.exclusions;
  return j;
}

}  // namespace normgame::analytics
