#include "iotstage/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>

#include "json.hpp"

namespace iotstage {

using json = nlohmann::ordered_json;

Summary summarize_ms(std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorCode::kEmptySamples, "summarize needs at least one sample");
  Summary s;
  s.count = samples.size();
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean_ms = sum / static_cast<double>(s.count);
  s.min_ms = *std::min_element(samples.begin(), samples.end());
  s.max_ms = *std::max_element(samples.begin(), samples.end());
  if (s.count >= 2) {
    double sq = 0.0;
    for (double v : samples) sq += (v - s.mean_ms) * (v - s.mean_ms);
    s.std_ms = std::sqrt(sq / static_cast<double>(s.count - 1));
    s.std_defined = true;
  }
  return s;
}

Summary summarize(std::span<const Duration> samples) {
  std::vector<double> ms;
  ms.reserve(samples.size());
  for (Duration d : samples) ms.push_back(to_ms(d));
  return summarize_ms(ms);
}

std::string format_summary(double mean_ms, double std_ms) {
  return fmt::format("{:.2f} ± {:.2f} ms", mean_ms, std_ms);
}

std::optional<std::pair<double, double>> parse_summary(std::string_view text) {
  static const std::regex kPattern(R"(^\s*(-?[0-9]+(?:\.[0-9]+)?) \xC2\xB1 ([0-9]+(?:\.[0-9]+)?) ms\s*$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(text.begin(), text.end(), m, kPattern)) return std::nullopt;
  return std::make_pair(std::stod(m[1].str()), std::stod(m[2].str()));
}

double distance_traveled(double speed_mps, Duration latency) {
  if (speed_mps < 0.0) throw Error(ErrorCode::kInvalidArgument, "negative speed");
  return speed_mps * to_seconds(latency);
}

std::optional<Summary> RunReport::summary(const std::string& tag) const {
  auto it = samples.find(tag);
  if (it == samples.end() || it->second.empty()) return std::nullopt;
  return summarize(it->second);
}

std::string MultiRunReport::summary_line(const std::string& tag) const {
  auto it = tags.find(tag);
  if (it == tags.end() || !it->second.runs) return tag + ": no samples";
  const Summary& s = *it->second.runs;
  return fmt::format("{}: {} (n_runs={}, samples={})", tag, format_summary(s.mean_ms, s.std_ms),
                     s.count, it->second.pooled ? it->second.pooled->count : 0);
}

MultiRunReport aggregate_runs(std::string scenario_name, std::uint64_t seed,
                              std::vector<RunReport> runs,
                              const std::vector<std::string>& declared_tags) {
  MultiRunReport out;
  out.scenario_name = std::move(scenario_name);
  out.seed = seed;
  out.n_runs = runs.size();

  std::vector<std::string> tags = declared_tags;
  for (const auto& r : runs) {
    for (const auto& [tag, samples] : r.samples) {
      if (std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.push_back(tag);
    }
  }
  for (const auto& tag : tags) {
    std::vector<double> run_means;
    std::vector<Duration> pooled;
    for (const auto& r : runs) {
      auto it = r.samples.find(tag);
      if (it == r.samples.end() || it->second.empty()) continue;
      run_means.push_back(summarize(it->second).mean_ms);
      pooled.insert(pooled.end(), it->second.begin(), it->second.end());
    }
    TagAggregate agg;
    if (!run_means.empty()) agg.runs = summarize_ms(run_means);
    if (!pooled.empty()) agg.pooled = summarize(pooled);
    out.tags.emplace(tag, agg);
  }
  for (const auto& r : runs) out.trace_hashes.push_back(r.trace_hash);
  out.runs = std::move(runs);
  return out;
}

namespace {

json summary_json(const std::optional<Summary>& s) {
  json j = json::object();
  if (!s) {
    j["mean_ms"] = nullptr;
    j["std_ms"] = nullptr;
    j["min_ms"] = nullptr;
    j["max_ms"] = nullptr;
    j["count"] = 0;
    j["std_defined"] = false;
    j["summary"] = nullptr;
    return j;
  }
  j["mean_ms"] = s->mean_ms;
  j["std_ms"] = s->std_ms;
  j["min_ms"] = s->min_ms;
  j["max_ms"] = s->max_ms;
  j["count"] = s->count;
  j["std_defined"] = s->std_defined;
  j["summary"] = format_summary(s->mean_ms, s->std_ms);
  return j;
}

json drops_json(const std::map<std::string, std::uint64_t>& drops) {
  json j = json::object();
  for (const auto& [reason, count] : drops) j[reason] = count;
  return j;
}

json run_json(const RunReport& r) {
  json j = json::object();
  j["run_index"] = r.run_index;
  json tags = json::object();
  for (const auto& [tag, samples] : r.samples) tags[tag] = summary_json(r.summary(tag));
  j["tags"] = std::move(tags);
  j["trace_hash"] = r.trace_hash;
  j["drops"] = drops_json(r.drops);
  j["seed"] = r.seed;
  j["events_processed"] = r.events_processed;
  j["pending_events"] = r.pending_events;
  j["max_lag_ns"] = r.max_lag.count();
  j["aborted"] = r.aborted;
  if (r.aborted) j["abort_reason"] = r.abort_reason;
  return j;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

}  // namespace

std::string run_report_json(const RunReport& report) { return run_json(report).dump(2) + "\n"; }

std::string multi_run_report_json(const MultiRunReport& report) {
  json j = json::object();
  j["schema_version"] = 1;
  j["scenario_name"] = report.scenario_name;
  j["seed"] = report.seed;
  j["n_runs"] = report.n_runs;
  j["aggregation"] =
      "tags: mean and sample std (n-1) of per-run means; pooled: over all samples of all runs";
  json tags = json::object();
  json pooled = json::object();
  for (const auto& [tag, agg] : report.tags) {
    tags[tag] = summary_json(agg.runs);
    pooled[tag] = summary_json(agg.pooled);
  }
  j["tags"] = std::move(tags);
  j["pooled"] = std::move(pooled);
  j["trace_hashes"] = report.trace_hashes;
  json overrides = json::object();
  for (const auto& [k, v] : report.overrides) overrides[k] = v;
  j["overrides"] = std::move(overrides);
  j["partial"] = report.partial;
  if (report.partial) j["error"] = report.error;
  json runs = json::array();
  for (const auto& r : report.runs) runs.push_back(run_json(r));
  j["runs"] = std::move(runs);
  return j.dump(2) + "\n";
}

void emit_report(const RunReport& report, const std::string& path) {
  write_file(path, run_report_json(report));
}

void emit_report(const MultiRunReport& report, const std::string& path) {
  write_file(path, multi_run_report_json(report));
}

}  // namespace iotstage
