#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "iotstage/metrics.hpp"
#include "json.hpp"

using namespace iotstage;
using namespace std::chrono_literals;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunReport sample_run(std::size_t index, std::vector<Duration> samples) {
  RunReport r;
  r.run_index = index;
  r.seed = 42 + index;
  r.samples["system_latency"] = std::move(samples);
  r.trace_hash = "hash" + std::to_string(index);
  r.drops["DROP_LOSS"] = index;
  return r;
}

}  // namespace

TEST_CASE("summary statistics") {
  std::vector<Duration> flat = {10ms, 10ms, 10ms};
  const auto a = summarize(flat);
  CHECK(a.mean_ms == 10.0);
  CHECK(a.std_ms == 0.0);
  CHECK(a.std_defined);

  std::vector<Duration> two = {8ms, 12ms};
  const auto b = summarize(two);
  CHECK(b.mean_ms == doctest::Approx(10.0));
  CHECK(b.std_ms == doctest::Approx(std::sqrt(8.0)));
  CHECK(b.min_ms == 8.0);
  CHECK(b.max_ms == 12.0);

  std::vector<Duration> one = {5ms};
  const auto c = summarize(one);
  CHECK(c.std_ms == 0.0);
  CHECK(!c.std_defined);

  std::vector<Duration> none;
  CHECK_THROWS_AS(summarize(none), Error);
}

TEST_CASE("mean ± std formatting") {
  CHECK(format_summary(10.34, 1.68) == "10.34 ± 1.68 ms");
  const auto parsed = parse_summary("10.34 ± 1.68 ms");
  REQUIRE(parsed);
  CHECK(parsed->first == 10.34);
  CHECK(parsed->second == 1.68);
  CHECK(!parse_summary("10.34 ms"));
}

TEST_CASE("distance traveled") {
  CHECK(distance_traveled(100, Duration(10'340'000)) == doctest::Approx(1.034));
  CHECK(distance_traveled(55, 0ns) == 0.0);
  CHECK(distance_traveled(14, 7ms) == doctest::Approx(0.098));
}

TEST_CASE("two-level and pooled aggregation") {
  std::vector<RunReport> runs = {sample_run(0, {8ms, 12ms}), sample_run(1, {11ms}),
                                 sample_run(2, {9ms, 9ms, 9ms})};
  const auto m = aggregate_runs("lc", 42, runs, {"system_latency", "unused"});
  const auto& agg = m.tags.at("system_latency");
  // per-run means 10, 11, 9
  CHECK(agg.runs->mean_ms == doctest::Approx(10.0));
  CHECK(agg.runs->std_ms == doctest::Approx(1.0));
  CHECK(agg.runs->count == 3);
  CHECK(agg.pooled->count == 6);
  CHECK(agg.pooled->mean_ms == doctest::Approx(58.0 / 6.0));
  CHECK(!m.tags.at("unused").runs);
  CHECK(m.summary_line("system_latency").find("10.00 ± 1.00 ms") != std::string::npos);
}

TEST_CASE("report json schemas and byte stability") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto single = sample_run(0, {8ms, 12ms});
  const std::string p1 = (dir / "iotstage_r1.json").string();
  const std::string p2 = (dir / "iotstage_r2.json").string();
  emit_report(single, p1);
  emit_report(single, p2);
  CHECK(slurp(p1) == slurp(p2));
  const auto j = nlohmann::json::parse(slurp(p1));
  for (const char* key : {"run_index", "tags", "trace_hash", "drops"}) CHECK(j.contains(key));

  std::vector<RunReport> runs;
  for (std::size_t i = 0; i < 100; ++i) {
    runs.push_back(sample_run(i, {Duration(9'000'000 + static_cast<std::int64_t>(i) * 20'000)}));
  }
  const auto multi = aggregate_runs("lc", 42, runs, {"system_latency"});
  const auto mj = nlohmann::json::parse(multi_run_report_json(multi));
  CHECK(mj["schema_version"] == 1);
  CHECK(mj["n_runs"] == 100);
  CHECK(mj["trace_hashes"].size() == 100);
  const auto& tag = mj["tags"]["system_latency"];
  for (const char* key : {"mean_ms", "std_ms", "min_ms", "max_ms", "count", "summary"}) CHECK(tag.contains(key));
  const auto parsed = parse_summary(tag["summary"].get<std::string>());
  REQUIRE(parsed);
  CHECK(parsed->first == doctest::Approx(tag["mean_ms"].get<double>()).epsilon(0.005));
  CHECK(parsed->second == doctest::Approx(tag["std_ms"].get<double>()).epsilon(0.005));
  CHECK(mj.contains("pooled"));

  CHECK_THROWS_AS(emit_report(single, "/nonexistent-dir/x/report.json"), Error);
}
