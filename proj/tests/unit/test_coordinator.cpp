#include <chrono>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "iotstage/coordinator.hpp"

using namespace iotstage;
using namespace std::chrono_literals;

namespace {

std::size_t count(const Trace& t, const std::string& kind) {
  std::size_t n = 0;
  for (const auto& r : t.records()) n += r.kind == kind;
  return n;
}

}  // namespace

TEST_CASE("one second at 100 ms is ten windows") {
  auto s = testutil::load("scenarios/levelcrossing.json");
  s.duration = 1s;
  Coordinator c(RunConfig{s, 0});
  const auto report = c.run();
  CHECK(report.windows.size() == 10);
  CHECK(count(c.trace(), "WINDOW") == 10);
  CHECK(c.trace().records().back().kind == "RUN_END");
  CHECK(c.trace().records().back().at == SimTime(1s));
}

TEST_CASE("fast mode is deterministic and seeds matter") {
  const auto s = testutil::load("scenarios/levelcrossing.json");
  const auto a = run(RunConfig{s, 0});
  const auto b = run(RunConfig{s, 0});
  const auto c = run(RunConfig{s, 1});
  CHECK(a.trace_hash == b.trace_hash);
  CHECK(a.trace_hash != c.trace_hash);
  CHECK(c.seed == s.seed + 1);
}

TEST_CASE("sends use the snapshot of their own window") {
  Coordinator c(RunConfig{testutil::load("scenarios/levelcrossing.json"), 0});
  c.run();
  std::size_t sends = 0;
  for (const auto& r : c.trace().records()) {
    if (r.kind != "SEND") continue;
    ++sends;
    CHECK(r.int_attr("snapshot") == r.at.count() / Duration(100ms).count());
  }
  CHECK(sends > 50);
}

TEST_CASE("commands take effect at the next window boundary") {
  Coordinator c(RunConfig{testutil::load("scenarios/levelcrossing.json"), 0});
  c.run();
  SimTime issued{-1}, applied{-1};
  for (const auto& r : c.trace().records()) {
    if (r.kind == "COMMAND" && issued.count() < 0) issued = r.at;
    if (r.kind == "COMMAND_APPLIED" && applied.count() < 0) applied = r.at;
  }
  REQUIRE(issued.count() >= 0);
  CHECK(applied == SimTime((issued.count() / Duration(100ms).count() + 1) * Duration(100ms).count()));
}

TEST_CASE("every probe call is one sample and one PROBE record") {
  Coordinator c(RunConfig{testutil::load("scenarios/levelcrossing.json"), 0});
  const auto report = c.run();
  CHECK(report.samples.at("system_latency").size() == count(c.trace(), "PROBE"));
  CHECK(c.probes().size() == count(c.trace(), "PROBE"));
  for (const auto& p : c.probes()) CHECK(p.latency() > Duration::zero());
}

TEST_CASE("invalid scenarios are rejected before running") {
  auto s = testutil::load("scenarios/levelcrossing.json");
  s.step = 0ns;
  try {
    Coordinator c(RunConfig{s, 0});
    FAIL("expected validation failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kValidation);
  }
}

TEST_CASE("abort flag stops the run with an ABORT record") {
  std::atomic<bool> abort{true};
  std::ostringstream sink;
  RunOptions options;
  options.abort_flag = &abort;
  options.trace_sink = &sink;
  Coordinator c(RunConfig{testutil::load("scenarios/levelcrossing.json"), 0}, options);
  try {
    c.run();
    FAIL("expected abort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kAborted);
  }
  CHECK(c.trace().records().back().kind == "ABORT");
  CHECK(sink.str().find("\"ABORT\"") != std::string::npos);
}

TEST_CASE("repeated runs offset seeds and write per-run traces") {
  const auto dir = std::filesystem::temp_directory_path() / "iotstage_repeat_test";
  std::filesystem::create_directories(dir);
  auto s = testutil::load("scenarios/levelcrossing.json");
  s.duration = 12s;
  RepeatOptions options;
  options.trace_path = (dir / "trace.jsonl").string();
  const auto report = run_repeated(s, 3, options);
  CHECK(report.n_runs == 3);
  CHECK(!report.partial);
  REQUIRE(report.trace_hashes.size() == 3);
  CHECK(report.trace_hashes[0] != report.trace_hashes[1]);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto path = run_trace_path(options.trace_path, i, 3);
    CHECK(std::filesystem::exists(path));
    Trace t;
    for (auto& r : read_trace_file(path)) t.append(std::move(r));
    CHECK(t.hash() == report.trace_hashes[i]);
  }

  const auto one = run_repeated(s, 1);
  const auto single = run(RunConfig{s, 0});
  const auto summary = single.summary("system_latency");
  REQUIRE(summary);
  CHECK(one.tags.at("system_latency").pooled->mean_ms == summary->mean_ms);
  CHECK(one.tags.at("system_latency").runs->mean_ms == summary->mean_ms);
}

TEST_CASE("zero jitter gives zero spread across runs") {
  auto s = testutil::load("scenarios/fixtures/decomposition.json");
  const auto report = run_repeated(s, 5);
  CHECK(report.tags.at("system_latency").runs->std_ms == 0.0);
}

TEST_CASE("trace path patterns") {
  CHECK(run_trace_path("out/t.jsonl", 7, 100) == "out/t.run007.jsonl");
  CHECK(run_trace_path("out/t_{run}.jsonl", 7, 100) == "out/t_007.jsonl");
  CHECK(run_trace_path("out.d/trace", 2, 3) == "out.d/trace.run002");
  CHECK(run_trace_path("t.jsonl", 0, 1) == "t.jsonl");
  CHECK(run_trace_path("t.jsonl", 12, 5000) == "t.run0012.jsonl");
}

TEST_CASE("scaled pacing at rtf 2") {
  auto s = testutil::load("scenarios/levelcrossing.json");
  s.duration = 2s;
  s.mode = RunMode::kScaled;
  s.rtf = 2.0;
  const auto start = std::chrono::steady_clock::now();
  run(RunConfig{s, 0});
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(wall >= 1.0);
  CHECK(wall <= 1.2);
}
