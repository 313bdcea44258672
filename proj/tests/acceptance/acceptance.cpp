// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--workdir DIR] [--only N]...

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "iotstage/calibration.hpp"
#include "iotstage/cli.hpp"
#include "iotstage/coordinator.hpp"
#include "iotstage/levelcrossing.hpp"
#include "iotstage/metrics.hpp"
#include "iotstage/netsim.hpp"
#include "iotstage/trace.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace iotstage;
using namespace std::chrono_literals;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_workdir;

std::string source(const std::string& relative) {
  return std::string(IOTSTAGE_SOURCE_DIR) + "/" + relative;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::vector<TraceRecord> records_of(const Trace& trace) { return trace.records(); }

// Child process running the echo tool; killed on destruction.
class EchoProcess {
 public:
  explicit EchoProcess(const std::vector<std::string>& args) {
    int fds[2];
    if (pipe(fds) != 0) throw std::runtime_error("pipe failed");
    pid_ = fork();
    if (pid_ < 0) throw std::runtime_error("fork failed");
    if (pid_ == 0) {
      dup2(fds[1], STDOUT_FILENO);
      close(fds[0]);
      close(fds[1]);
      std::vector<std::string> full = {IOTSTAGE_ECHO_PATH};
      full.insert(full.end(), args.begin(), args.end());
      full.push_back("--max-seconds");
      full.push_back("120");
      std::vector<char*> argv;
      for (auto& a : full) argv.push_back(a.data());
      argv.push_back(nullptr);
      execv(argv[0], argv.data());
      _exit(127);
    }
    close(fds[1]);
    FILE* out = fdopen(fds[0], "r");
    char line[128] = {};
    if (out == nullptr || std::fgets(line, sizeof line, out) == nullptr) {
      throw std::runtime_error("echo process did not start");
    }
    unsigned port = 0;
    if (std::sscanf(line, "listening %u", &port) != 1) throw std::runtime_error("bad echo banner");
    port_ = static_cast<std::uint16_t>(port);
    out_ = out;
  }
  ~EchoProcess() {
    kill(pid_, SIGTERM);
    waitpid(pid_, nullptr, 0);
    if (out_ != nullptr) std::fclose(out_);
  }
  std::uint16_t port() const { return port_; }

 private:
  pid_t pid_ = -1;
  std::uint16_t port_ = 0;
  FILE* out_ = nullptr;
};

// ---------------------------------------------------------------------------

Outcome determinism() {
  const auto dir = g_workdir / "c1";
  fs::create_directories(dir);
  std::vector<std::string> hashes;
  double slowest = 0.0;
  for (int i = 0; i < 2; ++i) {
    const std::string trace = (dir / fmt::format("trace{}.jsonl", i)).string();
    std::ostringstream out, err;
    const auto start = Clock::now();
    const int code = run_cli({"run", source("scenarios/levelcrossing.json"), "--mode", "fast", "--seed",
                              "42", "--trace", trace},
                             out, err);
    slowest = std::max(slowest, seconds_since(start));
    if (code != 0) return {false, "run exited " + std::to_string(code) + ": " + err.str()};
    hashes.push_back(file_sha256(trace));
  }
  const bool pass = hashes[0] == hashes[1] && slowest < 5.0;
  return {pass, fmt::format("sha256 {}… equal={} slowest run {:.3f} s (< 5 s)", hashes[0].substr(0, 16),
                            hashes[0] == hashes[1], slowest)};
}

Outcome decomposition() {
  const auto s = load_scenario(source("scenarios/fixtures/decomposition.json"));
  // Oracle from scenario parameters: framed sizes are 28 B of header, type
  // byte, length byte and the sender id.
  const auto& ch = s.wireless->channel;
  const auto hop = [&](const std::string& sender) {
    const double bits = static_cast<double>(28 + 2 + sender.size()) * 8.0;
    return ch.latency.count() + static_cast<std::int64_t>(std::llround(bits * 1e9 / ch.bandwidth_bps));
  };
  const std::int64_t expected =
      hop("train") + s.find_node("crossing")->processing_delay.count() + hop("crossing");
  const auto report = run(RunConfig{s, 0});
  const auto& samples = report.samples.at("system_latency");
  std::size_t mismatches = 0;
  for (auto d : samples) mismatches += d.count() != expected;
  return {!samples.empty() && mismatches == 0,
          fmt::format("{} samples, analytic {} ns, mismatches {}", samples.size(), expected, mismatches)};
}

Outcome latency_distance() {
  const double d = distance_traveled(100.0, Duration(10'340'000));
  const bool pass = std::abs(d - 1.034) < 1e-12 && std::abs(d - 1.03) <= 0.01;
  return {pass, fmt::format("distance_traveled(100 m/s, 10.34 ms) = {:.4f} m vs 1.03 m", d)};
}

Outcome multi_run() {
  const auto dir = g_workdir / "c4";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto s = load_scenario(source("scenarios/levelcrossing.json"));
  RepeatOptions options;
  options.trace_path = (dir / "trace.jsonl").string();
  const auto start = Clock::now();
  const auto report = run_repeated(s, 100, options);
  const double elapsed = seconds_since(start);
  const auto& agg = report.tags.at("system_latency");
  if (!agg.runs) return {false, "no samples"};

  const auto& ch = s.wireless->channel;
  const auto tx = [&](std::size_t id_len) {
    return static_cast<double>(28 + 2 + id_len) * 8.0 / ch.bandwidth_bps * 1e3;
  };
  const double deterministic = 2 * to_ms(ch.latency) + tx(5) + tx(8) + to_ms(s.nodes[1].processing_delay);
  const double analytic = deterministic + 2 * to_ms(ch.jitter_max) / 2.0;

  // Independent recount from the trace files.
  std::vector<long double> run_means;
  std::size_t hash_mismatch = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::string path = run_trace_path(options.trace_path, i, 100);
    if (file_sha256(path) != report.trace_hashes[i]) ++hash_mismatch;
    std::ifstream in(path);
    std::string line;
    long double sum = 0;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      if (j["kind"] == "PROBE" && j["attrs"]["tag"] == "system_latency") {
        sum += j["attrs"]["latency_ns"].get<std::int64_t>();
        ++n;
      }
    }
    if (n != report.runs[i].samples.at("system_latency").size()) ++hash_mismatch;
    if (n > 0) run_means.push_back(sum / n / 1e6L);
  }
  long double mean = 0;
  for (auto m : run_means) mean += m;
  mean /= run_means.size();
  long double sq = 0;
  for (auto m : run_means) sq += (m - mean) * (m - mean);
  const long double sd = std::sqrt(sq / (run_means.size() - 1));
  const double dmean = std::abs(static_cast<double>(mean) - agg.runs->mean_ms);
  const double dstd = std::abs(static_cast<double>(sd) - agg.runs->std_ms);
  const bool recount_ok = hash_mismatch == 0 && run_means.size() == agg.runs->count && dmean < 1e-9 &&
                          dstd < 1e-9 &&
                          format_summary(static_cast<double>(mean), static_cast<double>(sd)) ==
                              format_summary(agg.runs->mean_ms, agg.runs->std_ms);

  const bool pass = std::abs(agg.runs->mean_ms - analytic) <= 0.15 && agg.runs->std_ms > 0 && recount_ok &&
                    elapsed < 180.0;
  return {pass, fmt::format("{} (analytic {:.3f} ms, |Δ| {:.3f}); recount |Δmean| {:.1e} |Δstd| {:.1e} ms, "
                            "file/hash mismatches {}; {:.1f} s",
                            format_summary(agg.runs->mean_ms, agg.runs->std_ms), analytic,
                            std::abs(agg.runs->mean_ms - analytic), dmean, dstd, hash_mismatch, elapsed)};
}

Outcome range_gating() {
  constexpr int kNodes = 15;
  constexpr double kRange = 250.0;
  Scenario s;
  s.name = "gating";
  s.duration = 1s;
  s.seed = 5;
  s.wireless = WirelessSpec{kRange, ChannelParams{1ms, 1e6, 0ns, 0.0}};
  for (int i = 0; i < kNodes; ++i) {
    NodeSpec n;
    n.id = fmt::format("n{:02}", i);
    n.behavior = "echo";
    n.position = Position{0, 0};
    s.nodes.push_back(n);
  }
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> coord(0.0, 800.0);
  std::size_t mismatches = 0, pairs = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Engine engine(1);
    Network net(s, engine);
    PositionSnapshot snap;
    snap.version = static_cast<std::uint64_t>(trial);
    for (const auto& n : s.nodes) snap.positions[n.id] = {coord(gen), coord(gen)};
    net.refresh_connectivity(snap);
    std::map<std::int64_t, std::set<NodeId>> delivered;
    engine.set_handler([&](const SimEvent& e) { net.complete_delivery(std::get<DeliveryPayload>(e.payload), true); });
    std::map<std::int64_t, NodeId> sender_of;
    for (const auto& [id, p] : snap.positions) {
      Packet pkt;
      pkt.src = id;
      pkt.dst = kBroadcast;
      pkt.payload = {0x00};
      net.send(pkt);
    }
    engine.run_until(1s);
    for (const auto& r : engine.trace().records()) {
      if (r.kind == "DELIVERY") delivered[r.int_attr("packet_id")].insert(r.subject);
      if (r.kind == "SEND") sender_of[r.int_attr("packet_id")] = r.subject;
    }
    for (const auto& [packet, src] : sender_of) {
      const Position a = snap.positions.at(src);
      std::set<NodeId> expected;
      for (const auto& [other, b] : snap.positions) {
        if (other == src) continue;
        const double dx = a.x - b.x, dy = a.y - b.y;
        if (std::sqrt(dx * dx + dy * dy) <= kRange) expected.insert(other);
      }
      pairs += expected.size();
      mismatches += delivered[packet] != expected;
    }
  }
  return {mismatches == 0,
          fmt::format("100 snapshots x {} senders, {} in-range pairs, mismatching sets {}", kNodes, pairs, mismatches)};
}

Outcome partition() {
  const auto s = load_scenario(source("scenarios/fixtures/partition.json"));
  Coordinator c(RunConfig{s, 0});
  c.run();
  const auto group = [](const std::string& n) { return n == "train" ? 0 : 1; };
  std::size_t cross_inside = 0, cross_outside = 0, dropped = 0;
  for (const auto& r : c.trace().records()) {
    const bool inside = r.at >= SimTime(2s) && r.at < SimTime(4s);
    if (r.kind == "DELIVERY" && group(r.str_attr("src")) != group(r.subject)) {
      (inside ? cross_inside : cross_outside) += 1;
    }
    if (r.kind == "DROP_PARTITION" && inside) ++dropped;
  }

  // Partition spanning the whole announce window of the default scenario.
  auto full = load_scenario(source("scenarios/levelcrossing.json"));
  FaultSpec split;
  split.at = 4500ms;
  split.kind = FaultKind::kPartition;
  split.params.groups = {{"train"}, {"crossing", "car"}};
  FaultSpec heal;
  heal.at = 12s;
  heal.kind = FaultKind::kPartitionHeal;
  full.faults = {split, heal};
  Coordinator f(RunConfig{full, 0});
  f.run();
  std::size_t stops = 0, approach_sends = 0;
  for (const auto& r : f.trace().records()) {
    if (r.kind == "COMMAND_APPLIED" && r.subject == "car" && r.str_attr("command") == "Stop") ++stops;
    if (r.kind == "SEND" && r.str_attr("label") == "APPROACH") ++approach_sends;
  }

  const bool pass = cross_inside == 0 && cross_outside > 0 && dropped > 0 && stops == 0 && approach_sends > 0;
  return {pass, fmt::format("cross-group deliveries in [2 s, 4 s): {} (outside: {}, DROP_PARTITION inside: {}); "
                            "full-window partition: {} APPROACH sends, car stops {}",
                            cross_inside, cross_outside, dropped, approach_sends, stops)};
}

Outcome crash() {
  const auto s = load_scenario(source("scenarios/fixtures/crash.json"));
  Coordinator c(RunConfig{s, 0});
  c.run();
  std::size_t during = 0, after = 0, before = 0;
  for (const auto& r : c.trace().records()) {
    if ((r.kind != "SEND" && r.kind != "DELIVERY") || r.str_attr("label") != "STOP") continue;
    if (r.at < SimTime(5s)) ++before;
    else if (r.at < SimTime(7s)) ++during;
    else ++after;
  }
  return {during == 0 && after > 0,
          fmt::format("STOP records before 5 s: {}, in [5 s, 7 s): {}, after 7 s: {}", before, during, after)};
}

Outcome safety() {
  const auto base = load_scenario(source("scenarios/levelcrossing.json"));
  double min_distance = 1e300;
  std::size_t failures = 0, windows = 0, unfinished = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto s = base;
    s.seed = seed;
    Coordinator c(RunConfig{s, 0});
    c.run();
    const auto result = levelcrossing::check_safety(c.trace().records(), levelcrossing::CrossingLayout{}, "train", "car");
    if (!result.ok || result.windows_checked == 0) ++failures;
    windows += result.windows_checked;
    min_distance = std::min(min_distance, result.min_car_distance);
    if (!levelcrossing::reached_end(c.trace().records(), "car", SimTime(s.duration))) ++unfinished;
  }
  return {failures == 0,
          fmt::format("seeds 1..20: failing seeds {}, {} windows with train within 50 m, min car distance {:.2f} m "
                      "(> 5 m); car finished in {}/20",
                      failures, windows, min_distance, 20 - unfinished)};
}

Outcome realtime() {
  auto s = load_scenario(source("scenarios/levelcrossing.json"));
  s.duration = 2s;
  s.mode = RunMode::kRealtime;
  const auto start = Clock::now();
  const auto report = run(RunConfig{s, 0});
  const double wall = seconds_since(start);
  const double lag_ms = to_ms(report.max_lag);
  return {wall >= 2.0 && wall <= 2.2 && lag_ms < 50.0,
          fmt::format("wall {:.3f} s in [2.0, 2.2], max window lag {:.3f} ms (< 50)", wall, lag_ms)};
}

// Sends numbered random payloads to the external node and checks every reply
// for byte equality with what was sent.
class IntegritySender final : public Behavior {
 public:
  void on_start(NodeContext& ctx) override { on_timer(ctx, "send"); }
  void on_timer(NodeContext& ctx, const std::string&) override {
    if (sent_.size() >= 20) return;
    Bytes payload(64);
    for (auto& b : payload) b = static_cast<std::uint8_t>(gen_());
    payload[0] = static_cast<std::uint8_t>(sent_.size());
    sent_.push_back(payload);
    ctx.send("device", payload, ctx.now(), "DATA");
    ctx.set_timer(200ms, "send");
  }
  void on_message(NodeContext& ctx, const NodeId&, std::span<const std::uint8_t> payload,
                  std::optional<SimTime> origin) override {
    const bool known = !payload.empty() && payload[0] < sent_.size();
    const bool exact = known && std::equal(payload.begin(), payload.end(), sent_[payload[0]].begin(),
                                           sent_[payload[0]].end());
    ctx.annotate("reply", {{"exact", exact}});
    if (origin) ctx.record_probe("rtt", *origin);
  }

 private:
  std::mt19937 gen_{17};
  std::vector<Bytes> sent_;
};

Outcome hil_loopback() {
  constexpr double kTurnaroundMs = 5.0;
  const Duration slack = 2 * 100ms + 20ms;

  // Level-crossing round with the crossing on the far side of the gateway.
  EchoProcess lc_echo({"--port", "0", "--delay-ms", "5", "--rewrite", "levelcrossing"});
  auto s = load_scenario(source("scenarios/fixtures/external.json"));
  s.duration = 8s;
  s.mobility[0].route = {{400, 0}, {2000, 0}};
  auto& crossing = s.nodes[1];
  crossing.external->peer = "127.0.0.1:" + std::to_string(lc_echo.port());
  const auto& ch = s.wireless->channel;
  const auto tx = [&](std::size_t id_len) {
    return Duration(std::llround(static_cast<double>(28 + 2 + id_len) * 8e9 / ch.bandwidth_bps));
  };
  // Both directions carry the train's id: the echo only rewrites the type byte.
  const Duration analytic = 2 * ch.latency + tx(5) + tx(5) + Duration(static_cast<std::int64_t>(kTurnaroundMs * 1e6));
  Coordinator c(RunConfig{s, 0});
  const auto report = c.run();
  const auto& samples = report.samples.at("system_latency");
  std::size_t out_of_bounds = 0;
  Duration worst{0};
  for (auto d : samples) {
    const Duration excess = d - analytic;
    worst = std::max(worst, excess);
    out_of_bounds += excess < Duration::zero() || excess > slack;
  }
  std::size_t stops = 0, resumes = 0;
  for (const auto& r : c.trace().records()) {
    if (r.kind == "COMMAND_APPLIED" && r.subject == "car") {
      stops += r.str_attr("command") == "Stop";
      resumes += r.str_attr("command") == "Resume";
    }
  }

  // Verbatim echo: payload integrity and RTT bounds.
  EchoProcess raw_echo({"--port", "0", "--delay-ms", "5"});
  Scenario b;
  b.name = "integrity";
  b.duration = 5s;
  b.seed = 1;
  b.mode = RunMode::kRealtime;
  b.wireless = WirelessSpec{100, ChannelParams{2ms, 1e7, 0ns, 0.0}};
  NodeSpec sender{"sender", "integrity_sender", {}, Position{0, 0}, {}, 0ns, {}};
  NodeSpec device{"device", "", {}, Position{10, 0}, {}, 0ns,
                  ExternalSpec{47121, "127.0.0.1:" + std::to_string(raw_echo.port())}};
  b.nodes = {sender, device};
  auto registry = BehaviorRegistry::with_builtins();
  registry.register_behavior("integrity_sender", [](const Params&) { return std::make_unique<IntegritySender>(); });
  RunOptions options;
  options.registry = &registry;
  Coordinator ic(RunConfig{b, 0}, options);
  const auto ireport = ic.run();
  std::size_t exact = 0, replies = 0;
  for (const auto& r : ic.trace().records()) {
    if (r.kind == "APP" && r.str_attr("event") == "reply") {
      ++replies;
      exact += std::get<bool>(*r.find("exact"));
    }
  }
  const Duration rtt_analytic =
      2 * (2ms + Duration(std::llround((64.0 + 28) * 8e9 / 1e7))) + Duration(static_cast<std::int64_t>(kTurnaroundMs * 1e6));
  std::size_t rtt_bad = 0;
  for (auto d : ireport.samples.at("rtt")) {
    const Duration excess = d - rtt_analytic;
    rtt_bad += excess < Duration::zero() || excess > slack;
  }

  const bool pass = !samples.empty() && out_of_bounds == 0 && stops >= 1 && resumes >= 1 && replies == 20 &&
                    exact == replies && rtt_bad == 0;
  return {pass, fmt::format("crossing via gateway: {} samples, analytic {:.3f} ms, worst excess {:.3f} ms "
                            "(bound 0..{:.0f}), out of bounds {}, car stop/resume {}/{}; "
                            "verbatim echo: {}/{} payloads byte-exact, RTT out of bounds {}",
                            samples.size(), to_ms(analytic), to_ms(worst), to_ms(slack), out_of_bounds, stops,
                            resumes, exact, replies, rtt_bad)};
}

Outcome calibration_loop() {
  EchoProcess echo({"--port", "0", "--delay-ms", "5"});
  ProbeOptions options;
  options.target = "127.0.0.1:" + std::to_string(echo.port());
  options.count = 50;
  options.spacing = 20ms;
  options.timeout = 1s;
  const auto first = estimate(probe(options));

  const auto base = load_scenario(source("scenarios/fixtures/calibration.json"));
  const auto merged = merge_calibration(base, first, ChannelSelector::wireless_channel());
  if (!validate(merged).empty()) return {false, "merged scenario does not validate"};
  const auto report = run(RunConfig{merged, 0});
  const auto& rtts = report.samples.at("rtt");
  const std::size_t sent = 50;
  const auto second = estimate(rtts, sent - std::min(sent, rtts.size()));
  const double rel = std::abs(to_ms(second.latency) - to_ms(first.latency)) / to_ms(first.latency);
  return {rel <= 0.10,
          fmt::format("real: latency {:.3f} ms jitter {:.3f} ms ({} samples); simulated re-estimate: latency "
                      "{:.3f} ms ({} samples); deviation {:.1f}% (<= 10%)",
                      to_ms(first.latency), to_ms(first.jitter_max), first.sample_count, to_ms(second.latency),
                      second.sample_count, rel * 100)};
}

Outcome round_trip() {
  std::vector<std::string> files = {source("scenarios/levelcrossing.json")};
  for (const auto& e : fs::directory_iterator(source("scenarios/fixtures"))) {
    if (e.path().extension() == ".json" && e.path().filename() != "expected_violations.json") {
      files.push_back(e.path().string());
    }
  }
  std::size_t round_trip_failures = 0;
  for (const auto& f : files) {
    const auto s = load_scenario(f);
    if (!validate(s).empty() || parse_scenario(serialize_scenario(s)) != s) ++round_trip_failures;
  }

  std::ifstream in(source("scenarios/fixtures/expected_violations.json"));
  const auto expected = nlohmann::json::parse(in);
  std::size_t code_failures = 0;
  std::string first_failure;
  for (const auto& [name, codes] : expected.items()) {
    std::set<std::string> want(codes.begin(), codes.end());
    std::set<std::string> got;
    try {
      for (const auto& v : validate(load_scenario(source("scenarios/fixtures/invalid/" + name)))) got.insert(v.code);
    } catch (const Error& e) {
      got.insert(std::string(error_code_name(e.code())));
    }
    if (got != want) {
      ++code_failures;
      if (first_failure.empty()) first_failure = name;
    }
  }
  return {round_trip_failures == 0 && code_failures == 0 && files.size() >= 6 && expected.size() >= 10,
          fmt::format("{} valid fixtures round-trip (failures {}); {} invalid fixtures, code mismatches {}{}",
                      files.size(), round_trip_failures, expected.size(), code_failures,
                      first_failure.empty() ? "" : " (first: " + first_failure + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string workdir = (fs::temp_directory_path() / "iotstage_acceptance").string();
  std::vector<int> only;
  app.add_option("--workdir", workdir, "Scratch directory for traces");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  g_workdir = workdir;
  fs::create_directories(g_workdir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"determinism", determinism},
      {"latency decomposition", decomposition},
      {"latency to distance", latency_distance},
      {"multi-run statistics", multi_run},
      {"range gating", range_gating},
      {"partition fault", partition},
      {"crash fault", crash},
      {"safety property", safety},
      {"realtime pacing", realtime},
      {"HIL loopback", hil_loopback},
      {"calibration loop", calibration_loop},
      {"scenario round-trip", round_trip},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << fmt::format("{} {:>2} {}: {}", o.pass ? "PASS" : "FAIL", number, criteria[i].first, o.detail)
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
