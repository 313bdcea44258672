#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iotstage/common.hpp"

namespace iotstage {

// Statistics in milliseconds. std uses the n-1 denominator and is reported as
// 0 with std_defined = false for a single sample.
struct Summary {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  std::size_t count = 0;
  bool std_defined = false;
};

// Throws kEmptySamples.
Summary summarize(std::span<const Duration> samples);
Summary summarize_ms(std::span<const double> samples_ms);

// "{mean:.2f} ± {std:.2f} ms"
std::string format_summary(double mean_ms, double std_ms);
std::optional<std::pair<double, double>> parse_summary(std::string_view text);

// Meters covered at `speed_mps` during `latency`.
double distance_traveled(double speed_mps, Duration latency);

struct WindowReport {
  std::uint64_t index = 0;
  SimTime start{0};
  std::size_t events = 0;
  Duration lag{0};
};

struct RunReport {
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::vector<Duration>> samples;  // per probe tag, in record order
  std::string trace_hash;
  std::map<std::string, std::uint64_t> drops;
  std::vector<WindowReport> windows;
  Duration max_lag{0};
  double wall_seconds = 0.0;
  std::uint64_t events_processed = 0;
  std::size_t pending_events = 0;
  bool aborted = false;
  std::string abort_reason;

  std::optional<Summary> summary(const std::string& tag) const;
};

struct TagAggregate {
  // Two-level: statistics over per-run means (count = contributing runs).
  std::optional<Summary> runs;
  // Pooled: statistics over every sample of every run.
  std::optional<Summary> pooled;
};

struct MultiRunReport {
  std::string scenario_name;
  std::uint64_t seed = 0;
  std::size_t n_runs = 0;
  std::map<std::string, TagAggregate> tags;
  std::vector<std::string> trace_hashes;
  std::vector<RunReport> runs;
  std::map<std::string, std::string> overrides;
  bool partial = false;
  std::string error;

  std::string summary_line(const std::string& tag) const;
};

// Aggregates completed runs. `declared_tags` always appear, even without samples.
MultiRunReport aggregate_runs(std::string scenario_name, std::uint64_t seed,
                              std::vector<RunReport> runs,
                              const std::vector<std::string>& declared_tags);

std::string run_report_json(const RunReport& report);
std::string multi_run_report_json(const MultiRunReport& report);

// Writes the JSON document; throws kIo.
void emit_report(const RunReport& report, const std::string& path);
void emit_report(const MultiRunReport& report, const std::string& path);

}  // namespace iotstage
