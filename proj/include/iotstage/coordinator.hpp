#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "iotstage/metrics.hpp"
#include "iotstage/node_runtime.hpp"
#include "iotstage/scenario.hpp"
#include "iotstage/trace.hpp"

namespace iotstage {

struct RunConfig {
  Scenario scenario;
  std::size_t run_index = 0;

  std::uint64_t effective_seed() const { return scenario.seed + run_index; }
};

struct RunOptions {
  const BehaviorRegistry* registry = nullptr;  // default_registry() when null
  std::ostream* trace_sink = nullptr;          // JSONL stream, written as the run goes
  bool retain_trace = true;                    // keep records in memory
  const std::atomic<bool>* abort_flag = nullptr;
  // Invoked once the gateway sockets are bound, before the first window.
  std::function<void(const class Gateway&)> on_gateway_ready;
};

// Advances the network DES and the mobility simulator in lockstep windows of
// the scenario step. Per window [t, t + step):
//   1. pace against the wall clock (realtime/scaled only)
//   2. drain gateway injections, stamped at t
//   3. apply queued entity commands, last issued wins
//   4. process DES events in [t, t + step) with the snapshot taken at t;
//      faults quantized to t are scheduled first and therefore run first
//   5. step mobility by the window length
//   6. refresh connectivity with the new snapshot
class Coordinator {
 public:
  Coordinator(RunConfig config, RunOptions options = {});
  ~Coordinator();
  Coordinator(const Coordinator&) = delete;
  Coordinator& operator=(const Coordinator&) = delete;

  // Throws kValidation for an invalid scenario, kAborted when the abort flag
  // trips, and propagates runtime errors after writing an ABORT record.
  RunReport run();

  const Trace& trace() const;
  const std::vector<ProbeRecord>& probes() const;

 private:
  struct State;
  RunConfig config_;
  RunOptions options_;
  std::unique_ptr<State> state_;
};

RunReport run(const RunConfig& config, const RunOptions& options = {});

struct RepeatOptions {
  const BehaviorRegistry* registry = nullptr;
  // Per-run trace files; "{run}" is replaced by the zero-padded run index,
  // otherwise ".runNNN" is inserted before the extension when n > 1. Empty:
  // no files.
  std::string trace_path;
  const std::atomic<bool>* abort_flag = nullptr;
};

std::string run_trace_path(const std::string& pattern, std::size_t run_index, std::size_t n_runs);

// Runs n times with run_index 0..n-1. A failing run stops the series; the
// report then carries the completed runs with partial = true.
MultiRunReport run_repeated(const Scenario& scenario, std::size_t n,
                            const RepeatOptions& options = {});

}  // namespace iotstage
