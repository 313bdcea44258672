#pragma once

#include <map>
#include <vector>

#include "iotstage/des.hpp"
#include "iotstage/mobility.hpp"
#include "iotstage/netsim.hpp"
#include "iotstage/node_runtime.hpp"
#include "iotstage/scenario.hpp"

namespace iotstage {

struct ScheduledFault {
  enum class Phase { kApply, kRevert };

  SimTime at{0};             // quantized to the containing window's start
  std::size_t declaration = 0;
  FaultSpec spec;
  Phase phase = Phase::kApply;
};

// Expands the scenario's faults into window-quantized actions ordered by
// (at, declaration order). NodeCrash with a restart time contributes a
// NodeRestart action; overrides with a duration contribute a revert action.
std::vector<ScheduledFault> fault_schedule(const Scenario& scenario);

// One FaultApply event per scheduled fault; payload indexes into `schedule`.
void schedule_fault_events(Engine& engine, const std::vector<ScheduledFault>& schedule);

class FaultInjector {
 public:
  FaultInjector(Engine& engine, Network& network, NodeRuntime& runtime, Mobility& mobility)
      : engine_(engine), network_(network), runtime_(runtime), mobility_(mobility) {}

  // Throws kUnknownTarget or kRestartWithoutCrash.
  void apply(const ScheduledFault& fault);

 private:
  Engine& engine_;
  Network& network_;
  NodeRuntime& runtime_;
  Mobility& mobility_;
  std::map<EntityId, double> saved_speeds_;
};

}  // namespace iotstage
