#include "iotstage/fault.hpp"

#include <algorithm>
#include <sstream>

namespace iotstage {

namespace {

SimTime quantize(SimTime at, Duration step) { return (at / step) * step; }

std::string describe(const FaultParams& p) {
  std::ostringstream out;
  const char* sep = "";
  if (p.restart_at) { out << sep << "restart_ns=" << p.restart_at->count(); sep = ";"; }
  if (!p.groups.empty()) {
    out << sep << "groups=";
    for (std::size_t g = 0; g < p.groups.size(); ++g) {
      out << (g ? "|" : "");
      for (std::size_t m = 0; m < p.groups[g].size(); ++m) out << (m ? "," : "") << p.groups[g][m];
    }
    sep = ";";
  }
  if (p.loss) { out << sep << "loss=" << *p.loss; sep = ";"; }
  if (p.latency) { out << sep << "latency_ns=" << p.latency->count(); sep = ";"; }
  if (p.probability) { out << sep << "p=" << *p.probability; sep = ";"; }
  if (p.duration) { out << sep << "duration_ns=" << p.duration->count(); sep = ";"; }
  if (p.speed_mps) { out << sep << "speed_mps=" << *p.speed_mps; sep = ";"; }
  for (const auto& [k, v] : p.values) { out << sep << k << "=" << v; sep = ";"; }
  return out.str();
}

bool revertible(FaultKind kind) {
  return kind == FaultKind::kLossOverride || kind == FaultKind::kLatencyOverride ||
         kind == FaultKind::kEntitySpeedOverride;
}

}  // namespace

std::vector<ScheduledFault> fault_schedule(const Scenario& scenario) {
  std::vector<ScheduledFault> out;
  for (std::size_t i = 0; i < scenario.faults.size(); ++i) {
    const FaultSpec& f = scenario.faults[i];
    out.push_back({quantize(f.at, scenario.step), i, f, ScheduledFault::Phase::kApply});
    if (f.kind == FaultKind::kNodeCrash && f.params.restart_at) {
      FaultSpec restart{*f.params.restart_at, FaultKind::kNodeRestart, f.target, {}};
      out.push_back({quantize(restart.at, scenario.step), i, restart, ScheduledFault::Phase::kApply});
    }
    if (revertible(f.kind) && f.params.duration) {
      out.push_back({quantize(f.at + *f.params.duration, scenario.step), i, f,
                     ScheduledFault::Phase::kRevert});
    }
  }
  // Actions at or beyond the end of the run never fire.
  std::erase_if(out, [&](const ScheduledFault& f) { return f.at >= scenario.duration; });
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.at != b.at) return a.at < b.at;
    return a.declaration < b.declaration;
  });
  return out;
}

void schedule_fault_events(Engine& engine, const std::vector<ScheduledFault>& schedule) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    engine.schedule(schedule[i].at, EventKind::kFaultApply, FaultPayload{i});
  }
}

void FaultInjector::apply(const ScheduledFault& fault) {
  const FaultSpec& f = fault.spec;
  const bool revert = fault.phase == ScheduledFault::Phase::kRevert;
  const FaultParams& p = f.params;

  switch (f.kind) {
    case FaultKind::kNodeCrash:
      if (!network_.is_node(f.target)) throw Error(ErrorCode::kUnknownTarget, f.target);
      runtime_.crash(f.target);
      break;
    case FaultKind::kNodeRestart:
      if (!network_.is_node(f.target)) throw Error(ErrorCode::kUnknownTarget, f.target);
      runtime_.restart(f.target);
      break;
    case FaultKind::kLinkDown:
    case FaultKind::kLinkUp:
      for (const auto& key : network_.resolve(f.target)) {
        network_.channel(key).enabled = f.kind == FaultKind::kLinkUp;
      }
      break;
    case FaultKind::kPartition:
      for (const auto& key : network_.resolve(f.target)) network_.channel(key).partition = p.groups;
      break;
    case FaultKind::kPartitionHeal:
      for (const auto& key : network_.resolve(f.target)) network_.channel(key).partition.reset();
      break;
    case FaultKind::kLossOverride:
      for (const auto& key : network_.resolve(f.target)) {
        auto& ch = network_.channel(key);
        ch.spec.loss = revert ? ch.base.loss : p.loss.value_or(ch.spec.loss);
      }
      break;
    case FaultKind::kLatencyOverride:
      for (const auto& key : network_.resolve(f.target)) {
        auto& ch = network_.channel(key);
        ch.spec.latency = revert ? ch.base.latency : p.latency.value_or(ch.spec.latency);
      }
      break;
    case FaultKind::kMessageCorrupt: {
      const std::string target = f.target.empty() ? "*" : f.target;
      if (target != "*") {
        const auto keys = network_.resolve(target);
        network_.add_corruption({keys.front(), p.probability.value_or(0.0), engine_.now(),
                                 engine_.now() + p.duration.value_or(Duration::zero())});
      } else {
        network_.add_corruption({"*", p.probability.value_or(0.0), engine_.now(),
                                 engine_.now() + p.duration.value_or(Duration::zero())});
      }
      break;
    }
    case FaultKind::kEntitySpeedOverride: {
      if (!mobility_.contains(f.target)) throw Error(ErrorCode::kUnknownTarget, f.target);
      EntityCommand cmd;
      cmd.entity = f.target;
      cmd.kind = EntityCommand::Kind::kSetSpeed;
      cmd.issued_at = engine_.now();
      if (revert) {
        auto it = saved_speeds_.find(f.target);
        cmd.value = it != saved_speeds_.end() ? it->second : mobility_.entity(f.target).speed();
      } else {
        saved_speeds_.try_emplace(f.target, mobility_.entity(f.target).speed());
        cmd.value = p.speed_mps.value_or(mobility_.entity(f.target).speed());
      }
      // Applied directly: the fault fires at window start, before this window's mobility step.
      mobility_.apply_command(cmd);
      break;
    }
    case FaultKind::kBehaviorFault:
      runtime_.inject_fault(f.target, p.values);
      break;
  }

  engine_.trace().emit(engine_.now(), "FAULT", f.target.empty() ? "*" : f.target,
                       {{"kind", std::string(fault_kind_name(f.kind))},
                        {"target", f.target},
                        {"phase", std::string(revert ? "revert" : "apply")},
                        {"declared_at_ns", f.at.count()},
                        {"params", describe(p)}});
}

}  // namespace iotstage
