#include "iotstage/coordinator.hpp"

#include <fstream>
#include <optional>
#include <thread>

#include "iotstage/des.hpp"
#include "iotstage/fault.hpp"
#include "iotstage/gateway.hpp"
#include "iotstage/mobility.hpp"
#include "iotstage/netsim.hpp"

namespace iotstage {

namespace {

using Clock = std::chrono::steady_clock;

// Maps simulated time onto the wall clock for realtime and scaled runs.
class Pacer {
 public:
  Pacer(RunMode mode, double rtf)
      : enabled_(mode != RunMode::kFast), rtf_(mode == RunMode::kScaled ? rtf : 1.0) {}

  void start() { origin_ = Clock::now(); }
  bool enabled() const { return enabled_; }

  Clock::time_point wall_target(SimTime t) const {
    const double scaled = static_cast<double>(t.count()) / rtf_;
    return origin_ + std::chrono::duration_cast<Clock::duration>(
                         std::chrono::duration<double, std::nano>(scaled));
  }

  // Sleeps until the wall clock reaches t and returns how late we are.
  Duration wait_until(SimTime t) const {
    if (!enabled_) return Duration::zero();
    const auto target = wall_target(t);
    std::this_thread::sleep_until(target);
    return std::chrono::duration_cast<Duration>(Clock::now() - target);
  }

  double elapsed_seconds() const {
    return std::chrono::duration<double>(Clock::now() - origin_).count();
  }

 private:
  bool enabled_;
  double rtf_;
  Clock::time_point origin_{};
};

std::string join_violations(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.code + " at " + v.path;
  }
  return out;
}

}  // namespace

struct Coordinator::State final : RuntimeHost {
  State(const Scenario& s, std::uint64_t seed, const BehaviorRegistry& registry)
      : scenario(s),
        engine(seed),
        network(scenario, engine),
        mobility(scenario.mobility),
        runtime(engine, registry, *this),
        injector(engine, network, runtime, mobility),
        faults(fault_schedule(scenario)),
        pacer(scenario.mode, scenario.rtf) {}

  // RuntimeHost
  void transmit(Packet packet) override { network.send(std::move(packet)); }

  Position node_position(const NodeId& node) const override {
    const auto& positions = network.snapshot().positions;
    auto it = positions.find(node);
    if (it == positions.end()) throw Error(ErrorCode::kUnknownNode, "no position for " + node);
    return it->second;
  }

  void queue_command(EntityCommand command) override {
    if (!mobility.contains(command.entity)) throw Error(ErrorCode::kUnknownEntity, command.entity);
    pending_commands.push_back(std::move(command));
  }

  void collect_probe(ProbeRecord record) override { probes.push_back(std::move(record)); }

  PositionSnapshot make_snapshot(std::uint64_t version) const {
    PositionSnapshot snap;
    snap.version = version;
    for (const auto& n : scenario.nodes) {
      snap.positions[n.id] = n.entity ? mobility.position_of(*n.entity) : n.position.value_or(Position{});
    }
    return snap;
  }

  void emit_positions(SimTime at) {
    for (const auto& [id, entity] : mobility.entities()) {
      const Position p = entity.position();
      engine.trace().emit(at, "POSITION", id,
                          {{"entity", id},
                           {"x", p.x},
                           {"y", p.y},
                           {"state", std::string(entity_state_name(entity.state()))},
                           {"progress", entity.progress()}});
    }
  }

  void handle(const SimEvent& event) {
    switch (event.kind) {
      case EventKind::kPacketSend:
        runtime.release_send(std::get<SendPayload>(event.payload));
        break;
      case EventKind::kPacketDelivery: {
        const auto& d = std::get<DeliveryPayload>(event.payload);
        NodeState& receiver = runtime.state(d.receiver);
        auto packet = network.complete_delivery(d, receiver.alive);
        if (!packet) break;
        if (receiver.spec->external) {
          deliver_external(*packet, d.receiver);
        } else {
          runtime.dispatch_delivery(*packet, receiver);
        }
        break;
      }
      case EventKind::kTimerFire:
        runtime.fire_timer(std::get<TimerPayload>(event.payload));
        break;
      case EventKind::kFaultApply:
        injector.apply(faults.at(std::get<FaultPayload>(event.payload).index));
        break;
      case EventKind::kExternalInjection:
        inject(std::get<InjectionPayload>(event.payload));
        break;
      case EventKind::kWindowBoundary:
        break;
    }
  }

  void deliver_external(const Packet& packet, const NodeId& node) {
    // Egress leaves at the delivery's own wall-clock time, not the window's.
    pacer.wait_until(engine.now());
    if (gateway && gateway->egress(packet, node)) {
      engine.trace().emit(engine.now(), "EGRESS", node,
                          {{"packet_id", static_cast<std::int64_t>(packet.id)},
                           {"bytes", static_cast<std::int64_t>(packet.payload.size())}});
    } else {
      engine.trace().emit(engine.now(), "WARNING", node,
                          {{"reason", std::string("EGRESS_FAILED")},
                           {"packet_id", static_cast<std::int64_t>(packet.id)}});
    }
  }

  void inject(const InjectionPayload& injection) {
    if (!runtime.alive(injection.node)) {
      engine.trace().emit(engine.now(), "INGRESS_DROPPED", injection.node,
                          {{"reason", std::string("node crashed")},
                           {"bytes", static_cast<std::int64_t>(injection.payload.size())}});
      return;
    }
    engine.trace().emit(engine.now(), "INGRESS", injection.node,
                        {{"bytes", static_cast<std::int64_t>(injection.payload.size())}});
    Packet packet;
    packet.src = injection.node;
    packet.dst = kBroadcast;
    packet.payload = injection.payload;
    packet.origin_stamp = injection.origin_stamp;
    packet.label = "EXTERNAL";
    network.send(std::move(packet));
  }

  void drain_gateway(SimTime t) {
    if (!gateway) return;
    if (const auto oversize = gateway->take_oversize_count(); oversize > 0) {
      engine.trace().emit(t, "WARNING", "gateway",
                          {{"reason", std::string("OVERSIZE_DATAGRAM")},
                           {"count", static_cast<std::int64_t>(oversize)}});
    }
    for (auto& request : gateway->drain()) {
      engine.schedule(t, EventKind::kExternalInjection,
                      InjectionPayload{request.node, std::move(request.payload), request.origin_stamp});
    }
  }

  void apply_commands(SimTime t) {
    if (pending_commands.empty()) return;
    auto applied = mobility.apply_commands(std::move(pending_commands));
    pending_commands.clear();
    for (const auto& [command, outcome] : applied) {
      if (outcome == CommandOutcome::kApplied) {
        engine.trace().emit(t, "COMMAND_APPLIED", command.entity,
                            {{"command", std::string(command_kind_name(command.kind))},
                             {"value", command.value},
                             {"issued_ns", command.issued_at.count()}});
      } else {
        engine.trace().emit(t, "WARNING", command.entity,
                            {{"reason", std::string("COMMAND_AFTER_FINISH")},
                             {"command", std::string(command_kind_name(command.kind))}});
      }
    }
  }

  Scenario scenario;
  Engine engine;
  Network network;
  Mobility mobility;
  NodeRuntime runtime;
  FaultInjector injector;
  std::vector<ScheduledFault> faults;
  Pacer pacer;
  std::unique_ptr<Gateway> gateway;
  std::vector<EntityCommand> pending_commands;
  std::vector<ProbeRecord> probes;
  std::vector<WindowReport> windows;
};

Coordinator::Coordinator(RunConfig config, RunOptions options)
    : config_(std::move(config)), options_(std::move(options)) {
  const BehaviorRegistry& registry =
      options_.registry != nullptr ? *options_.registry : default_registry();
  if (auto violations = validate(config_.scenario, registry); !violations.empty()) {
    throw Error(ErrorCode::kValidation, join_violations(violations));
  }
  state_ = std::make_unique<State>(config_.scenario, config_.effective_seed(), registry);
  state_->engine.trace().set_sink(options_.trace_sink);
  state_->engine.trace().set_retain(options_.retain_trace);
  state_->engine.set_handler([this](const SimEvent& e) { state_->handle(e); });
}

Coordinator::~Coordinator() = default;

const Trace& Coordinator::trace() const { return state_->engine.trace(); }
const std::vector<ProbeRecord>& Coordinator::probes() const { return state_->probes; }

RunReport Coordinator::run() {
  State& s = *state_;
  const Scenario& sc = s.scenario;
  Trace& trace = s.engine.trace();
  RunReport report;
  report.run_index = config_.run_index;
  report.seed = config_.effective_seed();

  try {
    if (sc.has_external_nodes()) {
      s.gateway = std::make_unique<Gateway>(sc);
      if (options_.on_gateway_ready) options_.on_gateway_ready(*s.gateway);
      s.gateway->start();
    }

    trace.emit(SimTime{0}, "RUN_START", sc.name,
               {{"seed", static_cast<std::int64_t>(report.seed)},
                {"run_index", static_cast<std::int64_t>(config_.run_index)},
                {"mode", std::string(run_mode_name(sc.mode))},
                {"step_ns", sc.step.count()},
                {"duration_ns", sc.duration.count()}});

    s.network.refresh_connectivity(s.make_snapshot(0));
    s.emit_positions(SimTime{0});
    for (const auto& node : sc.nodes) s.runtime.start_node(node);
    schedule_fault_events(s.engine, s.faults);

    s.pacer.start();
    std::uint64_t index = 0;
    for (SimTime t{0}; t < sc.duration; ++index) {
      const SimTime end = std::min<SimTime>(t + sc.step, sc.duration);
      const Duration lag = s.pacer.wait_until(t);
      if (options_.abort_flag != nullptr && options_.abort_flag->load()) {
        throw Error(ErrorCode::kAborted, "interrupted at window " + std::to_string(index));
      }
      s.drain_gateway(t);
      s.apply_commands(t);
      const std::size_t events = s.engine.run_until(end);
      s.mobility.step(end - t);
      s.network.refresh_connectivity(s.make_snapshot(index + 1));

      s.windows.push_back(WindowReport{index, t, events, lag});
      report.max_lag = std::max(report.max_lag, lag);
      trace.emit(end, "WINDOW", "coordinator",
                 {{"index", static_cast<std::int64_t>(index)},
                  {"t", t.count()},
                  {"events", static_cast<std::int64_t>(events)},
                  {"lag_ns", lag.count()}});
      s.emit_positions(end);
      t = end;
    }
    s.pacer.wait_until(sc.duration);

    trace.emit(sc.duration, "RUN_END", sc.name,
               {{"events", static_cast<std::int64_t>(s.engine.processed_total())},
                {"pending", static_cast<std::int64_t>(s.engine.pending())}});
  } catch (const std::exception& e) {
    trace.emit(s.engine.now(), "ABORT", sc.name, {{"reason", std::string(e.what())}});
    trace.flush();
    if (s.gateway) s.gateway->stop();
    throw;
  }
  if (s.gateway) s.gateway->stop();
  trace.flush();

  for (const auto& p : sc.probes) report.samples[p.tag];
  for (const auto& p : s.probes) report.samples[p.tag].push_back(p.latency());
  report.trace_hash = trace.hash();
  report.drops = s.network.drop_counts();
  report.windows = s.windows;
  report.wall_seconds = s.pacer.elapsed_seconds();
  report.events_processed = s.engine.processed_total();
  report.pending_events = s.engine.pending();
  return report;
}

RunReport run(const RunConfig& config, const RunOptions& options) {
  Coordinator coordinator(config, options);
  return coordinator.run();
}

std::string run_trace_path(const std::string& pattern, std::size_t run_index, std::size_t n_runs) {
  std::size_t width = 3;
  for (std::size_t v = n_runs > 0 ? n_runs - 1 : 0; v >= 1000; v /= 10) ++width;
  std::string index = std::to_string(run_index);
  if (index.size() < width) index.insert(0, width - index.size(), '0');
  if (const auto pos = pattern.find("{run}"); pos != std::string::npos) {
    return pattern.substr(0, pos) + index + pattern.substr(pos + 5);
  }
  if (n_runs == 1) return pattern;
  const auto slash = pattern.find_last_of('/');
  const auto dot = pattern.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return pattern + ".run" + index;
  }
  return pattern.substr(0, dot) + ".run" + index + pattern.substr(dot);
}

MultiRunReport run_repeated(const Scenario& scenario, std::size_t n, const RepeatOptions& options) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "run_repeated needs n >= 1");
  std::vector<RunReport> runs;
  std::string error;
  for (std::size_t i = 0; i < n; ++i) {
    std::ofstream file;
    RunOptions run_options;
    run_options.registry = options.registry;
    run_options.retain_trace = false;
    run_options.abort_flag = options.abort_flag;
    if (!options.trace_path.empty()) {
      const std::string path = run_trace_path(options.trace_path, i, n);
      file.open(path, std::ios::binary | std::ios::trunc);
      if (!file) {
        error = "cannot write trace " + path;
        break;
      }
      run_options.trace_sink = &file;
    }
    try {
      runs.push_back(run(RunConfig{scenario, i}, run_options));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kValidation) throw;
      error = "run " + std::to_string(i) + ": " + e.what();
      break;
    }
  }
  std::vector<std::string> tags;
  for (const auto& p : scenario.probes) tags.push_back(p.tag);
  MultiRunReport report = aggregate_runs(scenario.name, scenario.seed, std::move(runs), tags);
  if (!error.empty()) {
    report.partial = true;
    report.error = error;
  }
  return report;
}

}  // namespace iotstage
