#include "iotstage/node_runtime.hpp"

#include <exception>

#include "iotstage/behaviors.hpp"

namespace iotstage {

void BehaviorRegistry::register_behavior(const std::string& name, BehaviorFactory factory) {
  if (contains(name)) throw Error(ErrorCode::kDuplicateBehavior, name);
  factories_.emplace(name, std::move(factory));
}

std::unique_ptr<Behavior> BehaviorRegistry::create(const std::string& name,
                                                   const Params& params) const {
  auto it = factories_.find(name);
  if (it == factories_.end()) throw Error(ErrorCode::kUnknownBehavior, name);
  return it->second(params);
}

std::vector<std::string> BehaviorRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(factories_.size());
  for (const auto& [name, factory] : factories_) out.push_back(name);
  return out;
}

BehaviorRegistry BehaviorRegistry::with_builtins() {
  BehaviorRegistry registry;
  register_builtin_behaviors(registry);
  return registry;
}

BehaviorRegistry& default_registry() {
  static BehaviorRegistry registry = BehaviorRegistry::with_builtins();
  return registry;
}

class NodeRuntime::BoundContext final : public NodeContext {
 public:
  BoundContext(NodeRuntime& runtime, NodeState& node) : runtime_(runtime), node_(node) {}

  SimTime now() const override { return runtime_.engine_.now(); }
  const NodeId& self() const override { return node_.id(); }

  void send(const NodeId& dst, Bytes payload, std::optional<SimTime> origin_stamp,
            std::string label) override {
    Packet packet;
    packet.src = node_.id();
    packet.dst = dst;
    packet.payload = std::move(payload);
    packet.origin_stamp = origin_stamp;
    packet.label = std::move(label);
    const SimTime release = now() + node_.spec->processing_delay;
    packet.sent_at = release;
    runtime_.engine_.schedule(release, EventKind::kPacketSend,
                              SendPayload{std::move(packet), node_.incarnation});
  }

  void broadcast(Bytes payload, std::optional<SimTime> origin_stamp, std::string label) override {
    send(kBroadcast, std::move(payload), origin_stamp, std::move(label));
  }

  void set_timer(Duration delay, const std::string& timer_id) override {
    if (delay <= Duration::zero()) {
      throw Error(ErrorCode::kInvalidArgument, "timer delay must be positive");
    }
    const std::uint64_t generation = ++runtime_.timer_generation_;
    node_.timers[timer_id] = generation;
    runtime_.engine_.schedule(now() + delay, EventKind::kTimerFire,
                              TimerPayload{node_.id(), timer_id, generation, node_.incarnation});
  }

  void cancel_timer(const std::string& timer_id) override { node_.timers.erase(timer_id); }

  Position my_position() const override { return runtime_.host_.node_position(node_.id()); }

  void command_entity(EntityCommand command) override {
    if (command.entity.empty()) {
      if (!node_.spec->entity) {
        throw Error(ErrorCode::kUnknownEntity, "node " + node_.id() + " is not bound to an entity");
      }
      command.entity = *node_.spec->entity;
    }
    command.issued_at = now();
    command.sequence = runtime_.next_command_sequence();
    runtime_.engine_.trace().emit(now(), "COMMAND", command.entity,
                                  {{"node", node_.id()},
                                   {"command", std::string(command_kind_name(command.kind))},
                                   {"value", command.value}});
    runtime_.host_.queue_command(std::move(command));
  }

  void record_probe(const std::string& tag, SimTime origin_stamp) override {
    ProbeRecord record{tag, origin_stamp, now(), node_.id()};
    runtime_.engine_.trace().emit(now(), "PROBE", node_.id(),
                                  {{"tag", tag},
                                   {"origin_ns", origin_stamp.count()},
                                   {"latency_ns", record.latency().count()}});
    runtime_.host_.collect_probe(std::move(record));
  }

  std::optional<std::string> param(const std::string& key) const override {
    auto it = node_.spec->params.find(key);
    if (it == node_.spec->params.end()) return std::nullopt;
    return it->second;
  }

  void annotate(const std::string& event, Attrs attrs) override {
    attrs.insert(attrs.begin(), {"event", event});
    runtime_.engine_.trace().emit(now(), "APP", node_.id(), std::move(attrs));
  }

 private:
  NodeRuntime& runtime_;
  NodeState& node_;
};

NodeRuntime::NodeRuntime(Engine& engine, const BehaviorRegistry& registry, RuntimeHost& host)
    : engine_(engine), registry_(registry), host_(host) {}

NodeRuntime::~NodeRuntime() = default;

template <typename Fn>
void NodeRuntime::invoke(NodeState& node, Fn&& fn) {
  if (!node.alive || !node.behavior) return;
  BoundContext ctx(*this, node);
  try {
    fn(*node.behavior, ctx);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kBehavior, "node " + node.id() + ": " + e.what());
  }
}

void NodeRuntime::begin(NodeState& node) {
  node.alive = true;
  ++node.starts;
  engine_.trace().emit(engine_.now(), "NODE_START", node.id(),
                       {{"incarnation", static_cast<std::int64_t>(node.incarnation)}});
  invoke(node, [](Behavior& b, NodeContext& ctx) { b.on_start(ctx); });
}

NodeState& NodeRuntime::start_node(const NodeSpec& spec) {
  NodeState state;
  state.spec = &spec;
  if (!spec.external) state.behavior = registry_.create(spec.behavior, spec.params);
  auto [it, inserted] = nodes_.insert_or_assign(spec.id, std::move(state));
  begin(it->second);
  return it->second;
}

void NodeRuntime::crash(const NodeId& node) {
  NodeState& s = state(node);
  s.alive = false;
  s.timers.clear();
  s.behavior.reset();
  // Anything still queued under the old incarnation is now stale.
  ++s.incarnation;
}

void NodeRuntime::restart(const NodeId& node) {
  NodeState& s = state(node);
  if (s.alive) throw Error(ErrorCode::kRestartWithoutCrash, node);
  if (!s.spec->external) s.behavior = registry_.create(s.spec->behavior, s.spec->params);
  begin(s);
}

void NodeRuntime::inject_fault(const NodeId& node, const Params& params) {
  NodeState& s = state(node);
  invoke(s, [&](Behavior& b, NodeContext& ctx) { b.on_fault(ctx, params); });
}

void NodeRuntime::dispatch_delivery(const Packet& packet, NodeState& receiver) {
  invoke(receiver, [&](Behavior& b, NodeContext& ctx) {
    b.on_message(ctx, packet.src, std::span<const std::uint8_t>(packet.payload),
                 packet.origin_stamp);
  });
}

void NodeRuntime::fire_timer(const TimerPayload& timer) {
  NodeState& s = state(timer.node);
  if (!s.alive || s.incarnation != timer.incarnation) return;
  auto it = s.timers.find(timer.timer_id);
  if (it == s.timers.end() || it->second != timer.generation) return;
  s.timers.erase(it);
  invoke(s, [&](Behavior& b, NodeContext& ctx) { b.on_timer(ctx, timer.timer_id); });
}

bool NodeRuntime::release_send(const SendPayload& send) {
  const NodeState& s = state(send.packet.src);
  if (!s.alive || s.incarnation != send.incarnation) {
    engine_.trace().emit(engine_.now(), "SEND_ABORTED", send.packet.src,
                         {{"dst", send.packet.dst}, {"label", send.packet.label}});
    return false;
  }
  host_.transmit(send.packet);
  return true;
}

NodeState& NodeRuntime::state(const NodeId& node) {
  auto it = nodes_.find(node);
  if (it == nodes_.end()) throw Error(ErrorCode::kUnknownNode, node);
  return it->second;
}

const NodeState* NodeRuntime::find(const NodeId& node) const {
  auto it = nodes_.find(node);
  return it == nodes_.end() ? nullptr : &it->second;
}

bool NodeRuntime::alive(const NodeId& node) const {
  const NodeState* s = find(node);
  return s != nullptr && s->alive;
}

}  // namespace iotstage
