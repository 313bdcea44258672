#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iotstage/common.hpp"
#include "iotstage/des.hpp"
#include "iotstage/mobility.hpp"
#include "iotstage/packet.hpp"
#include "iotstage/scenario.hpp"
#include "iotstage/trace.hpp"

namespace iotstage {

// Services a behavior may use from inside a callback. Callbacks run in zero
// simulated time; everything they send leaves the node after its
// processing_delay.
class NodeContext {
 public:
  virtual ~NodeContext() = default;

  virtual SimTime now() const = 0;
  virtual const NodeId& self() const = 0;
  virtual void send(const NodeId& dst, Bytes payload, std::optional<SimTime> origin_stamp = {},
                    std::string label = {}) = 0;
  virtual void broadcast(Bytes payload, std::optional<SimTime> origin_stamp = {},
                         std::string label = {}) = 0;
  // Re-arming an existing timer id replaces it.
  virtual void set_timer(Duration delay, const std::string& timer_id) = 0;
  virtual void cancel_timer(const std::string& timer_id) = 0;
  virtual Position my_position() const = 0;
  // An empty command.entity addresses the entity this node is bound to.
  virtual void command_entity(EntityCommand command) = 0;
  virtual void record_probe(const std::string& tag, SimTime origin_stamp) = 0;
  virtual std::optional<std::string> param(const std::string& key) const = 0;
  // Writes an APP trace record for this node.
  virtual void annotate(const std::string& event, Attrs attrs = {}) = 0;
};

class Behavior {
 public:
  virtual ~Behavior() = default;

  virtual void on_start(NodeContext& ctx) { (void)ctx; }
  virtual void on_message(NodeContext& ctx, const NodeId& from, std::span<const std::uint8_t> payload,
                          std::optional<SimTime> origin_stamp) {
    (void)ctx, (void)from, (void)payload, (void)origin_stamp;
  }
  virtual void on_timer(NodeContext& ctx, const std::string& timer_id) { (void)ctx, (void)timer_id; }
  // Optional hook for behavior/state faults.
  virtual void on_fault(NodeContext& ctx, const Params& params) { (void)ctx, (void)params; }
};

using BehaviorFactory = std::function<std::unique_ptr<Behavior>(const Params&)>;

class BehaviorRegistry {
 public:
  // Throws kDuplicateBehavior.
  void register_behavior(const std::string& name, BehaviorFactory factory);
  // Throws kUnknownBehavior.
  std::unique_ptr<Behavior> create(const std::string& name, const Params& params) const;
  bool contains(const std::string& name) const { return factories_.count(name) != 0; }
  std::vector<std::string> names() const;

  static BehaviorRegistry with_builtins();

 private:
  std::map<std::string, BehaviorFactory> factories_;
};

// Process-wide registry, pre-populated with echo, probe_sender, probe_sink,
// train, crossing and car.
BehaviorRegistry& default_registry();

struct ProbeRecord {
  std::string tag;
  SimTime origin_stamp{0};
  SimTime received_at{0};
  NodeId receiver;

  Duration latency() const { return received_at - origin_stamp; }
};

// Coordinator-side services the runtime calls back into.
class RuntimeHost {
 public:
  virtual ~RuntimeHost() = default;
  // Hands a released packet to the network at the current clock.
  virtual void transmit(Packet packet) = 0;
  virtual Position node_position(const NodeId& node) const = 0;
  virtual void queue_command(EntityCommand command) = 0;
  virtual void collect_probe(ProbeRecord record) = 0;
};

struct NodeState {
  const NodeSpec* spec = nullptr;
  std::unique_ptr<Behavior> behavior;
  bool alive = false;
  std::uint64_t incarnation = 0;
  std::map<std::string, std::uint64_t> timers;  // timer id -> live generation
  std::uint64_t starts = 0;

  const NodeId& id() const { return spec->id; }
};

// Hosts behaviors on virtual nodes. All calls happen on the coordinator thread
// from inside Engine event processing.
class NodeRuntime {
 public:
  NodeRuntime(Engine& engine, const BehaviorRegistry& registry, RuntimeHost& host);
  ~NodeRuntime();

  // Instantiates the behavior and runs on_start at the current clock. External
  // nodes get a state without a behavior.
  NodeState& start_node(const NodeSpec& spec);
  void crash(const NodeId& node);
  // Fresh behavior instance, then on_start. Throws kRestartWithoutCrash.
  void restart(const NodeId& node);
  void inject_fault(const NodeId& node, const Params& params);

  void dispatch_delivery(const Packet& packet, NodeState& receiver);
  void fire_timer(const TimerPayload& timer);
  // Returns false (and traces SEND_ABORTED) if the sender crashed after queueing.
  bool release_send(const SendPayload& send);

  NodeState& state(const NodeId& node);
  const NodeState* find(const NodeId& node) const;
  bool alive(const NodeId& node) const;
  std::uint64_t next_command_sequence() { return command_sequence_++; }

 private:
  class BoundContext;
  template <typename Fn>
  void invoke(NodeState& node, Fn&& fn);
  void begin(NodeState& node);

  Engine& engine_;
  const BehaviorRegistry& registry_;
  RuntimeHost& host_;
  std::map<NodeId, NodeState> nodes_;
  std::uint64_t timer_generation_ = 0;
  std::uint64_t command_sequence_ = 0;
};

}  // namespace iotstage
