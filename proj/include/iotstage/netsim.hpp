#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iotstage/common.hpp"
#include "iotstage/des.hpp"
#include "iotstage/packet.hpp"
#include "iotstage/scenario.hpp"

namespace iotstage {

// Node positions valid for one co-simulation window. `version` counts
// refreshes: version k is the snapshot used throughout window k.
struct PositionSnapshot {
  std::uint64_t version = 0;
  std::map<NodeId, Position> positions;
};

// Unit-disk connectivity, boundary inclusive.
bool in_range(const Position& a, const Position& b, double range_m);

// size * 8 / bandwidth, rounded to the nearest nanosecond.
Duration transmission_delay(const ChannelParams& channel, std::size_t size_bytes);

// latency + transmission + Uniform[0, jitter_max], floored at 1 us. Draws from
// the RNG only when jitter_max > 0.
Duration delivery_delay(const ChannelParams& channel, std::size_t size_bytes, Rng& rng);

inline constexpr Duration kMinDeliveryDelay = std::chrono::microseconds(1);

struct ChannelState {
  ChannelParams spec;
  ChannelParams base;  // as configured, restored when overrides expire
  bool enabled = true;
  std::optional<std::vector<std::vector<NodeId>>> partition;

  // Nodes outside every listed group form one implicit extra group.
  bool partitioned(const NodeId& a, const NodeId& b) const;
};

struct CorruptionWindow {
  std::string channel;  // selector string, "*" for every channel
  double probability = 0.0;
  SimTime from{0};
  SimTime until{0};
};

// Drop reasons as they appear in trace record kinds.
inline constexpr std::string_view kDropLoss = "DROP_LOSS";
inline constexpr std::string_view kDropPartition = "DROP_PARTITION";
inline constexpr std::string_view kDropLinkDown = "DROP_LINKDOWN";
inline constexpr std::string_view kDropCrashed = "DROP_CRASHED";
inline constexpr std::string_view kDropNoRoute = "DROP_NOROUTE";

// Wired links plus one range-gated wireless channel on top of the DES engine.
class Network {
 public:
  Network(const Scenario& scenario, Engine& engine);

  // Replaces the snapshot used by subsequent sends. Throws kIncompleteSnapshot
  // if a node is missing. Scheduled deliveries are not revisited.
  void refresh_connectivity(PositionSnapshot snapshot);
  const PositionSnapshot& snapshot() const { return snapshot_; }

  // Transmits at the current clock. Assigns the packet id and sent_at, writes
  // SEND plus one DROP record per undelivered receiver, and schedules a
  // PacketDelivery per surviving receiver (ascending node id). Throws
  // kUnknownNode.
  std::vector<std::uint64_t> send(Packet packet);

  // Receivers the packet would be offered to, with the channel each uses.
  std::vector<std::pair<NodeId, std::string>> receivers(const Packet& packet) const;

  // Resolves a fired delivery: re-checks link state and partitions, applies
  // active corruption, and writes the DELIVERY or DROP record. Returns the
  // packet to hand to the receiver, or nullopt if it was dropped.
  std::optional<Packet> complete_delivery(const DeliveryPayload& delivery, bool receiver_alive);

  ChannelState& channel(const std::string& selector);
  const ChannelState& channel(const std::string& selector) const;
  bool has_channel(const std::string& selector) const { return channels_.count(selector) != 0; }
  // Every channel named by the selector ("*" expands to all).
  std::vector<std::string> resolve(const std::string& selector) const;

  void add_corruption(CorruptionWindow window) { corruptions_.push_back(std::move(window)); }

  const std::map<std::string, std::uint64_t>& drop_counts() const { return drops_; }
  bool is_node(const NodeId& id) const { return nodes_.count(id) != 0; }

 private:
  void drop(std::string_view reason, const Packet& packet, const NodeId& receiver,
            const std::string& channel);
  std::optional<std::string> unicast_channel(const NodeId& src, const NodeId& dst) const;

  Engine& engine_;
  std::map<NodeId, const NodeSpec*> nodes_;
  std::map<std::string, ChannelState> channels_;
  std::optional<double> range_m_;
  PositionSnapshot snapshot_;
  std::vector<CorruptionWindow> corruptions_;
  std::map<std::string, std::uint64_t> drops_;
  std::uint64_t next_packet_id_ = 1;
};

}  // namespace iotstage
