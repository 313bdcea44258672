#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iotstage/common.hpp"

namespace iotstage {

class BehaviorRegistry;
struct ChannelEstimate;

enum class RunMode { kFast, kRealtime, kScaled };

std::string_view run_mode_name(RunMode mode);
std::optional<RunMode> parse_run_mode(std::string_view text);

struct ChannelParams {
  Duration latency{0};
  double bandwidth_bps = 0.0;
  Duration jitter_max{0};
  double loss = 0.0;

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

struct WirelessSpec {
  double range_m = 0.0;
  ChannelParams channel;

  friend bool operator==(const WirelessSpec&, const WirelessSpec&) = default;
};

struct LinkSpec {
  NodeId a;
  NodeId b;
  ChannelParams channel;

  friend bool operator==(const LinkSpec&, const LinkSpec&) = default;
};

struct ExternalSpec {
  std::uint16_t listen_port = 0;
  std::string peer;  // host:port

  friend bool operator==(const ExternalSpec&, const ExternalSpec&) = default;
};

struct NodeSpec {
  NodeId id;
  std::string behavior;  // empty for external nodes
  Params params;
  std::optional<Position> position;
  std::optional<EntityId> entity;
  Duration processing_delay{0};
  std::optional<ExternalSpec> external;

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct EntitySpec {
  EntityId id;
  std::vector<Position> route;
  double speed_mps = 0.0;

  friend bool operator==(const EntitySpec&, const EntitySpec&) = default;
};

enum class FaultKind {
  kNodeCrash,
  kNodeRestart,
  kLinkDown,
  kLinkUp,
  kPartition,
  kPartitionHeal,
  kLossOverride,
  kLatencyOverride,
  kMessageCorrupt,
  kEntitySpeedOverride,
  kBehaviorFault,  // forwarded to the target behavior's on_fault hook
};

std::string_view fault_kind_name(FaultKind kind);
std::optional<FaultKind> parse_fault_kind(std::string_view text);

// Kind-specific parameters. Which members are meaningful depends on the kind;
// validate() reports missing required ones.
struct FaultParams {
  std::optional<SimTime> restart_at;             // NodeCrash
  std::vector<std::vector<NodeId>> groups;       // Partition
  std::optional<double> loss;                    // LossOverride
  std::optional<Duration> latency;               // LatencyOverride
  std::optional<double> probability;             // MessageCorrupt
  std::optional<Duration> duration;              // overrides and MessageCorrupt
  std::optional<double> speed_mps;               // EntitySpeedOverride
  Params values;                                 // BehaviorFault

  friend bool operator==(const FaultParams&, const FaultParams&) = default;
};

struct FaultSpec {
  SimTime at{0};
  FaultKind kind = FaultKind::kNodeCrash;
  std::string target;
  FaultParams params;

  friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

struct ProbeSpec {
  std::string tag;

  friend bool operator==(const ProbeSpec&, const ProbeSpec&) = default;
};

struct Scenario {
  std::string name;
  Duration duration{0};
  Duration step = std::chrono::milliseconds(100);
  std::uint64_t seed = 0;
  RunMode mode = RunMode::kFast;
  double rtf = 1.0;
  std::optional<WirelessSpec> wireless;
  std::vector<LinkSpec> links;
  std::vector<NodeSpec> nodes;
  std::vector<EntitySpec> mobility;
  std::vector<FaultSpec> faults;
  std::vector<ProbeSpec> probes;

  const NodeSpec* find_node(std::string_view id) const;
  const EntitySpec* find_entity(std::string_view id) const;
  const LinkSpec* find_link(std::string_view a, std::string_view b) const;
  bool has_external_nodes() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// "wireless", "link:<a>,<b>" or "*" (every channel, where the fault kind allows it).
struct ChannelSelector {
  enum class Kind { kWireless, kLink, kAll } kind = Kind::kWireless;
  NodeId a;
  NodeId b;

  static std::optional<ChannelSelector> parse(std::string_view text);
  static ChannelSelector wireless_channel() { return {}; }
  static ChannelSelector link(NodeId a, NodeId b);
  std::string to_string() const;

  friend bool operator==(const ChannelSelector&, const ChannelSelector&) = default;
};

struct Violation {
  std::string code;
  std::string path;
  std::string message;
};

// Throws Error with kParse (annotated with line:column), kMissingField,
// kUnknownField or kTypeMismatch.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& scenario);

std::vector<Violation> validate(const Scenario& scenario);
std::vector<Violation> validate(const Scenario& scenario, const BehaviorRegistry& registry);

// Replaces latency, jitter_max and loss of the targeted channel. Durations are
// rounded to whole microseconds so the result stays representable in files.
Scenario merge_calibration(const Scenario& scenario, const ChannelEstimate& estimate,
                           const ChannelSelector& target);

}  // namespace iotstage
