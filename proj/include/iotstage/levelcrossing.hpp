#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iotstage/node_runtime.hpp"
#include "iotstage/trace.hpp"

namespace iotstage::levelcrossing {

enum class MessageType : std::uint8_t { kApproach = 0x01, kStop = 0x02, kGo = 0x03, kPassed = 0x04 };

std::string_view message_type_name(MessageType type);

struct Message {
  MessageType type = MessageType::kApproach;
  NodeId sender;

  friend bool operator==(const Message&, const Message&) = default;
};

// type byte, 1-byte length, UTF-8 sender id. Throws kInvalidArgument for ids
// longer than 255 bytes.
Bytes encode(const Message& message);
std::optional<Message> decode(std::span<const std::uint8_t> payload);

struct CrossingLayout {
  Position crossing{1000.0, 0.0};
  double vicinity = 500.0;
  double clearance = 50.0;
  double stop_margin = 5.0;

  // Reads crossing_x, crossing_y, vicinity, clearance and stop_margin.
  static CrossingLayout from_params(const Params& params);
};

inline constexpr const char* kLatencyTag = "system_latency";

// Broadcasts APPROACH every announce period while within the vicinity, and
// PASSED once after it has been within clearance and left it again.
class TrainBehavior final : public Behavior {
 public:
  explicit TrainBehavior(const Params& params);

  void on_start(NodeContext& ctx) override;
  void on_timer(NodeContext& ctx, const std::string& timer_id) override;

 private:
  CrossingLayout layout_;
  Duration period_;
  bool reached_ = false;
  bool passed_ = false;
};

// APPROACH -> STOP with the origin stamp forwarded; PASSED -> GO.
class CrossingBehavior final : public Behavior {
 public:
  void on_message(NodeContext& ctx, const NodeId& from, std::span<const std::uint8_t> payload,
                  std::optional<SimTime> origin_stamp) override;
};

// Stops its entity on STOP and resumes it on GO; every STOP is a latency sample.
class CarBehavior final : public Behavior {
 public:
  explicit CarBehavior(const Params& params);

  void on_message(NodeContext& ctx, const NodeId& from, std::span<const std::uint8_t> payload,
                  std::optional<SimTime> origin_stamp) override;

 private:
  std::string tag_;
  bool stopped_ = false;
};

void register_behaviors(BehaviorRegistry& registry);

struct SafetyResult {
  bool ok = true;
  std::size_t windows_checked = 0;  // windows with the train within clearance
  double min_car_distance = 0.0;    // over the checked windows
  std::vector<SimTime> violations;
};

// Pairs POSITION records by timestamp and checks that the car keeps more than
// stop_margin from the crossing whenever the train is within clearance.
SafetyResult check_safety(const std::vector<TraceRecord>& records, const CrossingLayout& layout,
                          const EntityId& train, const EntityId& car);

// True when the entity reports state Finished at or before `deadline`.
bool reached_end(const std::vector<TraceRecord>& records, const EntityId& entity, SimTime deadline);

// SEND records from `node` with the given label.
std::size_t count_sends(const std::vector<TraceRecord>& records, const NodeId& node,
                        const std::string& label);

}  // namespace iotstage::levelcrossing

namespace iotstage {

inline void register_levelcrossing_behaviors(BehaviorRegistry& registry) {
  levelcrossing::register_behaviors(registry);
}

}  // namespace iotstage
