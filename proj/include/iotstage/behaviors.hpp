#pragma once

#include <cstdint>
#include <string>

#include "iotstage/node_runtime.hpp"

namespace iotstage {

// Replies to every message with the same payload and origin stamp.
class EchoBehavior final : public Behavior {
 public:
  void on_message(NodeContext& ctx, const NodeId& from, std::span<const std::uint8_t> payload,
                  std::optional<SimTime> origin_stamp) override;
};

// Sends `count` probes of `size` bytes to `target` every `period_ms`, starting
// at `start_ms`. Each reply carrying the original stamp records a round-trip
// sample under `tag`.
class ProbeSenderBehavior final : public Behavior {
 public:
  explicit ProbeSenderBehavior(const Params& params);

  void on_start(NodeContext& ctx) override;
  void on_timer(NodeContext& ctx, const std::string& timer_id) override;
  void on_message(NodeContext& ctx, const NodeId& from, std::span<const std::uint8_t> payload,
                  std::optional<SimTime> origin_stamp) override;

 private:
  NodeId target_;
  Duration period_;
  Duration start_;
  std::uint64_t count_;
  std::size_t size_;
  std::string tag_;
  std::uint64_t sent_ = 0;
};

// Records a one-way sample under `tag` for every stamped message.
class ProbeSinkBehavior final : public Behavior {
 public:
  explicit ProbeSinkBehavior(const Params& params);

  void on_message(NodeContext& ctx, const NodeId& from, std::span<const std::uint8_t> payload,
                  std::optional<SimTime> origin_stamp) override;

 private:
  std::string tag_;
};

// echo, probe_sender, probe_sink, train, crossing, car.
void register_builtin_behaviors(BehaviorRegistry& registry);

// Helpers for reading typed behavior params. Throw kInvalidArgument on bad values.
double param_double(const Params& params, const std::string& key, double fallback);
std::int64_t param_int(const Params& params, const std::string& key, std::int64_t fallback);
std::string param_string(const Params& params, const std::string& key, const std::string& fallback);

}  // namespace iotstage
