#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <queue>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "iotstage/common.hpp"
#include "iotstage/packet.hpp"
#include "iotstage/trace.hpp"

namespace iotstage {

enum class EventKind {
  kPacketSend,
  kPacketDelivery,
  kTimerFire,
  kFaultApply,
  kWindowBoundary,
  kExternalInjection,
};

std::string_view event_kind_name(EventKind kind);

// A node's outbound message, released once its processing delay has elapsed.
struct SendPayload {
  Packet packet;
  std::uint64_t incarnation = 0;
};

struct DeliveryPayload {
  std::shared_ptr<const Packet> packet;
  NodeId receiver;
  std::string channel;  // channel selector the packet travelled on
  Duration delay{0};
};

struct TimerPayload {
  NodeId node;
  std::string timer_id;
  std::uint64_t generation = 0;
  std::uint64_t incarnation = 0;
};

struct FaultPayload {
  std::size_t index = 0;  // into the expanded fault schedule
};

struct InjectionPayload {
  NodeId node;
  Bytes payload;
  std::optional<SimTime> origin_stamp;
};

struct WindowPayload {
  std::uint64_t index = 0;
};

using EventPayload = std::variant<SendPayload, DeliveryPayload, TimerPayload, FaultPayload,
                                  InjectionPayload, WindowPayload>;

struct SimEvent {
  SimTime at{0};
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kWindowBoundary;
  EventPayload payload;
};

enum class DrawPurpose : std::size_t { kLoss = 0, kJitter, kCorruption, kBehavior, kOther, kCount };

// Single seeded stream. mt19937_64 output is fixed by the standard, and the
// derived draws below avoid the implementation-defined std distributions, so
// sequences are reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64(DrawPurpose purpose);
  // Uniform on [0, 1) with 53 bits of resolution.
  double next_unit(DrawPurpose purpose);
  // Uniform integer on the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi, DrawPurpose purpose);

  std::uint64_t draws(DrawPurpose purpose) const {
    return counts_[static_cast<std::size_t>(purpose)];
  }
  std::uint64_t total_draws() const;

 private:
  std::mt19937_64 engine_;
  std::array<std::uint64_t, static_cast<std::size_t>(DrawPurpose::kCount)> counts_{};
};

class Engine {
 public:
  using Handler = std::function<void(const SimEvent&)>;

  explicit Engine(std::uint64_t seed) : rng_(seed) {}

  void set_handler(Handler handler) { handler_ = std::move(handler); }

  // Returns the assigned insertion sequence number.
  std::uint64_t schedule(SimTime at, EventKind kind, EventPayload payload);

  // Processes every event with timestamp < until, including events scheduled
  // while running. The clock equals `until` afterwards.
  std::size_t run_until(SimTime until);

  SimTime now() const { return clock_; }
  Rng& rng() { return rng_; }
  Trace& trace() { return trace_; }
  const Trace& trace() const { return trace_; }

  std::size_t pending() const { return queue_.size(); }
  std::uint64_t scheduled_total() const { return next_seq_; }
  std::uint64_t processed_total() const { return processed_; }

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
  SimTime clock_{0};
  std::uint64_t next_seq_ = 0;
  std::uint64_t processed_ = 0;
  Rng rng_;
  Trace trace_;
  Handler handler_;
};

}  // namespace iotstage
