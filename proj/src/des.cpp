#include "iotstage/des.hpp"

#include <limits>
#include <numeric>

namespace iotstage {

std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::kPacketSend: return "PacketSend";
    case EventKind::kPacketDelivery: return "PacketDelivery";
    case EventKind::kTimerFire: return "TimerFire";
    case EventKind::kFaultApply: return "FaultApply";
    case EventKind::kWindowBoundary: return "WindowBoundary";
    case EventKind::kExternalInjection: return "ExternalInjection";
  }
  return "Unknown";
}

std::uint64_t Rng::next_u64(DrawPurpose purpose) {
  ++counts_[static_cast<std::size_t>(purpose)];
  return engine_();
}

double Rng::next_unit(DrawPurpose purpose) {
  return static_cast<double>(next_u64(purpose) >> 11) * 0x1.0p-53;
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi, DrawPurpose purpose) {
  if (hi < lo) throw Error(ErrorCode::kInvalidArgument, "uniform_int: hi < lo");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  if (span == std::numeric_limits<std::uint64_t>::max()) {
    return static_cast<std::int64_t>(next_u64(purpose));
  }
  const std::uint64_t range = span + 1;
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x = 0;
  do {
    x = next_u64(purpose);
  } while (x >= limit);
  return lo + static_cast<std::int64_t>(x % range);
}

std::uint64_t Rng::total_draws() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t Engine::schedule(SimTime at, EventKind kind, EventPayload payload) {
  if (at < clock_) {
    throw Error(ErrorCode::kScheduleInPast, "event at " + std::to_string(at.count()) +
                                                " ns before clock " +
                                                std::to_string(clock_.count()) + " ns");
  }
  const std::uint64_t seq = next_seq_++;
  queue_.push(SimEvent{at, seq, kind, std::move(payload)});
  return seq;
}

std::size_t Engine::run_until(SimTime until) {
  if (until < clock_) {
    throw Error(ErrorCode::kScheduleInPast, "run_until before current clock");
  }
  std::size_t count = 0;
  while (!queue_.empty() && queue_.top().at < until) {
    SimEvent event = queue_.top();
    queue_.pop();
    clock_ = event.at;
    ++processed_;
    ++count;
    if (handler_) handler_(event);
  }
  clock_ = until;
  return count;
}

}  // namespace iotstage
