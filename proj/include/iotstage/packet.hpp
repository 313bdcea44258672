#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iotstage/common.hpp"

namespace iotstage {

using Bytes = std::vector<std::uint8_t>;

inline const NodeId kBroadcast = "*";

// Fixed per-datagram framing overhead (UDP/IPv4-like).
inline constexpr std::size_t kHeaderOverhead = 28;

struct Packet {
  std::uint64_t id = 0;
  NodeId src;
  NodeId dst;  // kBroadcast for broadcast
  Bytes payload;
  SimTime sent_at{0};
  std::optional<SimTime> origin_stamp;
  std::string label;  // application label copied into trace records, may be empty

  std::size_t size() const { return payload.size() + kHeaderOverhead; }
  bool is_broadcast() const { return dst == kBroadcast; }
};

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace iotstage
