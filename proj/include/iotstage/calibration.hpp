#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iotstage/common.hpp"

namespace iotstage {

struct ChannelEstimate {
  Duration latency{0};     // one-way
  Duration jitter_max{0};
  double loss = 0.0;
  std::size_t sample_count = 0;
  std::string method;
};

struct ProbeResult {
  std::vector<Duration> rtts;  // in send order of the matched probes
  std::size_t lost = 0;
  std::size_t duplicates = 0;
};

struct ProbeOptions {
  std::string target;  // host:port
  std::size_t count = 20;
  Duration spacing = std::chrono::milliseconds(20);
  Duration timeout = std::chrono::seconds(1);
};

inline constexpr std::size_t kProbeDatagramSize = 16;

// 8-byte big-endian sequence followed by an 8-byte nonce.
std::array<std::uint8_t, kProbeDatagramSize> encode_probe(std::uint64_t sequence,
                                                          std::uint64_t nonce);
std::optional<std::pair<std::uint64_t, std::uint64_t>> decode_probe(
    std::span<const std::uint8_t> datagram);

// Sends `count` probes over UDP at fixed spacing and matches verbatim echoes.
// Throws kSocket on socket failure. Zero replies yield an empty rtts list.
ProbeResult probe(const ProbeOptions& options);

// Linear-interpolation percentile (the numpy default), q in [0, 100].
double percentile(std::vector<double> values, double q);

// latency = median(rtt) / 2, jitter_max = (P95(rtt) - min(rtt)) / 2,
// loss = lost / (lost + samples). Throws kEmptySamples.
ChannelEstimate estimate(std::span<const Duration> rtts, std::size_t lost);
// Same, but throws kEstimateImpossible when no probe was answered.
ChannelEstimate estimate(const ProbeResult& result);

std::string estimate_to_json(const ChannelEstimate& estimate);

}  // namespace iotstage
