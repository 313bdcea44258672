#include "iotstage/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "iotstage/udp.hpp"
#include "json.hpp"

namespace iotstage {

namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kMethod =
    "latency=median(rtt)/2; jitter_max=max(0,(p95(rtt)-min(rtt))/2); loss=lost/(lost+n); "
    "one-way latency assumes a symmetric path";

}  // namespace

std::array<std::uint8_t, kProbeDatagramSize> encode_probe(std::uint64_t sequence,
                                                          std::uint64_t nonce) {
  std::array<std::uint8_t, kProbeDatagramSize> out{};
  for (int i = 0; i < 8; ++i) {
    out[i] = static_cast<std::uint8_t>(sequence >> (8 * (7 - i)));
    out[8 + i] = static_cast<std::uint8_t>(nonce >> (8 * (7 - i)));
  }
  return out;
}

std::optional<std::pair<std::uint64_t, std::uint64_t>> decode_probe(
    std::span<const std::uint8_t> datagram) {
  if (datagram.size() != kProbeDatagramSize) return std::nullopt;
  std::uint64_t sequence = 0;
  std::uint64_t nonce = 0;
  for (int i = 0; i < 8; ++i) {
    sequence = (sequence << 8) | datagram[i];
    nonce = (nonce << 8) | datagram[8 + i];
  }
  return std::make_pair(sequence, nonce);
}

ProbeResult probe(const ProbeOptions& options) {
  if (options.count == 0) throw Error(ErrorCode::kInvalidArgument, "probe count must be >= 1");
  const UdpAddress target = UdpAddress::resolve(options.target);
  UdpSocket socket;
  socket.bind(0, true);

  std::mt19937_64 nonces(std::random_device{}());
  std::vector<std::uint64_t> nonce(options.count);
  std::vector<std::optional<Clock::time_point>> sent_at(options.count);
  std::vector<std::optional<Duration>> rtt(options.count);
  ProbeResult result;

  auto handle = [&](const Datagram& d, Clock::time_point arrived) {
    const auto decoded = decode_probe(d.bytes);
    if (!decoded) return;
    const auto [seq, n] = *decoded;
    if (seq >= options.count || !sent_at[seq] || nonce[seq] != n) return;
    if (rtt[seq]) {
      ++result.duplicates;
      return;
    }
    const auto elapsed = std::chrono::duration_cast<Duration>(arrived - *sent_at[seq]);
    if (elapsed <= options.timeout) rtt[seq] = elapsed;
  };

  auto receive_until = [&](Clock::time_point deadline) {
    for (auto now = Clock::now(); now < deadline; now = Clock::now()) {
      const auto wait = std::chrono::duration_cast<std::chrono::microseconds>(deadline - now);
      auto d = socket.receive(std::max(wait, std::chrono::microseconds(1)));
      if (d) handle(*d, Clock::now());
    }
  };

  const auto start = Clock::now();
  for (std::size_t i = 0; i < options.count; ++i) {
    const auto due = start + i * options.spacing;
    receive_until(due);
    nonce[i] = nonces();
    const auto datagram = encode_probe(i, nonce[i]);
    sent_at[i] = Clock::now();
    if (!socket.send_to(datagram, target)) {
      throw Error(ErrorCode::kSocket, "send to " + options.target + " failed");
    }
  }
  receive_until(*sent_at.back() + options.timeout);

  for (const auto& r : rtt) {
    if (r) result.rtts.push_back(*r);
    else ++result.lost;
  }
  return result;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kEmptySamples, "percentile of no values");
  if (q < 0.0 || q > 100.0) throw Error(ErrorCode::kInvalidArgument, "percentile q out of range");
  std::sort(values.begin(), values.end());
  const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ChannelEstimate estimate(std::span<const Duration> rtts, std::size_t lost) {
  if (rtts.empty()) throw Error(ErrorCode::kEmptySamples, "estimate needs at least one RTT");
  std::vector<double> ns;
  ns.reserve(rtts.size());
  for (auto r : rtts) ns.push_back(static_cast<double>(r.count()));
  const double median = percentile(ns, 50.0);
  const double p95 = percentile(ns, 95.0);
  const double lowest = *std::min_element(ns.begin(), ns.end());

  ChannelEstimate e;
  e.latency = Duration(std::llround(median / 2.0));
  e.jitter_max = Duration(std::llround(std::max(0.0, (p95 - lowest) / 2.0)));
  e.loss = static_cast<double>(lost) / static_cast<double>(lost + rtts.size());
  e.sample_count = rtts.size();
  e.method = kMethod;
  return e;
}

ChannelEstimate estimate(const ProbeResult& result) {
  if (result.rtts.empty()) {
    throw Error(ErrorCode::kEstimateImpossible,
                "no replies to " + std::to_string(result.lost) + " probes");
  }
  return estimate(result.rtts, result.lost);
}

std::string estimate_to_json(const ChannelEstimate& e) {
  nlohmann::ordered_json j;
  j["latency_us"] = static_cast<double>(e.latency.count()) / 1000.0;
  j["jitter_max_us"] = static_cast<double>(e.jitter_max.count()) / 1000.0;
  j["loss"] = e.loss;
  j["sample_count"] = e.sample_count;
  j["method"] = e.method;
  return j.dump(2);
}

}  // namespace iotstage
