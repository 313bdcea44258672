#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "iotstage/packet.hpp"
#include "iotstage/scenario.hpp"
#include "iotstage/udp.hpp"

namespace iotstage {

struct InjectionRequest {
  NodeId node;
  Bytes payload;
  std::optional<SimTime> origin_stamp;
  std::chrono::steady_clock::time_point arrived;
};

// FIFO handoff from socket readers to the coordinator. Lossless.
class InjectionQueue {
 public:
  void push(InjectionRequest request);
  std::vector<InjectionRequest> drain();
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::deque<InjectionRequest> queue_;
};

struct EndpointStats {
  std::uint64_t datagrams_in = 0;
  std::uint64_t datagrams_out = 0;
  std::uint64_t oversize = 0;
  std::uint64_t send_failures = 0;
};

struct ExternalEndpoint {
  NodeId node;
  std::uint16_t listen_port = 0;
  UdpAddress peer;
  UdpSocket socket;
  EndpointStats stats;
  // Origin stamps of egressed packets not yet matched by a reply, oldest first.
  std::deque<SimTime> pending_origins;
};

// Bridges external UDP devices into the simulated network. Each external node
// listens on its own port; datagrams arriving there are injected as broadcasts
// from that node. Deliveries to the node are written verbatim to its peer.
//
// Replies are correlated with requests for latency probes: an ingress datagram
// inherits the origin stamp of the oldest egressed packet still unanswered on
// the same endpoint.
class Gateway {
 public:
  explicit Gateway(const Scenario& scenario);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  void start();
  void stop();

  // Called by the reader thread; public so the addressing rules are testable.
  // Returns false (and counts it) for oversize datagrams.
  bool ingress(std::span<const std::uint8_t> datagram, const NodeId& node);
  // Returns false on socket failure.
  bool egress(const Packet& packet, const NodeId& node);

  std::vector<InjectionRequest> drain() { return queue_.drain(); }
  std::uint64_t take_oversize_count();

  void close_endpoint(const NodeId& node);
  std::uint16_t listen_port(const NodeId& node) const;
  EndpointStats stats(const NodeId& node) const;
  bool has_endpoint(const NodeId& node) const { return endpoints_.count(node) != 0; }

 private:
  void reader_loop();
  ExternalEndpoint& endpoint(const NodeId& node);
  const ExternalEndpoint& endpoint(const NodeId& node) const;

  std::map<NodeId, ExternalEndpoint> endpoints_;
  InjectionQueue queue_;
  mutable std::mutex endpoint_mutex_;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> oversize_{0};
  std::thread reader_;
};

}  // namespace iotstage
