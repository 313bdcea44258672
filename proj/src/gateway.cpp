#include "iotstage/gateway.hpp"

#include <poll.h>

#include <cerrno>
#include <cstring>

namespace iotstage {

namespace {
constexpr std::size_t kMaxPendingOrigins = 4096;
}

void InjectionQueue::push(InjectionRequest request) {
  std::lock_guard lock(mutex_);
  queue_.push_back(std::move(request));
}

std::vector<InjectionRequest> InjectionQueue::drain() {
  std::lock_guard lock(mutex_);
  std::vector<InjectionRequest> out(std::make_move_iterator(queue_.begin()),
                                    std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

std::size_t InjectionQueue::size() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

Gateway::Gateway(const Scenario& scenario) {
  for (const auto& node : scenario.nodes) {
    if (!node.external) continue;
    ExternalEndpoint ep;
    ep.node = node.id;
    ep.peer = UdpAddress::resolve(node.external->peer);
    ep.socket.bind(node.external->listen_port);
    ep.listen_port = ep.socket.local_port();
    endpoints_.emplace(node.id, std::move(ep));
  }
}

Gateway::~Gateway() { stop(); }

void Gateway::start() {
  if (running_.exchange(true)) return;
  reader_ = std::thread([this] { reader_loop(); });
}

void Gateway::stop() {
  running_ = false;
  if (reader_.joinable()) reader_.join();
}

void Gateway::reader_loop() {
  std::vector<pollfd> fds;
  std::vector<NodeId> owners;
  {
    std::lock_guard lock(endpoint_mutex_);
    for (auto& [id, ep] : endpoints_) {
      if (!ep.socket.is_open()) continue;
      fds.push_back(pollfd{ep.socket.fd(), POLLIN, 0});
      owners.push_back(id);
    }
  }
  std::vector<std::uint8_t> buffer(65536);
  while (running_) {
    if (fds.empty()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
      continue;
    }
    const int rc = ::poll(fds.data(), fds.size(), 20);
    if (rc <= 0) continue;
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if ((fds[i].revents & POLLIN) == 0) continue;
      const ssize_t n = ::recv(fds[i].fd, buffer.data(), buffer.size(), MSG_DONTWAIT);
      if (n < 0) continue;
      ingress(std::span<const std::uint8_t>(buffer.data(), static_cast<std::size_t>(n)), owners[i]);
    }
  }
}

bool Gateway::ingress(std::span<const std::uint8_t> datagram, const NodeId& node) {
  std::optional<SimTime> origin;
  {
    std::lock_guard lock(endpoint_mutex_);
    ExternalEndpoint& ep = endpoint(node);
    if (datagram.size() > kMaxUdpPayload) {
      ++ep.stats.oversize;
      ++oversize_;
      return false;
    }
    ++ep.stats.datagrams_in;
    if (!ep.pending_origins.empty()) {
      origin = ep.pending_origins.front();
      ep.pending_origins.pop_front();
    }
  }
  queue_.push(InjectionRequest{node, Bytes(datagram.begin(), datagram.end()), origin,
                               std::chrono::steady_clock::now()});
  return true;
}

bool Gateway::egress(const Packet& packet, const NodeId& node) {
  std::lock_guard lock(endpoint_mutex_);
  ExternalEndpoint& ep = endpoint(node);
  if (!ep.socket.send_to(packet.payload, ep.peer)) {
    ++ep.stats.send_failures;
    return false;
  }
  ++ep.stats.datagrams_out;
  if (packet.origin_stamp) {
    if (ep.pending_origins.size() >= kMaxPendingOrigins) ep.pending_origins.pop_front();
    ep.pending_origins.push_back(*packet.origin_stamp);
  }
  return true;
}

std::uint64_t Gateway::take_oversize_count() { return oversize_.exchange(0); }

void Gateway::close_endpoint(const NodeId& node) {
  std::lock_guard lock(endpoint_mutex_);
  endpoint(node).socket.close();
}

std::uint16_t Gateway::listen_port(const NodeId& node) const {
  std::lock_guard lock(endpoint_mutex_);
  return endpoint(node).listen_port;
}

EndpointStats Gateway::stats(const NodeId& node) const {
  std::lock_guard lock(endpoint_mutex_);
  return endpoint(node).stats;
}

ExternalEndpoint& Gateway::endpoint(const NodeId& node) {
  auto it = endpoints_.find(node);
  if (it == endpoints_.end()) throw Error(ErrorCode::kUnknownNode, node);
  return it->second;
}

const ExternalEndpoint& Gateway::endpoint(const NodeId& node) const {
  auto it = endpoints_.find(node);
  if (it == endpoints_.end()) throw Error(ErrorCode::kUnknownNode, node);
  return it->second;
}

}  // namespace iotstage
