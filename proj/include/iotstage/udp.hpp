#pragma once

#include <netinet/in.h>

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace iotstage {

struct UdpAddress {
  sockaddr_in addr{};

  // host:port with an IPv4 literal or resolvable host name. Throws kSocket.
  static UdpAddress resolve(const std::string& host_port);
  static UdpAddress loopback(std::uint16_t port);
  std::uint16_t port() const;
  std::string to_string() const;
};

struct Datagram {
  std::vector<std::uint8_t> bytes;
  UdpAddress from;
};

// Owning IPv4 UDP socket.
class UdpSocket {
 public:
  UdpSocket();
  ~UdpSocket();
  UdpSocket(UdpSocket&& other) noexcept;
  UdpSocket& operator=(UdpSocket&& other) noexcept;
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;

  // Port 0 picks an ephemeral port. `any` binds 0.0.0.0 instead of loopback.
  void bind(std::uint16_t port, bool any = true);
  std::uint16_t local_port() const;
  // Returns false on failure (errno preserved).
  bool send_to(std::span<const std::uint8_t> bytes, const UdpAddress& to);
  // Waits up to `timeout` for one datagram.
  std::optional<Datagram> receive(std::chrono::microseconds timeout);
  void close();
  bool is_open() const { return fd_ >= 0; }
  int fd() const { return fd_; }

 private:
  int fd_ = -1;
};

inline constexpr std::size_t kMaxUdpPayload = 65507;

}  // namespace iotstage
