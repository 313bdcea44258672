#include "iotstage/udp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "iotstage/common.hpp"

namespace iotstage {

UdpAddress UdpAddress::resolve(const std::string& host_port) {
  const auto colon = host_port.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::kSocket, "expected host:port, got " + host_port);
  const std::string host = host_port.substr(0, colon);
  const std::string port = host_port.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* result = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &result); rc != 0) {
    throw Error(ErrorCode::kSocket, "cannot resolve " + host_port + ": " + ::gai_strerror(rc));
  }
  UdpAddress out;
  std::memcpy(&out.addr, result->ai_addr, sizeof(sockaddr_in));
  ::freeaddrinfo(result);
  return out;
}

UdpAddress UdpAddress::loopback(std::uint16_t port) {
  UdpAddress out;
  out.addr.sin_family = AF_INET;
  out.addr.sin_port = htons(port);
  out.addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return out;
}

std::uint16_t UdpAddress::port() const { return ntohs(addr.sin_port); }

std::string UdpAddress::to_string() const {
  char buf[INET_ADDRSTRLEN] = {};
  ::inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof(buf));
  return std::string(buf) + ":" + std::to_string(port());
}

UdpSocket::UdpSocket() {
  fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw Error(ErrorCode::kSocket, std::string("socket: ") + std::strerror(errno));
}

UdpSocket::~UdpSocket() { close(); }

UdpSocket::UdpSocket(UdpSocket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

void UdpSocket::bind(std::uint16_t port, bool any) {
  const int reuse = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &reuse, sizeof(reuse));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(any ? INADDR_ANY : INADDR_LOOPBACK);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw Error(ErrorCode::kSocket,
                "bind port " + std::to_string(port) + ": " + std::strerror(errno));
  }
}

std::uint16_t UdpSocket::local_port() const {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

bool UdpSocket::send_to(std::span<const std::uint8_t> bytes, const UdpAddress& to) {
  if (fd_ < 0) {
    errno = EBADF;
    return false;
  }
  const ssize_t n = ::sendto(fd_, bytes.data(), bytes.size(), 0,
                             reinterpret_cast<const sockaddr*>(&to.addr), sizeof(to.addr));
  return n == static_cast<ssize_t>(bytes.size());
}

std::optional<Datagram> UdpSocket::receive(std::chrono::microseconds timeout) {
  if (fd_ < 0) return std::nullopt;
  pollfd pfd{fd_, POLLIN, 0};
  const int ms = static_cast<int>(std::max<std::int64_t>(0, (timeout.count() + 999) / 1000));
  const int rc = ::poll(&pfd, 1, ms);
  if (rc <= 0 || (pfd.revents & POLLIN) == 0) return std::nullopt;
  Datagram d;
  d.bytes.resize(65536);
  socklen_t len = sizeof(d.from.addr);
  const ssize_t n = ::recvfrom(fd_, d.bytes.data(), d.bytes.size(), 0,
                               reinterpret_cast<sockaddr*>(&d.from.addr), &len);
  if (n < 0) return std::nullopt;
  d.bytes.resize(static_cast<std::size_t>(n));
  return d;
}

void UdpSocket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

}  // namespace iotstage
