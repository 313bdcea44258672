// UDP echo endpoint for gateway and calibration tests.
//
//   iotstage_echo --port 0 --delay-ms 5 [--rewrite levelcrossing] [--max-seconds 60]
//
// Prints "listening <port>" once bound. Datagrams are reflected to their
// sender after the turnaround delay, in arrival order.

#include <atomic>
#include <chrono>
#include <csignal>
#include <deque>
#include <iostream>

#include "CLI11.hpp"
#include "iotstage/udp.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

struct Pending {
  std::chrono::steady_clock::time_point due;
  iotstage::Datagram datagram;
};

// APPROACH -> STOP and PASSED -> GO; everything else is reflected unchanged.
void rewrite_levelcrossing(std::vector<std::uint8_t>& bytes) {
  if (bytes.empty()) return;
  if (bytes[0] == 0x01) bytes[0] = 0x02;
  else if (bytes[0] == 0x04) bytes[0] = 0x03;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UDP echo endpoint"};
  int port = 0;
  double delay_ms = 0.0;
  std::string rewrite;
  double max_seconds = 0.0;
  app.add_option("--port", port, "Listen port (0 = ephemeral)")->check(CLI::Range(0, 65535));
  app.add_option("--delay-ms", delay_ms, "Turnaround delay")->check(CLI::NonNegativeNumber);
  app.add_option("--rewrite", rewrite, "Payload rewrite rule")->check(CLI::IsMember({"", "levelcrossing"}));
  app.add_option("--max-seconds", max_seconds, "Exit after this long (0 = never)");
  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  using Clock = std::chrono::steady_clock;
  iotstage::UdpSocket socket;
  try {
    socket.bind(static_cast<std::uint16_t>(port), false);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  std::cout << "listening " << socket.local_port() << std::endl;

  const auto delay = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double, std::milli>(delay_ms));
  const auto started = Clock::now();
  std::deque<Pending> queue;
  while (!g_stop.load()) {
    const auto now = Clock::now();
    if (max_seconds > 0 && now - started > std::chrono::duration<double>(max_seconds)) break;
    while (!queue.empty() && queue.front().due <= now) {
      socket.send_to(queue.front().datagram.bytes, queue.front().datagram.from);
      queue.pop_front();
    }
    auto wait = std::chrono::microseconds(20000);
    if (!queue.empty()) {
      wait = std::max(std::chrono::microseconds(1),
                      std::chrono::duration_cast<std::chrono::microseconds>(queue.front().due - now));
    }
    if (auto d = socket.receive(wait)) {
      if (rewrite == "levelcrossing") rewrite_levelcrossing(d->bytes);
      queue.push_back({Clock::now() + delay, std::move(*d)});
    }
  }
  return 0;
}
