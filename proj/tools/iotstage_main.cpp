#include <csignal>
#include <iostream>

#include "iotstage/cli.hpp"

namespace {

std::atomic<bool> g_abort{false};

void on_interrupt(int) { g_abort.store(true); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);
  std::vector<std::string> args(argv + 1, argv + argc);
  return iotstage::run_cli(args, std::cout, std::cerr, &g_abort);
}
