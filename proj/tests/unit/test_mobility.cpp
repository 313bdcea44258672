#include "doctest.h"
#include "iotstage/mobility.hpp"
#include "iotstage/metrics.hpp"

using namespace iotstage;
using namespace std::chrono_literals;

namespace {

Mobility single(std::vector<Position> route, double speed) {
  return Mobility({EntitySpec{"e", std::move(route), speed}});
}

EntityCommand cmd(EntityCommand::Kind kind, SimTime at, std::uint64_t seq, double value = 0.0) {
  return EntityCommand{"e", kind, value, at, seq};
}

}  // namespace

TEST_CASE("straight-line kinematics") {
  auto m = single({{0, 0}, {1000, 0}}, 100);
  CHECK(m.position_of("e").x == 0.0);
  auto p = m.step(100ms);
  CHECK(p.at("e").x == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(p.at("e").y == 0.0);
}

TEST_CASE("arc length on a polyline") {
  auto m = single({{0, 0}, {3, 0}, {3, 4}}, 5);
  auto p = m.step(1s);
  CHECK(p.at("e").x == doctest::Approx(3.0));
  CHECK(p.at("e").y == doctest::Approx(2.0));
}

TEST_CASE("train displacement over the reported latency") {
  auto m = single({{0, 0}, {1000, 0}}, 100);
  m.step(Duration(10'340'000));
  CHECK(m.position_of("e").x == doctest::Approx(1.034).epsilon(1e-9));
  CHECK(distance_traveled(100, Duration(10'340'000)) == doctest::Approx(1.034));
}

TEST_CASE("stop, resume and last-issued wins") {
  auto m = single({{0, 0}, {1000, 0}}, 10);
  m.apply_command(cmd(EntityCommand::Kind::kStop, 0ns, 0));
  m.step(1s);
  CHECK(m.position_of("e").x == 0.0);
  CHECK(m.entity("e").state() == EntityState::kStopped);

  m.apply_command(cmd(EntityCommand::Kind::kResume, 0ns, 1));
  m.step(1s);
  CHECK(m.position_of("e").x == doctest::Approx(10.0));

  // Issued out of order within one window: Resume was issued last.
  auto results = m.apply_commands({cmd(EntityCommand::Kind::kResume, 50ms, 3),
                                   cmd(EntityCommand::Kind::kStop, 20ms, 2)});
  CHECK(results.back().first.kind == EntityCommand::Kind::kResume);
  CHECK(m.entity("e").state() == EntityState::kMoving);

  // Equal issue times tie-break on sequence.
  m.apply_commands({cmd(EntityCommand::Kind::kStop, 70ms, 5), cmd(EntityCommand::Kind::kResume, 70ms, 4)});
  CHECK(m.entity("e").state() == EntityState::kStopped);
}

TEST_CASE("route end is reached exactly and sticks") {
  auto m = single({{0, 0}, {3, 0}, {3, 4}}, 0.7);
  for (int i = 0; i < 200; ++i) m.step(100ms);
  CHECK(m.position_of("e").x == 3.0);
  CHECK(m.position_of("e").y == 4.0);
  CHECK(m.entity("e").state() == EntityState::kFinished);
  CHECK(m.apply_command(cmd(EntityCommand::Kind::kResume, 0ns, 9)) == CommandOutcome::kIgnoredFinished);
  CHECK(m.entity("e").state() == EntityState::kFinished);
}

TEST_CASE("displacement per step is bounded by speed times dt") {
  auto m = single({{0, 0}, {50, 0}, {50, 50}, {0, 50}}, 7.5);
  Position last = m.position_of("e");
  double total = 0.0;
  for (int i = 0; i < 300; ++i) {
    m.step(100ms);
    const Position now = m.position_of("e");
    const double d = distance(last, now);
    REQUIRE(d <= 7.5 * 0.1 + 1e-9);
    total += 0.75;
    last = now;
  }
  CHECK(m.entity("e").progress() == doctest::Approx(std::min(total, 150.0)));
}

TEST_CASE("set speed, unknown entities and invalid dt") {
  auto m = single({{0, 0}, {100, 0}}, 1);
  m.apply_command(cmd(EntityCommand::Kind::kSetSpeed, 0ns, 0, 4.0));
  m.step(1s);
  CHECK(m.position_of("e").x == doctest::Approx(4.0));
  EntityCommand unknown{"ghost", EntityCommand::Kind::kStop};
  CHECK_THROWS_AS(m.apply_command(unknown), Error);
  CHECK_THROWS_AS(m.step(0ns), Error);
}
