#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace iotstage {

// Simulated time is nanoseconds since scenario start. Durations share the
// representation so arithmetic between the two stays in chrono.
using Duration = std::chrono::nanoseconds;
using SimTime = std::chrono::nanoseconds;

using NodeId = std::string;
using EntityId = std::string;
using Params = std::map<std::string, std::string>;

inline constexpr Duration kMillisecond = std::chrono::milliseconds(1);
inline constexpr Duration kMicrosecond = std::chrono::microseconds(1);

inline double to_ms(Duration d) { return static_cast<double>(d.count()) / 1e6; }
inline double to_seconds(Duration d) { return static_cast<double>(d.count()) / 1e9; }

// Rounds to the nearest nanosecond.
inline Duration from_seconds(double s) { return Duration(std::llround(s * 1e9)); }

struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

inline double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

enum class ErrorCode {
  kParse,
  kMissingField,
  kUnknownField,
  kTypeMismatch,
  kValidation,
  kScheduleInPast,
  kUnknownNode,
  kUnknownEntity,
  kUnknownBehavior,
  kDuplicateBehavior,
  kUnknownTarget,
  kRestartWithoutCrash,
  kIncompleteSnapshot,
  kEmptySamples,
  kEstimateImpossible,
  kSocket,
  kIo,
  kAborted,
  kBehavior,
  kInvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace iotstage
