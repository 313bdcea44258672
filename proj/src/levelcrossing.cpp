#include "iotstage/levelcrossing.hpp"

#include <limits>
#include <map>

#include "iotstage/behaviors.hpp"

namespace iotstage::levelcrossing {

namespace {

const std::string kAnnounceTimer = "announce";

}  // namespace

std::string_view message_type_name(MessageType type) {
  switch (type) {
    case MessageType::kApproach: return "APPROACH";
    case MessageType::kStop: return "STOP";
    case MessageType::kGo: return "GO";
    case MessageType::kPassed: return "PASSED";
  }
  return "UNKNOWN";
}

Bytes encode(const Message& message) {
  if (message.sender.size() > 255) {
    throw Error(ErrorCode::kInvalidArgument, "sender id longer than 255 bytes");
  }
  Bytes out;
  out.reserve(2 + message.sender.size());
  out.push_back(static_cast<std::uint8_t>(message.type));
  out.push_back(static_cast<std::uint8_t>(message.sender.size()));
  out.insert(out.end(), message.sender.begin(), message.sender.end());
  return out;
}

std::optional<Message> decode(std::span<const std::uint8_t> payload) {
  if (payload.size() < 2) return std::nullopt;
  const std::uint8_t type = payload[0];
  if (type < 0x01 || type > 0x04) return std::nullopt;
  const std::size_t length = payload[1];
  if (payload.size() != 2 + length) return std::nullopt;
  return Message{static_cast<MessageType>(type),
                 std::string(payload.begin() + 2, payload.end())};
}

CrossingLayout CrossingLayout::from_params(const Params& params) {
  CrossingLayout layout;
  layout.crossing.x = param_double(params, "crossing_x", layout.crossing.x);
  layout.crossing.y = param_double(params, "crossing_y", layout.crossing.y);
  layout.vicinity = param_double(params, "vicinity", layout.vicinity);
  layout.clearance = param_double(params, "clearance", layout.clearance);
  layout.stop_margin = param_double(params, "stop_margin", layout.stop_margin);
  if (!(layout.clearance < layout.vicinity)) {
    throw Error(ErrorCode::kInvalidArgument, "clearance must be below vicinity");
  }
  return layout;
}

TrainBehavior::TrainBehavior(const Params& params)
    : layout_(CrossingLayout::from_params(params)),
      period_(param_int(params, "announce_ms", 100) * kMillisecond) {
  if (period_ <= Duration::zero()) throw Error(ErrorCode::kInvalidArgument, "announce_ms must be > 0");
}

void TrainBehavior::on_start(NodeContext& ctx) {
  reached_ = false;
  passed_ = false;
  on_timer(ctx, kAnnounceTimer);
}

void TrainBehavior::on_timer(NodeContext& ctx, const std::string& timer_id) {
  if (timer_id != kAnnounceTimer || passed_) return;
  const double d = distance(ctx.my_position(), layout_.crossing);
  if (d <= layout_.clearance) reached_ = true;
  if (reached_ && d > layout_.clearance) {
    ctx.broadcast(encode({MessageType::kPassed, ctx.self()}), ctx.now(), "PASSED");
    passed_ = true;
    return;
  }
  if (d <= layout_.vicinity) {
    ctx.broadcast(encode({MessageType::kApproach, ctx.self()}), ctx.now(), "APPROACH");
  }
  ctx.set_timer(period_, kAnnounceTimer);
}

void CrossingBehavior::on_message(NodeContext& ctx, const NodeId& from,
                                  std::span<const std::uint8_t> payload,
                                  std::optional<SimTime> origin_stamp) {
  const auto message = decode(payload);
  if (!message) {
    ctx.annotate("malformed", {{"from", from}});
    return;
  }
  switch (message->type) {
    case MessageType::kApproach:
      ctx.broadcast(encode({MessageType::kStop, ctx.self()}), origin_stamp, "STOP");
      break;
    case MessageType::kPassed:
      ctx.broadcast(encode({MessageType::kGo, ctx.self()}), origin_stamp, "GO");
      break;
    default:
      break;
  }
}

CarBehavior::CarBehavior(const Params& params) : tag_(param_string(params, "tag", kLatencyTag)) {}

void CarBehavior::on_message(NodeContext& ctx, const NodeId& from,
                             std::span<const std::uint8_t> payload,
                             std::optional<SimTime> origin_stamp) {
  const auto message = decode(payload);
  if (!message) {
    ctx.annotate("malformed", {{"from", from}});
    return;
  }
  if (message->type == MessageType::kStop) {
    if (origin_stamp) ctx.record_probe(tag_, *origin_stamp);
    if (!stopped_) {
      ctx.command_entity(EntityCommand{{}, EntityCommand::Kind::kStop});
      stopped_ = true;
    }
  } else if (message->type == MessageType::kGo && stopped_) {
    ctx.command_entity(EntityCommand{{}, EntityCommand::Kind::kResume});
    stopped_ = false;
  }
}

void register_behaviors(BehaviorRegistry& registry) {
  registry.register_behavior("train", [](const Params& p) { return std::make_unique<TrainBehavior>(p); });
  registry.register_behavior("crossing", [](const Params&) { return std::make_unique<CrossingBehavior>(); });
  registry.register_behavior("car", [](const Params& p) { return std::make_unique<CarBehavior>(p); });
}

SafetyResult check_safety(const std::vector<TraceRecord>& records, const CrossingLayout& layout,
                          const EntityId& train, const EntityId& car) {
  std::map<SimTime, std::pair<std::optional<Position>, std::optional<Position>>> by_time;
  for (const auto& r : records) {
    if (r.kind != "POSITION") continue;
    const Position p{r.real_attr("x"), r.real_attr("y")};
    if (r.subject == train) by_time[r.at].first = p;
    else if (r.subject == car) by_time[r.at].second = p;
  }
  SafetyResult result;
  result.min_car_distance = std::numeric_limits<double>::infinity();
  for (const auto& [at, pair] : by_time) {
    if (!pair.first || !pair.second) continue;
    if (distance(*pair.first, layout.crossing) > layout.clearance) continue;
    ++result.windows_checked;
    const double car_distance = distance(*pair.second, layout.crossing);
    result.min_car_distance = std::min(result.min_car_distance, car_distance);
    if (!(car_distance > layout.stop_margin)) {
      result.ok = false;
      result.violations.push_back(at);
    }
  }
  return result;
}

bool reached_end(const std::vector<TraceRecord>& records, const EntityId& entity, SimTime deadline) {
  for (const auto& r : records) {
    if (r.kind == "POSITION" && r.subject == entity && r.at <= deadline &&
        r.str_attr("state") == "Finished") {
      return true;
    }
  }
  return false;
}

std::size_t count_sends(const std::vector<TraceRecord>& records, const NodeId& node,
                        const std::string& label) {
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.kind == "SEND" && r.subject == node && r.str_attr("label") == label) ++n;
  }
  return n;
}

}  // namespace iotstage::levelcrossing
