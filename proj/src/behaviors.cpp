#include "iotstage/behaviors.hpp"

#include <charconv>

#include "iotstage/levelcrossing.hpp"

namespace iotstage {

namespace {

const std::string kProbeTimer = "probe";

}  // namespace

double param_double(const Params& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  try {
    std::size_t used = 0;
    const double value = std::stod(it->second, &used);
    if (used == it->second.size()) return value;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidArgument, "param " + key + " is not a number: " + it->second);
}

std::int64_t param_int(const Params& params, const std::string& key, std::int64_t fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  std::int64_t value = 0;
  const auto& text = it->second;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kInvalidArgument, "param " + key + " is not an integer: " + text);
  }
  return value;
}

std::string param_string(const Params& params, const std::string& key, const std::string& fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void EchoBehavior::on_message(NodeContext& ctx, const NodeId& from,
                              std::span<const std::uint8_t> payload,
                              std::optional<SimTime> origin_stamp) {
  ctx.send(from, Bytes(payload.begin(), payload.end()), origin_stamp, "ECHO");
}

ProbeSenderBehavior::ProbeSenderBehavior(const Params& params)
    : target_(param_string(params, "target", "")),
      period_(param_int(params, "period_ms", 100) * kMillisecond),
      start_(param_int(params, "start_ms", 0) * kMillisecond),
      count_(static_cast<std::uint64_t>(param_int(params, "count", 50))),
      size_(static_cast<std::size_t>(param_int(params, "size", 16))),
      tag_(param_string(params, "tag", "rtt")) {
  if (target_.empty()) throw Error(ErrorCode::kInvalidArgument, "probe_sender needs a target");
  if (period_ <= Duration::zero()) throw Error(ErrorCode::kInvalidArgument, "period_ms must be > 0");
  if (start_ < Duration::zero()) throw Error(ErrorCode::kInvalidArgument, "start_ms must be >= 0");
}

void ProbeSenderBehavior::on_start(NodeContext& ctx) {
  sent_ = 0;
  if (count_ == 0) return;
  if (start_ > Duration::zero()) {
    ctx.set_timer(start_, kProbeTimer);
  } else {
    on_timer(ctx, kProbeTimer);
  }
}

void ProbeSenderBehavior::on_timer(NodeContext& ctx, const std::string& timer_id) {
  if (timer_id != kProbeTimer || sent_ >= count_) return;
  Bytes payload(size_, 0);
  for (std::size_t i = 0; i < payload.size() && i < 8; ++i) {
    payload[i] = static_cast<std::uint8_t>(sent_ >> (8 * (7 - i)));
  }
  ctx.send(target_, std::move(payload), ctx.now(), "PROBE");
  if (++sent_ < count_) ctx.set_timer(period_, kProbeTimer);
}

void ProbeSenderBehavior::on_message(NodeContext& ctx, const NodeId& from,
                                     std::span<const std::uint8_t> payload,
                                     std::optional<SimTime> origin_stamp) {
  (void)payload;
  if (from == target_ && origin_stamp) ctx.record_probe(tag_, *origin_stamp);
}

ProbeSinkBehavior::ProbeSinkBehavior(const Params& params)
    : tag_(param_string(params, "tag", "oneway")) {}

void ProbeSinkBehavior::on_message(NodeContext& ctx, const NodeId& from,
                                   std::span<const std::uint8_t> payload,
                                   std::optional<SimTime> origin_stamp) {
  (void)from, (void)payload;
  if (origin_stamp) ctx.record_probe(tag_, *origin_stamp);
}

void register_builtin_behaviors(BehaviorRegistry& registry) {
  registry.register_behavior("echo", [](const Params&) { return std::make_unique<EchoBehavior>(); });
  registry.register_behavior("probe_sender", [](const Params& p) {
    return std::make_unique<ProbeSenderBehavior>(p);
  });
  registry.register_behavior("probe_sink", [](const Params& p) {
    return std::make_unique<ProbeSinkBehavior>(p);
  });
  register_levelcrossing_behaviors(registry);
}

}  // namespace iotstage
