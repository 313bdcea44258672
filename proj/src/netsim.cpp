#include "iotstage/netsim.hpp"

#include <algorithm>

namespace iotstage {

bool in_range(const Position& a, const Position& b, double range_m) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  // Squared comparison keeps 3-4-5 style boundaries exact.
  return dx * dx + dy * dy <= range_m * range_m;
}

Duration transmission_delay(const ChannelParams& channel, std::size_t size_bytes) {
  const long double bits = static_cast<long double>(size_bytes) * 8.0L;
  return Duration(std::llround(bits * 1e9L / static_cast<long double>(channel.bandwidth_bps)));
}

Duration delivery_delay(const ChannelParams& channel, std::size_t size_bytes, Rng& rng) {
  Duration delay = channel.latency + transmission_delay(channel, size_bytes);
  if (channel.jitter_max > Duration::zero()) {
    delay += Duration(rng.uniform_int(0, channel.jitter_max.count(), DrawPurpose::kJitter));
  }
  return std::max(delay, kMinDeliveryDelay);
}

bool ChannelState::partitioned(const NodeId& a, const NodeId& b) const {
  if (!partition) return false;
  auto group_of = [&](const NodeId& n) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < partition->size(); ++i) {
      const auto& g = (*partition)[i];
      if (std::find(g.begin(), g.end(), n) != g.end()) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  };
  return group_of(a) != group_of(b);
}

namespace {

std::string link_key(const NodeId& a, const NodeId& b) {
  return ChannelSelector::link(a, b).to_string();
}

}  // namespace

Network::Network(const Scenario& scenario, Engine& engine) : engine_(engine) {
  for (const auto& n : scenario.nodes) nodes_.emplace(n.id, &n);
  if (scenario.wireless) {
    range_m_ = scenario.wireless->range_m;
    channels_.emplace("wireless", ChannelState{scenario.wireless->channel,
                                               scenario.wireless->channel, true, std::nullopt});
  }
  for (const auto& l : scenario.links) {
    channels_.emplace(link_key(l.a, l.b), ChannelState{l.channel, l.channel, true, std::nullopt});
  }
}

void Network::refresh_connectivity(PositionSnapshot snapshot) {
  if (range_m_) {
    for (const auto& [id, spec] : nodes_) {
      if (snapshot.positions.count(id) == 0) {
        throw Error(ErrorCode::kIncompleteSnapshot, "no position for node " + id);
      }
    }
  }
  snapshot_ = std::move(snapshot);
}

std::optional<std::string> Network::unicast_channel(const NodeId& src, const NodeId& dst) const {
  const std::string key = link_key(src, dst);
  if (channels_.count(key) != 0) return key;
  if (!range_m_) return std::nullopt;
  const auto a = snapshot_.positions.find(src);
  const auto b = snapshot_.positions.find(dst);
  if (a == snapshot_.positions.end() || b == snapshot_.positions.end()) return std::nullopt;
  if (!in_range(a->second, b->second, *range_m_)) return std::nullopt;
  return std::string("wireless");
}

std::vector<std::pair<NodeId, std::string>> Network::receivers(const Packet& packet) const {
  std::vector<std::pair<NodeId, std::string>> out;
  if (!packet.is_broadcast()) {
    if (packet.dst == packet.src) return out;
    if (auto ch = unicast_channel(packet.src, packet.dst)) out.emplace_back(packet.dst, *ch);
    return out;
  }
  if (!range_m_) return out;
  const auto self = snapshot_.positions.find(packet.src);
  if (self == snapshot_.positions.end()) return out;
  // std::map iteration gives ascending node id.
  for (const auto& [id, pos] : snapshot_.positions) {
    if (id == packet.src || nodes_.count(id) == 0) continue;
    if (in_range(self->second, pos, *range_m_)) out.emplace_back(id, "wireless");
  }
  return out;
}

void Network::drop(std::string_view reason, const Packet& packet, const NodeId& receiver,
                   const std::string& channel) {
  ++drops_[std::string(reason)];
  engine_.trace().emit(engine_.now(), std::string(reason), receiver,
                       {{"packet_id", static_cast<std::int64_t>(packet.id)},
                        {"src", packet.src},
                        {"dst", receiver},
                        {"size_bytes", static_cast<std::int64_t>(packet.size())},
                        {"label", packet.label},
                        {"channel", channel}});
}

std::vector<std::uint64_t> Network::send(Packet packet) {
  if (!is_node(packet.src)) throw Error(ErrorCode::kUnknownNode, packet.src);
  if (!packet.is_broadcast() && !is_node(packet.dst)) throw Error(ErrorCode::kUnknownNode, packet.dst);
  packet.id = next_packet_id_++;
  packet.sent_at = engine_.now();

  const auto targets = receivers(packet);
  Attrs attrs{{"packet_id", static_cast<std::int64_t>(packet.id)},
              {"src", packet.src},
              {"dst", packet.dst},
              {"size_bytes", static_cast<std::int64_t>(packet.size())},
              {"label", packet.label},
              {"snapshot", static_cast<std::int64_t>(snapshot_.version)},
              {"receivers", static_cast<std::int64_t>(targets.size())}};
  if (packet.origin_stamp) attrs.emplace_back("origin_ns", packet.origin_stamp->count());
  engine_.trace().emit(engine_.now(), "SEND", packet.src, std::move(attrs));

  if (!packet.is_broadcast() && targets.empty()) {
    drop(kDropNoRoute, packet, packet.dst, "");
    return {};
  }

  auto shared = std::make_shared<const Packet>(packet);
  std::vector<std::uint64_t> scheduled;
  for (const auto& [receiver, channel_key] : targets) {
    const ChannelState& ch = channels_.at(channel_key);
    if (!ch.enabled) {
      drop(kDropLinkDown, packet, receiver, channel_key);
      continue;
    }
    if (ch.partitioned(packet.src, receiver)) {
      drop(kDropPartition, packet, receiver, channel_key);
      continue;
    }
    if (ch.spec.loss > 0.0 && engine_.rng().next_unit(DrawPurpose::kLoss) < ch.spec.loss) {
      drop(kDropLoss, packet, receiver, channel_key);
      continue;
    }
    const Duration delay = delivery_delay(ch.spec, packet.size(), engine_.rng());
    scheduled.push_back(engine_.schedule(packet.sent_at + delay, EventKind::kPacketDelivery,
                                         DeliveryPayload{shared, receiver, channel_key, delay}));
  }
  return scheduled;
}

std::optional<Packet> Network::complete_delivery(const DeliveryPayload& d, bool receiver_alive) {
  const Packet& packet = *d.packet;
  const ChannelState& ch = channels_.at(d.channel);
  if (!ch.enabled) {
    drop(kDropLinkDown, packet, d.receiver, d.channel);
    return std::nullopt;
  }
  if (ch.partitioned(packet.src, d.receiver)) {
    drop(kDropPartition, packet, d.receiver, d.channel);
    return std::nullopt;
  }
  if (!receiver_alive) {
    drop(kDropCrashed, packet, d.receiver, d.channel);
    return std::nullopt;
  }

  Packet out = packet;
  bool corrupted = false;
  const SimTime now = engine_.now();
  for (const auto& w : corruptions_) {
    if (now < w.from || now >= w.until) continue;
    if (w.channel != "*" && w.channel != d.channel) continue;
    if (out.payload.empty()) continue;
    if (engine_.rng().next_unit(DrawPurpose::kCorruption) < w.probability) {
      const auto index = engine_.rng().uniform_int(
          0, static_cast<std::int64_t>(out.payload.size()) - 1, DrawPurpose::kCorruption);
      out.payload[static_cast<std::size_t>(index)] ^= 0xFF;
      corrupted = true;
    }
  }

  engine_.trace().emit(now, "DELIVERY", d.receiver,
                       {{"packet_id", static_cast<std::int64_t>(packet.id)},
                        {"src", packet.src},
                        {"dst", d.receiver},
                        {"size_bytes", static_cast<std::int64_t>(packet.size())},
                        {"label", packet.label},
                        {"channel", d.channel},
                        {"latency_ns", (now - packet.sent_at).count()},
                        {"corrupted", corrupted}});
  return out;
}

ChannelState& Network::channel(const std::string& selector) {
  auto it = channels_.find(selector);
  if (it == channels_.end()) throw Error(ErrorCode::kUnknownTarget, selector);
  return it->second;
}

const ChannelState& Network::channel(const std::string& selector) const {
  auto it = channels_.find(selector);
  if (it == channels_.end()) throw Error(ErrorCode::kUnknownTarget, selector);
  return it->second;
}

std::vector<std::string> Network::resolve(const std::string& selector) const {
  std::vector<std::string> out;
  if (selector == "*" || selector.empty()) {
    for (const auto& [key, state] : channels_) out.push_back(key);
    return out;
  }
  const auto sel = ChannelSelector::parse(selector);
  if (!sel) throw Error(ErrorCode::kUnknownTarget, selector);
  const std::string key = sel->to_string();
  if (channels_.count(key) == 0) throw Error(ErrorCode::kUnknownTarget, selector);
  out.push_back(key);
  return out;
}

}  // namespace iotstage
