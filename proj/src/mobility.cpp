#include "iotstage/mobility.hpp"

#include <algorithm>

namespace iotstage {

std::string_view entity_state_name(EntityState state) {
  switch (state) {
    case EntityState::kMoving: return "Moving";
    case EntityState::kStopped: return "Stopped";
    case EntityState::kFinished: return "Finished";
  }
  return "Unknown";
}

std::string_view command_kind_name(EntityCommand::Kind kind) {
  switch (kind) {
    case EntityCommand::Kind::kStop: return "Stop";
    case EntityCommand::Kind::kResume: return "Resume";
    case EntityCommand::Kind::kSetSpeed: return "SetSpeed";
  }
  return "Unknown";
}

Entity::Entity(const EntitySpec& spec) : id_(spec.id), route_(spec.route), speed_(spec.speed_mps) {
  if (route_.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "entity " + id_ + " needs at least two route points");
  }
  cumulative_.reserve(route_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < route_.size(); ++i) {
    cumulative_.push_back(cumulative_.back() + distance(route_[i - 1], route_[i]));
  }
  if (route_length() <= 0.0) state_ = EntityState::kFinished;
}

Position Entity::position() const { return position_at(progress_); }

Position Entity::position_at(double arc_length) const {
  if (arc_length <= 0.0) return route_.front();
  if (arc_length >= route_length()) return route_.back();
  // First vertex strictly beyond arc_length ends the containing segment.
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), arc_length);
  const std::size_t end = static_cast<std::size_t>(it - cumulative_.begin());
  const std::size_t begin = end - 1;
  const double seg_len = cumulative_[end] - cumulative_[begin];
  const double frac = seg_len > 0.0 ? (arc_length - cumulative_[begin]) / seg_len : 0.0;
  const Position& a = route_[begin];
  const Position& b = route_[end];
  return {a.x + (b.x - a.x) * frac, a.y + (b.y - a.y) * frac};
}

void Entity::advance(Duration dt) {
  if (state_ != EntityState::kMoving) return;
  progress_ += speed_ * to_seconds(dt);
  if (progress_ >= route_length()) {
    progress_ = route_length();
    state_ = EntityState::kFinished;
  }
}

Mobility::Mobility(const std::vector<EntitySpec>& specs) {
  for (const auto& spec : specs) entities_.emplace(spec.id, Entity(spec));
}

std::map<EntityId, Position> Mobility::step(Duration dt) {
  if (dt <= Duration::zero()) throw Error(ErrorCode::kInvalidArgument, "step dt must be positive");
  for (auto& [id, entity] : entities_) entity.advance(dt);
  return positions();
}

Entity& Mobility::mutable_entity(const EntityId& id) {
  auto it = entities_.find(id);
  if (it == entities_.end()) throw Error(ErrorCode::kUnknownEntity, id);
  return it->second;
}

const Entity& Mobility::entity(const EntityId& id) const {
  auto it = entities_.find(id);
  if (it == entities_.end()) throw Error(ErrorCode::kUnknownEntity, id);
  return it->second;
}

CommandOutcome Mobility::apply_command(const EntityCommand& command) {
  Entity& e = mutable_entity(command.entity);
  if (e.state() == EntityState::kFinished) return CommandOutcome::kIgnoredFinished;
  switch (command.kind) {
    case EntityCommand::Kind::kStop: e.set_state(EntityState::kStopped); break;
    case EntityCommand::Kind::kResume: e.set_state(EntityState::kMoving); break;
    case EntityCommand::Kind::kSetSpeed:
      if (command.value < 0.0) throw Error(ErrorCode::kInvalidArgument, "negative speed");
      e.set_speed(command.value);
      break;
  }
  return CommandOutcome::kApplied;
}

std::vector<std::pair<EntityCommand, CommandOutcome>> Mobility::apply_commands(
    std::vector<EntityCommand> commands) {
  std::stable_sort(commands.begin(), commands.end(), [](const auto& a, const auto& b) {
    if (a.issued_at != b.issued_at) return a.issued_at < b.issued_at;
    return a.sequence < b.sequence;
  });
  std::vector<std::pair<EntityCommand, CommandOutcome>> out;
  out.reserve(commands.size());
  for (auto& c : commands) {
    const CommandOutcome outcome = apply_command(c);
    out.emplace_back(std::move(c), outcome);
  }
  return out;
}

Position Mobility::position_of(const EntityId& id) const { return entity(id).position(); }

std::map<EntityId, Position> Mobility::positions() const {
  std::map<EntityId, Position> out;
  for (const auto& [id, entity] : entities_) out.emplace(id, entity.position());
  return out;
}

}  // namespace iotstage
