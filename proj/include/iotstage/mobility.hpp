#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "iotstage/common.hpp"
#include "iotstage/scenario.hpp"

namespace iotstage {

enum class EntityState { kMoving, kStopped, kFinished };

std::string_view entity_state_name(EntityState state);

struct EntityCommand {
  enum class Kind { kStop, kResume, kSetSpeed };

  EntityId entity;
  Kind kind = Kind::kStop;
  double value = 0.0;  // m/s, SetSpeed only
  SimTime issued_at{0};
  std::uint64_t sequence = 0;  // issue order, breaks issued_at ties
};

std::string_view command_kind_name(EntityCommand::Kind kind);

// A mobile object moving at constant speed along a polyline.
class Entity {
 public:
  explicit Entity(const EntitySpec& spec);

  const EntityId& id() const { return id_; }
  EntityState state() const { return state_; }
  double speed() const { return speed_; }
  double progress() const { return progress_; }
  double route_length() const { return cumulative_.back(); }
  const std::vector<Position>& route() const { return route_; }

  // Point at the current arc length along the route.
  Position position() const;
  Position position_at(double arc_length) const;

  void advance(Duration dt);
  void set_state(EntityState state) { state_ = state; }
  void set_speed(double speed) { speed_ = speed; }

 private:
  EntityId id_;
  std::vector<Position> route_;
  std::vector<double> cumulative_;  // arc length at each route vertex
  double speed_;
  double progress_ = 0.0;
  EntityState state_ = EntityState::kMoving;
};

enum class CommandOutcome { kApplied, kIgnoredFinished };

// Built-in continuous-time domain simulator. Deterministic and RNG-free.
class Mobility {
 public:
  Mobility() = default;
  explicit Mobility(const std::vector<EntitySpec>& specs);

  // Advances every Moving entity by speed * dt, clamped at the route end.
  std::map<EntityId, Position> step(Duration dt);

  // Throws kUnknownEntity. Commands on finished entities are ignored.
  CommandOutcome apply_command(const EntityCommand& command);

  // Applies a batch in (issued_at, sequence) order so the last-issued command wins.
  std::vector<std::pair<EntityCommand, CommandOutcome>> apply_commands(
      std::vector<EntityCommand> commands);

  Position position_of(const EntityId& id) const;
  const Entity& entity(const EntityId& id) const;
  bool contains(const EntityId& id) const { return entities_.count(id) != 0; }
  std::map<EntityId, Position> positions() const;
  const std::map<EntityId, Entity>& entities() const { return entities_; }

 private:
  Entity& mutable_entity(const EntityId& id);

  std::map<EntityId, Entity> entities_;
};

}  // namespace iotstage
