#pragma once

#include "madirl/envs/game.hpp"

#include <Eigen/Core>

namespace madirl::envs {

using Vec2 = Eigen::Vector2d;

inline constexpr double kArenaBound = 1.5;
inline constexpr double kDamping = 0.25;
inline constexpr double kDt = 0.1;
inline constexpr double kAccel = 5.0;
/// Entity radius; two entities overlap when their centres are closer than twice this.
inline constexpr double kEntityRadius = 0.1;
inline constexpr int kMoveActions = 5;

struct WorldState {
  std::vector<Vec2> pos;
  std::vector<Vec2> vel;
  std::vector<bool> movable;
  std::vector<Vec2> landmarks;
  /// Per-agent goal landmark index, -1 where the agent has none.
  std::vector<int> goal;
  /// pairing[r] = tower (as an index among towers) paired with rover r.
  std::vector<int> pairing;
  /// Message each agent will see at the next observation; -1 for none.
  std::vector<int> inbox;
};

/// Unit direction for a movement action: 0 no-op, 1 +x, 2 -x, 3 +y, 4 -y.
Vec2 move_direction(int action);

/// One damped Euler step for every movable entity, then clamping to the arena.
void integrate(WorldState& w, std::span<const Vec2> accel);

/// Separates two overlapping entities and exchanges their normal velocity
/// components (equal-mass elastic contact). Returns true if they overlapped.
bool shove(WorldState& w, int a, int b);

class ParticleEnv : public Env {
 public:
  [[nodiscard]] const WorldState& world() const { return world_; }
  /// Mutable access for tests and scripted scenarios.
  WorldState& world() { return world_; }

 protected:
  using Env::Env;
  WorldState world_;
};

/// Speaker (agent 0, immobile, 3-way message) guides the listener (agent 1)
/// to a goal landmark only the speaker can see.
std::unique_ptr<ParticleEnv> make_coop_comm();
/// Three agents cover three landmarks; shared reward, collision penalty.
std::unique_ptr<ParticleEnv> make_coop_nav();
/// Reacher (agent 0) heads to a goal landmark; pusher (agent 1) does not see
/// the goal and is rewarded for the reacher's distance from it.
std::unique_ptr<ParticleEnv> make_keep_away();
/// N/2 rovers and N/2 towers, randomly paired each episode. A tower sees its
/// pair's goal landmark and sends a message; its rover sees only the message.
std::unique_ptr<ParticleEnv> make_rover_tower(int n_agents);

}  // namespace madirl::envs
