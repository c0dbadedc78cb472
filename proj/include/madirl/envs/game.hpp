#pragma once

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace madirl::envs {

inline constexpr int kEpisodeLength = 25;

using Observation = std::vector<float>;

struct GameSpec {
  std::string env_id;
  int n_agents = 0;
  std::vector<int> obs_dims;
  std::vector<int> n_actions;
  int episode_length = kEpisodeLength;
  std::vector<std::string> roles;

  [[nodiscard]] nlohmann::json to_json() const;
  static GameSpec from_json(const nlohmann::json& j);
  bool operator==(const GameSpec&) const = default;
};

/// One environment step. gt_rewards are already divided by the episode length.
struct JointTransition {
  std::vector<Observation> obs;
  std::vector<int> actions;
  std::vector<Observation> next_obs;
  bool done = false;
  std::vector<float> gt_rewards;
  int step_index = 0;

  /// Throws ShapeError when any per-agent field disagrees with `spec`.
  void validate(const GameSpec& spec) const;
  bool operator==(const JointTransition&) const = default;
};

struct StepResult {
  std::vector<Observation> obs;
  std::vector<float> rewards;
  bool done = false;
};

/// Partially observable Markov game with a fixed 25-step horizon.
/// reset(seed) fully determines the episode given the action sequence.
class Env {
 public:
  virtual ~Env() = default;

  [[nodiscard]] const GameSpec& spec() const { return spec_; }
  [[nodiscard]] int step_index() const { return t_; }
  [[nodiscard]] bool done() const { return done_; }

  std::vector<Observation> reset(std::uint64_t seed);
  StepResult step(std::span<const int> actions);

  /// Current joint observation (valid after reset).
  [[nodiscard]] virtual std::vector<Observation> observe() const = 0;

  /// Upper bound on |per-step reward| before division by the episode length.
  [[nodiscard]] virtual double reward_bound() const = 0;

 protected:
  explicit Env(GameSpec spec);

  virtual void reset_world(std::mt19937_64& rng) = 0;
  /// Advances the world and returns per-agent rewards before length division.
  virtual std::vector<double> advance(std::span<const int> actions) = 0;

 private:
  GameSpec spec_;
  std::mt19937_64 rng_;
  int t_ = 0;
  bool done_ = true;
  bool started_ = false;
};

/// Builds an environment from its id: keep_away, coop_comm, coop_nav,
/// rover_tower:{8|12|16}, toy_coop.
std::unique_ptr<Env> make_env(const std::string& id);

/// Per-agent sum of per-step rewards over a complete episode.
std::vector<double> episode_score(std::span<const std::vector<float>> step_rewards, int n_agents,
                                  int episode_length = kEpisodeLength);
std::vector<double> episode_score(std::span<const JointTransition> episode, int n_agents,
                                  int episode_length = kEpisodeLength);

}  // namespace madirl::envs
