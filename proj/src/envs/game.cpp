#include "madirl/envs/game.hpp"

#include "madirl/common/errors.hpp"

#include <cmath>

namespace madirl::envs {

nlohmann::json GameSpec::to_json() const {
  return {{"env_id", env_id},       {"n_agents", n_agents},
          {"obs_dims", obs_dims},   {"n_actions", n_actions},
          {"episode_length", episode_length}, {"roles", roles}};
}

GameSpec GameSpec::from_json(const nlohmann::json& j) {
  GameSpec s;
  s.env_id = j.at("env_id").get<std::string>();
  s.n_agents = j.at("n_agents").get<int>();
  s.obs_dims = j.at("obs_dims").get<std::vector<int>>();
  s.n_actions = j.at("n_actions").get<std::vector<int>>();
  s.episode_length = j.at("episode_length").get<int>();
  s.roles = j.at("roles").get<std::vector<std::string>>();
  return s;
}

void JointTransition::validate(const GameSpec& spec) const {
  const auto n = static_cast<std::size_t>(spec.n_agents);
  if (obs.size() != n || next_obs.size() != n || actions.size() != n || gt_rewards.size() != n) {
    throw ShapeError("transition: per-agent lists must have length " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = static_cast<std::size_t>(spec.obs_dims[i]);
    if (obs[i].size() != d || next_obs[i].size() != d) {
      throw ShapeError("transition: agent " + std::to_string(i) + " observation has wrong dimension");
    }
    if (actions[i] < 0 || actions[i] >= spec.n_actions[i]) {
      throw ShapeError("transition: agent " + std::to_string(i) + " action out of range");
    }
    if (!std::isfinite(gt_rewards[i])) throw NumericError("transition: non-finite reward");
  }
  if (step_index < 0 || step_index >= spec.episode_length) throw ShapeError("transition: step index out of range");
  if (done != (step_index == spec.episode_length - 1)) {
    throw ShapeError("transition: done flag inconsistent with step index");
  }
}

Env::Env(GameSpec spec) : spec_(std::move(spec)) {}

std::vector<Observation> Env::reset(std::uint64_t seed) {
  rng_.seed(seed);
  reset_world(rng_);
  t_ = 0;
  done_ = false;
  started_ = true;
  return observe();
}

StepResult Env::step(std::span<const int> actions) {
  if (!started_) throw UsageError(spec_.env_id + ": step called before reset");
  if (done_) throw UsageError(spec_.env_id + ": step called after the episode finished");
  if (static_cast<int>(actions.size()) != spec_.n_agents) {
    throw ShapeError(spec_.env_id + ": expected " + std::to_string(spec_.n_agents) + " actions, got " +
                     std::to_string(actions.size()));
  }
  for (int i = 0; i < spec_.n_agents; ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= spec_.n_actions[static_cast<std::size_t>(i)]) {
      throw UsageError(spec_.env_id + ": action " + std::to_string(a) + " out of range for agent " +
                       std::to_string(i));
    }
  }
  const auto raw = advance(actions);
  StepResult out;
  out.rewards.reserve(raw.size());
  for (double r : raw) out.rewards.push_back(static_cast<float>(r / spec_.episode_length));
  ++t_;
  done_ = t_ >= spec_.episode_length;
  out.done = done_;
  out.obs = observe();
  return out;
}

std::vector<double> episode_score(std::span<const std::vector<float>> step_rewards, int n_agents,
                                  int episode_length) {
  if (static_cast<int>(step_rewards.size()) != episode_length) {
    throw UsageError("episode_score: incomplete episode (" + std::to_string(step_rewards.size()) + " of " +
                     std::to_string(episode_length) + " steps)");
  }
  std::vector<double> score(static_cast<std::size_t>(n_agents), 0.0);
  for (const auto& r : step_rewards) {
    if (static_cast<int>(r.size()) != n_agents) throw ShapeError("episode_score: reward vector length mismatch");
    for (int i = 0; i < n_agents; ++i) score[static_cast<std::size_t>(i)] += r[static_cast<std::size_t>(i)];
  }
  return score;
}

std::vector<double> episode_score(std::span<const JointTransition> episode, int n_agents, int episode_length) {
  std::vector<std::vector<float>> rewards;
  rewards.reserve(episode.size());
  for (const auto& tr : episode) rewards.push_back(tr.gt_rewards);
  return episode_score(std::span<const std::vector<float>>(rewards), n_agents, episode_length);
}

}  // namespace madirl::envs
