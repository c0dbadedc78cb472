#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace madirl::orchestrator {

/// Every knob of a run. Defaults follow the MA-DAAC hyperparameter table;
/// defaults_for() swaps in the expert table where it applies.
struct ExperimentConfig {
  std::string env = "toy_coop";
  std::uint64_t seed = 0;
  /// expert-maac, ma-daac, ma-gail or retrain.
  std::string algorithm = "ma-daac";

  double gamma = 0.995;
  std::size_t buffer_size = 1'250'000;
  double lr_policy = 1e-3;
  double lr_critic = 1e-3;
  double lr_disc = 5e-4;
  double tau_policy = 5e-4;
  double tau_critic = 5e-4;
  double entropy_policy = 0.01;
  double entropy_disc = 0.01;
  double clip_critic = 1.0;
  double clip_disc = 10.0;
  int batch_size = 1000;
  /// Environment steps between training events.
  int update_period = 100;
  /// Gradient rounds per training event.
  int rounds_per_update = 4;
  /// No training until the agent buffer holds this many transitions.
  int warmup = 1000;
  int hidden = 128;
  int heads = 4;
  int disc_hidden = 128;

  /// Training budget in episodes.
  int episodes = 5000;
  /// dec, cen or cen-obs.
  std::string disc = "dec";
  /// Number of demonstration episodes (generated, or expected in demos_path).
  int demos = 50;
  std::string demos_path;
  /// Expert checkpoint for gen-demos and eval.
  std::string expert_path;
  /// Retrain reward: g (learned export at reward_path), ground-truth or zero.
  std::string reward = "g";
  std::string reward_path;
  /// Reference scores for NSS. Filled from demos, exports or a fresh random
  /// baseline when empty.
  std::vector<double> score_expert;
  std::vector<double> score_random;

  /// Evaluate every this many training episodes with eval_episodes greedy episodes.
  int eval_every = 100;
  int eval_episodes = 10;
  /// Greedy episodes for the expert score after training.
  int final_eval_episodes = 500;
  int baseline_episodes = 500;
  /// Stop once stop_patience consecutive evaluations reach this NSS.
  std::optional<double> stop_nss;
  int stop_patience = 1;
  /// Also require the final_eval_episodes greedy NSS to reach stop_nss before stopping.
  bool stop_confirm = false;

  /// Replay capacity of one rollout batch: the update_period transitions
  /// collected between training events.
  bool on_policy = false;
  /// false freezes the discriminator (rewards stay fixed).
  bool disc_updates = true;
  /// Divide rewards by their running standard deviation per agent.
  bool normalize_rewards = false;
  /// Rollout workers; 0 means MADIRL_THREADS or 1. Always capped by MADIRL_THREADS.
  int workers = 0;

  [[nodiscard]] nlohmann::json to_json() const;
  /// Overrides fields present in `j`. Unknown keys throw ConfigError.
  void merge(const nlohmann::json& j);
  /// Throws ConfigError for any out-of-range field.
  void validate() const;

  [[nodiscard]] int episodes_per_event(int episode_length) const { return update_period / episode_length; }
  [[nodiscard]] std::size_t agent_capacity() const;
  [[nodiscard]] int effective_warmup() const;
  /// workers resolved against MADIRL_THREADS.
  [[nodiscard]] int effective_workers() const;
};

/// Defaults for an algorithm. expert-maac and retrain use the expert MAAC
/// table: buffer 50,000, target rates 0.01 and reward normalization.
ExperimentConfig defaults_for(const std::string& algorithm);

/// Independent stream derived from the master seed, a name and an index.
std::mt19937_64 derive_stream(std::uint64_t master, std::string_view name, std::uint64_t index = 0);

}  // namespace madirl::orchestrator
