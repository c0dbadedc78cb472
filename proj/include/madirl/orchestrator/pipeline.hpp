#pragma once

#include "madirl/actors/learner.hpp"
#include "madirl/eval/eval.hpp"
#include "madirl/numerics/checkpoint.hpp"
#include "madirl/orchestrator/config.hpp"
#include "madirl/replay/replay.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace madirl::orchestrator {

struct BaselineStats {
  std::vector<double> mean;
  /// Standard error of the mean per agent.
  std::vector<double> sem;
  int episodes = 0;
};

/// Per-agent mean score of uniformly random play over n_episodes.
BaselineStats random_baseline(const std::string& env, int n_episodes, std::uint64_t seed);

/// Outcome of one training run. The same content is written to run.json.
struct RunOutcome {
  std::filesystem::path dir;
  std::vector<eval::MetricsRow> rows;
  /// First evaluated episode index at which stop_nss was reached.
  std::optional<std::int64_t> hit_episode;
  std::int64_t episodes_trained = 0;
  /// Greedy scores over final_eval_episodes after training.
  std::vector<double> final_scores;
  double final_nss = 0.0;
  /// Learned g against ground truth over the final evaluation episodes.
  std::optional<double> pcc;
  std::filesystem::path checkpoint;
  /// AIRL runs only.
  std::filesystem::path reward_export;
  nlohmann::json record;
};

/// MAAC on ground-truth rewards. Writes checkpoints/expert.ckpt whose meta
/// holds score_expert (greedy, final_eval_episodes) and score_random.
RunOutcome train_expert(const ExperimentConfig& config, const std::filesystem::path& out);

/// count argmax episodes of the expert. meta.scores is the per-agent demo
/// average; meta.score_random is carried over from the expert.
replay::DemoSet generate_demos(const numerics::Checkpoint& expert, const std::string& env, int count,
                               std::uint64_t seed);

/// MA-DAAC (ma-daac) or the GAIL-reward ablation (ma-gail) inside MAAC.
RunOutcome train_irl(const ExperimentConfig& config, const replay::DemoSet& demos, const std::filesystem::path& out);

/// Fresh MAAC learner on a fixed reward: the g export at reward_path, the
/// ground truth, or zero. Never reads demonstrations.
RunOutcome retrain(const ExperimentConfig& config, const std::filesystem::path& out);

/// Scores of a policy checkpoint over n episodes, greedy by default.
std::vector<double> evaluate_checkpoint(const numerics::Checkpoint& ckpt, const std::string& env, int n_episodes,
                                        std::uint64_t seed, actors::ActMode mode = actors::ActMode::kArgmax);

}  // namespace madirl::orchestrator
