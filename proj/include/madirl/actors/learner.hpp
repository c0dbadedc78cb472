#pragma once

#include "madirl/actors/actors.hpp"
#include "madirl/numerics/checkpoint.hpp"
#include "madirl/numerics/optim.hpp"

namespace madirl::actors {

struct MaacConfig {
  double gamma = 0.995;
  double lr_policy = 1e-3;
  double lr_critic = 1e-3;
  double tau_policy = 0.0005;
  double tau_critic = 0.0005;
  double critic_clip = 1.0;
  double entropy_coef = 0.01;
  int hidden = kHidden;
  int heads = kHeads;
};

/// Joint transitions as seen by the learner. There is deliberately no
/// reward field: rewards are always supplied by the caller.
struct LearnBatch {
  std::vector<Matrix<float>> obs;
  std::vector<Matrix<float>> next_obs;
  std::vector<std::vector<int>> actions;
  std::vector<std::uint8_t> done;

  [[nodiscard]] int size() const { return obs.empty() ? 0 : static_cast<int>(obs[0].rows()); }
};

struct CriticStats {
  double loss = 0.0;
  double grad_norm = 0.0;
};

/// Policies, attention critic and their target copies with the MAAC update
/// rules. Training runs in float.
class MaacLearner {
 public:
  MaacLearner(GameSpec spec, MaacConfig config, std::mt19937_64& init_rng);

  /// One critic step towards TD targets built from `rewards` (N arrays, B x 1).
  CriticStats update_critic(const LearnBatch& batch, std::span<const Matrix<float>> rewards, std::mt19937_64& rng);
  /// One policy step per agent with joint actions resampled from the current
  /// policies at the batch observations. Returns per-agent surrogate losses.
  std::vector<double> update_policies(const LearnBatch& batch, std::mt19937_64& rng);
  void update_targets();

  std::vector<int> act(const std::vector<envs::Observation>& obs, ActMode mode, std::mt19937_64& rng) const;
  /// pi_i(. | o) for a batch of observations, B x n_actions_i.
  [[nodiscard]] Matrix<float> probs(int agent, const Matrix<float>& obs) const;
  /// pi_i(a | o) for the given actions, B x 1.
  [[nodiscard]] Matrix<float> action_probs(int agent, const Matrix<float>& obs, std::span<const int> actions) const;
  /// log pi_i(a | o) for the given actions, B x 1.
  [[nodiscard]] Matrix<float> action_log_probs(int agent, const Matrix<float>& obs, std::span<const int> actions) const;

  /// Parameters under policy/, critic/, target/policy/ and target/critic/.
  void append_to(numerics::Checkpoint& ckpt) const;
  void restore_from(const numerics::Checkpoint& ckpt);
  /// Policies only, for evaluation and demo generation.
  void restore_policies(const numerics::Checkpoint& ckpt);

  [[nodiscard]] const GameSpec& spec() const { return spec_; }
  [[nodiscard]] const MaacConfig& config() const { return config_; }
  [[nodiscard]] const PolicyNets<float>& policies() const { return policies_; }
  [[nodiscard]] const AttentionCritic<float>& critic() const { return critic_; }
  [[nodiscard]] ParamStore<float>& policy_params() { return policy_; }
  [[nodiscard]] ParamStore<float>& critic_params() { return critic_store_; }
  [[nodiscard]] const ParamStore<float>& policy_params() const { return policy_; }
  [[nodiscard]] const ParamStore<float>& critic_params() const { return critic_store_; }
  [[nodiscard]] const ParamStore<float>& target_policy_params() const { return target_policy_; }
  [[nodiscard]] const ParamStore<float>& target_critic_params() const { return target_critic_; }

 private:
  GameSpec spec_;
  MaacConfig config_;
  ParamStore<float> policy_;
  ParamStore<float> critic_store_;
  PolicyNets<float> policies_;
  AttentionCritic<float> critic_;
  ParamStore<float> target_policy_;
  ParamStore<float> target_critic_;
  numerics::Adam<float> policy_opt_;
  numerics::Adam<float> critic_opt_;
};

}  // namespace madirl::actors
