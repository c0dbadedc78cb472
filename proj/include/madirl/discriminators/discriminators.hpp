#pragma once

#include "madirl/envs/game.hpp"
#include "madirl/numerics/array.hpp"
#include "madirl/numerics/checkpoint.hpp"
#include "madirl/numerics/layers.hpp"
#include "madirl/numerics/optim.hpp"
#include "madirl/numerics/tape.hpp"

#include <random>
#include <span>
#include <string>
#include <vector>

namespace madirl::discriminators {

using envs::GameSpec;
using numerics::Matrix;
using numerics::ParamStore;
using numerics::Tape;
using numerics::Var;

inline constexpr int kDiscHidden = 128;

enum class DiscVariant { kDecentralized, kCentralized, kCentralizedObsOnly };

/// "dec", "cen" or "cen-obs".
DiscVariant parse_variant(const std::string& name);
std::string variant_name(DiscVariant v);

/// Joint inputs for one batch: per agent B x d_i observations, B actions.
/// next_obs may be empty where a consumer never reads it.
template <typename T>
struct JointInputs {
  std::span<const Matrix<T>> obs;
  std::span<const std::vector<int>> actions;
  std::span<const Matrix<T>> next_obs;

  [[nodiscard]] Eigen::Index size() const { return obs.empty() ? 0 : obs[0].rows(); }
};

/// N scalar outputs. Separate: agent i maps its own input through
/// in_i -> 128 -> 128 -> 1. Shared: one input goes through a trunk
/// in -> 128 -> 128 followed by one linear head per agent.
template <typename T>
class AgentScalarNets {
 public:
  AgentScalarNets() = default;
  AgentScalarNets(ParamStore<T>& store, const std::string& prefix, std::vector<int> in_dims, bool shared, int n_agents,
                  int hidden, std::mt19937_64& rng);

  /// Separate: one input per agent. Shared: a single joint input.
  std::vector<Var<T>> forward(Tape<T>& tape, ParamStore<T>& store, std::span<const Var<T>> inputs) const;
  std::vector<Matrix<T>> infer(const ParamStore<T>& store, std::span<const Matrix<T>> inputs) const;

  [[nodiscard]] bool shared() const { return shared_; }
  [[nodiscard]] int n_agents() const { return n_agents_; }

 private:
  bool shared_ = false;
  int n_agents_ = 0;
  std::vector<numerics::Mlp<T>> nets_;  // per agent, or the single trunk
  std::vector<numerics::Linear<T>> heads_;
};

/// Builds the per-variant input arrays from joint observations and actions.
/// with_actions=false drops the action one-hots.
template <typename T>
std::vector<Matrix<T>> assemble_inputs(const GameSpec& spec, DiscVariant variant, std::span<const Matrix<T>> obs,
                                       std::span<const std::vector<int>> actions, bool with_actions);

/// D = sigmoid(f - log pi), so D = exp(f) / (exp(f) + pi).
double d_value(double f, double pi);
/// log D - log(1 - D) = f - log pi.
double airl_reward(double f, double pi);
/// log D.
double gail_reward(double d);

/// BCE over expert (label 1) and agent (label 0) logits summed over agents,
/// each a batch mean, minus entropy_coef times the per-agent batch-mean
/// binary entropy of D over both batches. Logit vectors are N arrays of B x 1.
template <typename T>
Var<T> adversarial_loss(std::span<const Var<T>> expert_logits, std::span<const Var<T>> agent_logits,
                        double entropy_coef);

/// AIRL-structured discriminator: per agent f_i = g_i + gamma h_i(o') - h_i(o)
/// and logit f_i - log pi_i(a_i | o_i). Parameters live under
/// "{prefix}g/..." and "{prefix}h/...".
template <typename T>
class AirlDiscriminator {
 public:
  AirlDiscriminator() = default;
  AirlDiscriminator(ParamStore<T>& store, const GameSpec& spec, DiscVariant variant, double gamma,
                    std::mt19937_64& rng, int hidden = kDiscHidden, const std::string& prefix = "disc/");

  std::vector<Var<T>> g(Tape<T>& tape, ParamStore<T>& store, std::span<const Matrix<T>> obs,
                        std::span<const std::vector<int>> actions) const;
  std::vector<Var<T>> h(Tape<T>& tape, ParamStore<T>& store, std::span<const Matrix<T>> obs) const;
  std::vector<Var<T>> f(Tape<T>& tape, ParamStore<T>& store, const JointInputs<T>& in) const;
  /// f_i - log pi_i per agent; log_pi holds N arrays of B x 1 constants.
  std::vector<Var<T>> logits(Tape<T>& tape, ParamStore<T>& store, const JointInputs<T>& in,
                             std::span<const Matrix<T>> log_pi) const;

  std::vector<Matrix<T>> f_values(const ParamStore<T>& store, const JointInputs<T>& in) const;
  /// f_i - log pi_i per agent, B x 1, detached.
  std::vector<Matrix<T>> airl_rewards(const ParamStore<T>& store, const JointInputs<T>& in,
                                      std::span<const Matrix<T>> log_pi) const;
  /// g_i only; never reads next observations.
  std::vector<Matrix<T>> g_rewards(const ParamStore<T>& store, std::span<const Matrix<T>> obs,
                                   std::span<const std::vector<int>> actions) const;

  Var<T> loss(Tape<T>& tape, ParamStore<T>& store, const JointInputs<T>& expert,
              std::span<const Matrix<T>> expert_log_pi, const JointInputs<T>& agent,
              std::span<const Matrix<T>> agent_log_pi, double entropy_coef) const;

  [[nodiscard]] DiscVariant variant() const { return variant_; }
  [[nodiscard]] double gamma() const { return gamma_; }
  [[nodiscard]] const GameSpec& spec() const { return spec_; }
  [[nodiscard]] const std::string& prefix() const { return prefix_; }
  [[nodiscard]] int hidden() const { return hidden_; }

 private:
  GameSpec spec_;
  DiscVariant variant_ = DiscVariant::kDecentralized;
  double gamma_ = 0.995;
  int hidden_ = kDiscHidden;
  std::string prefix_;
  AgentScalarNets<T> g_;
  AgentScalarNets<T> h_;
};

/// MA-GAIL classifier: per agent logit over (o_i, a_i) when decentralized or
/// (o, a) through a shared trunk when centralized. Parameters under "{prefix}d/".
template <typename T>
class GailDiscriminator {
 public:
  GailDiscriminator() = default;
  GailDiscriminator(ParamStore<T>& store, const GameSpec& spec, DiscVariant variant, std::mt19937_64& rng,
                    int hidden = kDiscHidden, const std::string& prefix = "disc/");

  std::vector<Var<T>> logits(Tape<T>& tape, ParamStore<T>& store, std::span<const Matrix<T>> obs,
                             std::span<const std::vector<int>> actions) const;
  std::vector<Matrix<T>> d_values(const ParamStore<T>& store, std::span<const Matrix<T>> obs,
                                  std::span<const std::vector<int>> actions) const;
  /// log D_i per agent, B x 1.
  std::vector<Matrix<T>> gail_rewards(const ParamStore<T>& store, std::span<const Matrix<T>> obs,
                                      std::span<const std::vector<int>> actions) const;
  Var<T> loss(Tape<T>& tape, ParamStore<T>& store, const JointInputs<T>& expert, const JointInputs<T>& agent,
              double entropy_coef) const;

  [[nodiscard]] DiscVariant variant() const { return variant_; }

 private:
  GameSpec spec_;
  DiscVariant variant_ = DiscVariant::kDecentralized;
  AgentScalarNets<T> d_;
};

struct DiscConfig {
  double lr = 5e-4;
  double entropy_coef = 0.01;
  double clip = 10.0;
  int hidden = kDiscHidden;
};

/// Owns the parameters and optimizer of either discriminator kind.
/// Training runs in float.
class DiscTrainer {
 public:
  enum class Kind { kAirl, kGail };

  DiscTrainer(Kind kind, GameSpec spec, DiscVariant variant, double gamma, DiscConfig config,
              std::mt19937_64& init_rng);

  /// One Adam step on the adversarial loss. log_pi arguments are ignored
  /// for the GAIL kind. Returns the loss before the step.
  double update(const JointInputs<float>& expert, std::span<const Matrix<float>> expert_log_pi,
                const JointInputs<float>& agent, std::span<const Matrix<float>> agent_log_pi);

  /// Rewards fed to the RL learner: f - log pi (AIRL) or log D (GAIL).
  std::vector<Matrix<float>> rewards(const JointInputs<float>& in, std::span<const Matrix<float>> log_pi) const;

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] const AirlDiscriminator<float>& airl() const { return airl_; }
  [[nodiscard]] const GailDiscriminator<float>& gail() const { return gail_; }
  [[nodiscard]] ParamStore<float>& params() { return store_; }
  [[nodiscard]] const ParamStore<float>& params() const { return store_; }

  void append_to(numerics::Checkpoint& ckpt) const;
  void restore_from(const numerics::Checkpoint& ckpt);

 private:
  Kind kind_;
  GameSpec spec_;
  DiscConfig config_;
  ParamStore<float> store_;
  AirlDiscriminator<float> airl_;
  GailDiscriminator<float> gail_;
  numerics::Adam<float> opt_;
};

/// The g part of a trained AIRL discriminator, rebuilt from an export.
class LearnedReward {
 public:
  /// Checkpoint with the g parameters and metadata {variant, gamma, spec,
  /// hidden, prefix, input_layout}.
  static numerics::Checkpoint export_g(const AirlDiscriminator<float>& disc, const ParamStore<float>& store);
  static LearnedReward from_checkpoint(const numerics::Checkpoint& ckpt);

  /// g_i per agent, B x 1.
  [[nodiscard]] std::vector<Matrix<float>> operator()(std::span<const Matrix<float>> obs,
                                                      std::span<const std::vector<int>> actions) const;

  [[nodiscard]] const GameSpec& spec() const { return spec_; }
  [[nodiscard]] DiscVariant variant() const { return variant_; }
  [[nodiscard]] double gamma() const { return gamma_; }

 private:
  GameSpec spec_;
  DiscVariant variant_ = DiscVariant::kDecentralized;
  double gamma_ = 0.0;
  ParamStore<float> store_;
  AgentScalarNets<float> g_;
};

}  // namespace madirl::discriminators
