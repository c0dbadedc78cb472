#pragma once

#include "madirl/envs/game.hpp"
#include "madirl/numerics/array.hpp"
#include "madirl/numerics/layers.hpp"
#include "madirl/numerics/tape.hpp"

#include <random>
#include <span>
#include <string>
#include <vector>

namespace madirl::actors {

using envs::GameSpec;
using numerics::Matrix;
using numerics::Mlp;
using numerics::Linear;
using numerics::ParamStore;
using numerics::Tape;
using numerics::Var;

inline constexpr int kHidden = 128;
inline constexpr int kHeads = 4;

enum class ActMode { kSample, kArgmax };

template <typename T>
Matrix<T> one_hot(std::span<const int> actions, int n_actions);

/// Index of the largest entry, lowest index on ties.
template <typename T>
int argmax_lowest(const T* p, int n);

/// One categorical draw per row of `probs` by inverse CDF on a uniform variate.
template <typename T>
std::vector<int> sample_rows(const Matrix<T>& probs, std::mt19937_64& rng);

/// Per-agent policies obs -> 128 -> 128 -> n_actions logits.
/// Parameters are named "{prefix}{i}/fc{k}/{weight|bias}".
template <typename T>
class PolicyNets {
 public:
  PolicyNets() = default;
  PolicyNets(ParamStore<T>& store, const GameSpec& spec, std::mt19937_64& rng, int hidden = kHidden,
             const std::string& prefix = "policy/");

  Var<T> logits(Tape<T>& tape, ParamStore<T>& store, int agent, Var<T> obs) const;
  [[nodiscard]] Matrix<T> probs(const ParamStore<T>& store, int agent, const Matrix<T>& obs) const;
  /// log pi(. | o) by a max-shifted log-sum-exp, finite even where probs underflow.
  [[nodiscard]] Matrix<T> log_probs(const ParamStore<T>& store, int agent, const Matrix<T>& obs) const;

  [[nodiscard]] int n_agents() const { return static_cast<int>(nets_.size()); }
  [[nodiscard]] int n_actions(int agent) const { return nets_.at(static_cast<std::size_t>(agent)).out(); }
  [[nodiscard]] const Mlp<T>& net(int agent) const { return nets_.at(static_cast<std::size_t>(agent)); }

 private:
  std::vector<Mlp<T>> nets_;
};

template <typename T>
struct CriticOutput {
  /// q[i] is B x n_actions_i: values of every action of agent i with the
  /// other agents' actions held at their inputs.
  std::vector<Var<T>> q;
  /// global[i] is the attention summary over agents j != i, B x hidden.
  std::vector<Var<T>> global;
  /// weights[i][h] is B x (N-1), other agents in increasing index order.
  std::vector<std::vector<Var<T>>> weights;
};

/// Attention critic. Per agent i: a state-action encoder over (o_i, onehot a_i)
/// and a state encoder over o_i, both 128 wide with LeakyReLU, and a head
/// f_i: [state encoding, global] -> 128 -> n_actions_i. Shared by all agents:
/// per attention head a key map and a query map (no bias) and a value map
/// (bias, LeakyReLU), each 128 -> 128 / H. Queries come from the state
/// encoding, keys and values from the other agents' state-action encodings,
/// and logits are scaled by 1/sqrt(128 / H).
template <typename T>
class AttentionCritic {
 public:
  AttentionCritic() = default;
  AttentionCritic(ParamStore<T>& store, const GameSpec& spec, std::mt19937_64& rng, int hidden = kHidden,
                  int heads = kHeads, const std::string& prefix = "critic/");

  CriticOutput<T> forward(Tape<T>& tape, ParamStore<T>& store, std::span<const Var<T>> obs,
                          std::span<const std::vector<int>> actions) const;

  Var<T> encode_state(Tape<T>& tape, ParamStore<T>& store, int agent, Var<T> obs) const;
  Var<T> encode_state_action(Tape<T>& tape, ParamStore<T>& store, int agent, Var<T> obs,
                             std::span<const int> actions) const;
  /// Attention summary for one querying agent over an arbitrary list of other
  /// agents' state-action encodings. Optionally returns per-head weights.
  Var<T> attend(Tape<T>& tape, ParamStore<T>& store, Var<T> state_enc, std::span<const Var<T>> others,
                std::vector<Var<T>>* weights = nullptr) const;

  [[nodiscard]] int n_agents() const { return static_cast<int>(heads_out_.size()); }
  [[nodiscard]] int heads() const { return static_cast<int>(keys_.size()); }
  [[nodiscard]] int hidden() const { return hidden_; }
  [[nodiscard]] const Linear<T>& key(int h) const { return keys_.at(static_cast<std::size_t>(h)); }
  [[nodiscard]] const Linear<T>& query(int h) const { return queries_.at(static_cast<std::size_t>(h)); }
  [[nodiscard]] const Linear<T>& value(int h) const { return values_.at(static_cast<std::size_t>(h)); }

 private:
  struct Projected {
    std::vector<Var<T>> keys;    // per head
    std::vector<Var<T>> values;  // per head, after LeakyReLU
  };
  Projected project(Tape<T>& tape, ParamStore<T>& store, Var<T> sa_enc) const;
  Var<T> attend_projected(Tape<T>& tape, ParamStore<T>& store, Var<T> state_enc,
                          std::span<const Projected* const> others, std::vector<Var<T>>* weights) const;

  int hidden_ = kHidden;
  std::vector<int> n_actions_;
  std::vector<Linear<T>> sa_enc_;
  std::vector<Linear<T>> s_enc_;
  std::vector<Linear<T>> keys_;
  std::vector<Linear<T>> queries_;
  std::vector<Linear<T>> values_;
  std::vector<Mlp<T>> heads_out_;
};

/// A = Q(a) - sum_a' pi(a') Q(a') per row; q and probs are B x A.
template <typename T>
Matrix<T> counterfactual_advantage(const Matrix<T>& q, const Matrix<T>& probs, std::span<const int> actions);

/// y_i = r_i + gamma * Q'_i(o', a'), a' one joint draw from the target
/// policies; rows with done set use y_i = r_i. Each result is B x 1.
template <typename T>
std::vector<Matrix<T>> td_targets(const PolicyNets<T>& policies, const ParamStore<T>& target_policy,
                                  const AttentionCritic<T>& critic, ParamStore<T>& target_critic,
                                  std::span<const Matrix<T>> next_obs, std::span<const Matrix<T>> rewards,
                                  std::span<const std::uint8_t> done, double gamma, std::mt19937_64& rng);

/// Sum over agents of the batch-mean Huber(Q_i(o, a), y_i), delta 1.
template <typename T>
Var<T> critic_loss(Tape<T>& tape, const AttentionCritic<T>& critic, ParamStore<T>& store,
                   std::span<const Matrix<T>> obs, std::span<const std::vector<int>> actions,
                   std::span<const Matrix<T>> targets);

/// -mean(log pi(a|o) * A) - entropy_coef * mean(H(pi(.|o))) for one agent,
/// with A a constant B x 1 array.
template <typename T>
Var<T> policy_surrogate(Tape<T>& tape, const PolicyNets<T>& policies, ParamStore<T>& store, int agent,
                        const Matrix<T>& obs, std::span<const int> actions, const Matrix<T>& advantages,
                        double entropy_coef);

/// target <- (1 - tau) target + tau online, element-wise over all parameters.
template <typename T>
void soft_update(ParamStore<T>& target, const ParamStore<T>& online, double tau);

/// Mean row entropy of a B x A probability array.
template <typename T>
double mean_entropy(const Matrix<T>& probs);

}  // namespace madirl::actors
