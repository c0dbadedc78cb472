#include "madirl/actors/learner.hpp"

#include "madirl/common/errors.hpp"

#include <cmath>

namespace madirl::actors {

MaacLearner::MaacLearner(GameSpec spec, MaacConfig config, std::mt19937_64& init_rng)
    : spec_(std::move(spec)), config_(config) {
  policies_ = PolicyNets<float>(policy_, spec_, init_rng, config_.hidden);
  critic_ = AttentionCritic<float>(critic_store_, spec_, init_rng, config_.hidden, config_.heads);
  target_policy_ = policy_;
  target_critic_ = critic_store_;
  policy_opt_ = numerics::Adam<float>(policy_, config_.lr_policy);
  critic_opt_ = numerics::Adam<float>(critic_store_, config_.lr_critic);
}

CriticStats MaacLearner::update_critic(const LearnBatch& batch, std::span<const Matrix<float>> rewards,
                                       std::mt19937_64& rng) {
  if (batch.size() == 0) throw UsageError("critic update on an empty batch");
  const auto y = td_targets<float>(policies_, target_policy_, critic_, target_critic_, batch.next_obs, rewards,
                                   batch.done, config_.gamma, rng);
  critic_store_.zero_grad();
  Tape<float> tape;
  auto loss = critic_loss<float>(tape, critic_, critic_store_, batch.obs, batch.actions, y);
  CriticStats stats;
  stats.loss = loss.item();
  if (!std::isfinite(stats.loss)) throw NumericError("critic loss is not finite");
  tape.backward(loss);
  stats.grad_norm = numerics::clip_grad_norm(critic_store_, config_.critic_clip);
  critic_opt_.step(critic_store_);
  return stats;
}

std::vector<double> MaacLearner::update_policies(const LearnBatch& batch, std::mt19937_64& rng) {
  if (batch.size() == 0) throw UsageError("policy update on an empty batch");
  const int n = spec_.n_agents;
  std::vector<Matrix<float>> probs;
  std::vector<std::vector<int>> sampled;
  for (int i = 0; i < n; ++i) {
    probs.push_back(policies_.probs(policy_, i, batch.obs[static_cast<std::size_t>(i)]));
    sampled.push_back(sample_rows(probs.back(), rng));
  }
  std::vector<Matrix<float>> q;
  {
    Tape<float> tape;
    std::vector<Var<float>> obs;
    for (const auto& o : batch.obs) obs.push_back(tape.constant(o));
    const auto out = critic_.forward(tape, critic_store_, obs, sampled);
    for (const auto& v : out.q) q.push_back(v.value());
  }
  policy_.zero_grad();
  std::vector<double> losses;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const auto adv = counterfactual_advantage<float>(q[k], probs[k], sampled[k]);
    Tape<float> tape;
    auto loss = policy_surrogate<float>(tape, policies_, policy_, i, batch.obs[k], sampled[k], adv,
                                        config_.entropy_coef);
    losses.push_back(loss.item());
    if (!std::isfinite(losses.back())) throw NumericError("policy loss for agent " + std::to_string(i) + " is not finite");
    tape.backward(loss);
  }
  policy_opt_.step(policy_);
  return losses;
}

void MaacLearner::update_targets() {
  soft_update(target_policy_, policy_, config_.tau_policy);
  soft_update(target_critic_, critic_store_, config_.tau_critic);
}

Matrix<float> MaacLearner::probs(int agent, const Matrix<float>& obs) const {
  return policies_.probs(policy_, agent, obs);
}

Matrix<float> MaacLearner::action_probs(int agent, const Matrix<float>& obs, std::span<const int> actions) const {
  const auto p = probs(agent, obs);
  if (static_cast<Eigen::Index>(actions.size()) != p.rows()) throw ShapeError("action_probs: batch size mismatch");
  Matrix<float> out(p.rows(), 1);
  for (Eigen::Index r = 0; r < p.rows(); ++r) out(r, 0) = p(r, actions[static_cast<std::size_t>(r)]);
  return out;
}

Matrix<float> MaacLearner::action_log_probs(int agent, const Matrix<float>& obs, std::span<const int> actions) const {
  const auto lp = policies_.log_probs(policy_, agent, obs);
  if (static_cast<Eigen::Index>(actions.size()) != lp.rows()) throw ShapeError("action_log_probs: batch size mismatch");
  Matrix<float> out(lp.rows(), 1);
  for (Eigen::Index r = 0; r < lp.rows(); ++r) out(r, 0) = lp(r, actions[static_cast<std::size_t>(r)]);
  return out;
}

std::vector<int> MaacLearner::act(const std::vector<envs::Observation>& obs, ActMode mode,
                                  std::mt19937_64& rng) const {
  const int n = spec_.n_agents;
  if (static_cast<int>(obs.size()) != n) throw ShapeError("act: expected one observation per agent");
  std::vector<int> a(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& o = obs[static_cast<std::size_t>(i)];
    if (static_cast<int>(o.size()) != spec_.obs_dims[static_cast<std::size_t>(i)]) {
      throw ShapeError("act: agent " + std::to_string(i) + " observation has wrong dimension");
    }
    const Matrix<float> x = Eigen::Map<const Matrix<float>>(o.data(), 1, static_cast<Eigen::Index>(o.size()));
    const auto p = probs(i, x);
    a[static_cast<std::size_t>(i)] =
        mode == ActMode::kArgmax ? argmax_lowest(p.data(), static_cast<int>(p.cols())) : sample_rows(p, rng)[0];
  }
  return a;
}

void MaacLearner::append_to(numerics::Checkpoint& ckpt) const {
  numerics::append_store(ckpt, policy_);
  numerics::append_store(ckpt, critic_store_);
  numerics::append_store(ckpt, target_policy_, "target/");
  numerics::append_store(ckpt, target_critic_, "target/");
}

void MaacLearner::restore_from(const numerics::Checkpoint& ckpt) {
  numerics::restore_store(ckpt, policy_);
  numerics::restore_store(ckpt, critic_store_);
  numerics::restore_store(ckpt, target_policy_, "target/");
  numerics::restore_store(ckpt, target_critic_, "target/");
}

void MaacLearner::restore_policies(const numerics::Checkpoint& ckpt) {
  numerics::restore_store(ckpt, policy_);
  target_policy_ = policy_;
}

}  // namespace madirl::actors
