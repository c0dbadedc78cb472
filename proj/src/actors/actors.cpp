#include "madirl/actors/actors.hpp"

#include "madirl/common/errors.hpp"

#include <cmath>

namespace madirl::actors {

template <typename T>
Matrix<T> one_hot(std::span<const int> actions, int n_actions) {
  Matrix<T> m = Matrix<T>::Zero(static_cast<Eigen::Index>(actions.size()), n_actions);
  for (std::size_t r = 0; r < actions.size(); ++r) {
    const int a = actions[r];
    if (a < 0 || a >= n_actions) throw ShapeError("one_hot: action " + std::to_string(a) + " out of range");
    m(static_cast<Eigen::Index>(r), a) = T(1);
  }
  return m;
}

template <typename T>
int argmax_lowest(const T* p, int n) {
  int best = 0;
  for (int k = 1; k < n; ++k) {
    if (p[k] > p[best]) best = k;
  }
  return best;
}

template <typename T>
std::vector<int> sample_rows(const Matrix<T>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  const auto n = probs.cols();
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const double u = u01(rng);
    double acc = 0.0;
    Eigen::Index pick = n - 1;
    for (Eigen::Index k = 0; k < n; ++k) {
      acc += static_cast<double>(probs(r, k));
      if (u < acc) {
        pick = k;
        break;
      }
    }
    // Guard against rounding leaving the tail with zero mass.
    while (pick > 0 && probs(r, pick) <= T(0)) --pick;
    out[static_cast<std::size_t>(r)] = static_cast<int>(pick);
  }
  return out;
}

// --- policies ----------------------------------------------------------------

template <typename T>
PolicyNets<T>::PolicyNets(ParamStore<T>& store, const GameSpec& spec, std::mt19937_64& rng, int hidden,
                          const std::string& prefix) {
  for (int i = 0; i < spec.n_agents; ++i) {
    const auto k = static_cast<std::size_t>(i);
    nets_.emplace_back(store, prefix + std::to_string(i), std::vector<int>{spec.obs_dims[k], hidden, hidden, spec.n_actions[k]},
                       rng);
  }
}

template <typename T>
Var<T> PolicyNets<T>::logits(Tape<T>& tape, ParamStore<T>& store, int agent, Var<T> obs) const {
  return nets_.at(static_cast<std::size_t>(agent)).forward(tape, store, obs);
}

template <typename T>
Matrix<T> PolicyNets<T>::probs(const ParamStore<T>& store, int agent, const Matrix<T>& obs) const {
  Matrix<T> z = nets_.at(static_cast<std::size_t>(agent)).infer(store, obs);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  return z;
}

template <typename T>
Matrix<T> PolicyNets<T>::log_probs(const ParamStore<T>& store, int agent, const Matrix<T>& obs) const {
  Matrix<T> z = nets_.at(static_cast<std::size_t>(agent)).infer(store, obs);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    row.array() -= row.maxCoeff();
    row.array() -= std::log(row.array().exp().sum());
  }
  return z;
}

// --- attention critic ----------------------------------------------------------

template <typename T>
AttentionCritic<T>::AttentionCritic(ParamStore<T>& store, const GameSpec& spec, std::mt19937_64& rng, int hidden,
                                    int heads, const std::string& prefix)
    : hidden_(hidden), n_actions_(spec.n_actions) {
  if (spec.n_agents < 2) throw ShapeError("attention critic needs at least two agents");
  if (heads <= 0 || hidden % heads != 0) throw ShapeError("attention critic: hidden width must divide into heads");
  const int attend = hidden / heads;
  for (int i = 0; i < spec.n_agents; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const std::string p = prefix + "agent" + std::to_string(i);
    sa_enc_.emplace_back(store, p + "/sa_encoder", spec.obs_dims[k] + spec.n_actions[k], hidden, true, rng);
    s_enc_.emplace_back(store, p + "/s_encoder", spec.obs_dims[k], hidden, true, rng);
  }
  for (int h = 0; h < heads; ++h) {
    const std::string p = prefix + "shared/head" + std::to_string(h);
    keys_.emplace_back(store, p + "/key", hidden, attend, false, rng);
    queries_.emplace_back(store, p + "/query", hidden, attend, false, rng);
    values_.emplace_back(store, p + "/value", hidden, attend, true, rng);
  }
  for (int i = 0; i < spec.n_agents; ++i) {
    heads_out_.emplace_back(store, prefix + "agent" + std::to_string(i) + "/head",
                            std::vector<int>{2 * hidden, hidden, spec.n_actions[static_cast<std::size_t>(i)]}, rng);
  }
}

template <typename T>
Var<T> AttentionCritic<T>::encode_state(Tape<T>& tape, ParamStore<T>& store, int agent, Var<T> obs) const {
  return leaky_relu(s_enc_.at(static_cast<std::size_t>(agent)).forward(tape, store, obs),
                    static_cast<T>(numerics::kLeakySlope));
}

template <typename T>
Var<T> AttentionCritic<T>::encode_state_action(Tape<T>& tape, ParamStore<T>& store, int agent, Var<T> obs,
                                               std::span<const int> actions) const {
  if (static_cast<Eigen::Index>(actions.size()) != obs.rows()) {
    throw ShapeError("critic: " + std::to_string(actions.size()) + " actions for " + std::to_string(obs.rows()) +
                     " observations");
  }
  std::vector<Var<T>> parts{obs, tape.constant(one_hot<T>(actions, n_actions_.at(static_cast<std::size_t>(agent))))};
  auto x = concat_cols<T>(parts);
  return leaky_relu(sa_enc_.at(static_cast<std::size_t>(agent)).forward(tape, store, x),
                    static_cast<T>(numerics::kLeakySlope));
}

template <typename T>
typename AttentionCritic<T>::Projected AttentionCritic<T>::project(Tape<T>& tape, ParamStore<T>& store,
                                                                   Var<T> sa_enc) const {
  const T slope = static_cast<T>(numerics::kLeakySlope);
  Projected p;
  for (int h = 0; h < heads(); ++h) {
    const auto k = static_cast<std::size_t>(h);
    p.keys.push_back(keys_[k].forward(tape, store, sa_enc));
    p.values.push_back(leaky_relu(values_[k].forward(tape, store, sa_enc), slope));
  }
  return p;
}

template <typename T>
Var<T> AttentionCritic<T>::attend(Tape<T>& tape, ParamStore<T>& store, Var<T> state_enc,
                                  std::span<const Var<T>> others, std::vector<Var<T>>* weights) const {
  std::vector<Projected> projected;
  for (const auto& e : others) projected.push_back(project(tape, store, e));
  std::vector<const Projected*> refs;
  for (const auto& p : projected) refs.push_back(&p);
  return attend_projected(tape, store, state_enc, refs, weights);
}

template <typename T>
Var<T> AttentionCritic<T>::attend_projected(Tape<T>& tape, ParamStore<T>& store, Var<T> state_enc,
                                            std::span<const Projected* const> others,
                                            std::vector<Var<T>>* weights) const {
  if (others.empty()) throw ShapeError("attention needs at least one other agent");
  const int n_heads = heads();
  const T inv_scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hidden_ / n_heads)));
  std::vector<Var<T>> head_out;
  if (weights != nullptr) weights->clear();
  for (int h = 0; h < n_heads; ++h) {
    const auto hk = static_cast<std::size_t>(h);
    auto q = queries_[hk].forward(tape, store, state_enc);
    std::vector<Var<T>> logits;
    for (const auto* o : others) logits.push_back(row_sum(q * o->keys[hk]));
    auto w = softmax(scale(concat_cols<T>(logits), inv_scale));
    if (weights != nullptr) weights->push_back(w);
    Var<T> acc;
    for (std::size_t j = 0; j < others.size(); ++j) {
      auto term = slice_cols(w, static_cast<int>(j), 1) * others[j]->values[hk];
      acc = j == 0 ? term : acc + term;
    }
    head_out.push_back(acc);
  }
  return concat_cols<T>(head_out);
}

template <typename T>
CriticOutput<T> AttentionCritic<T>::forward(Tape<T>& tape, ParamStore<T>& store, std::span<const Var<T>> obs,
                                            std::span<const std::vector<int>> actions) const {
  const int n = n_agents();
  if (static_cast<int>(obs.size()) != n || static_cast<int>(actions.size()) != n) {
    throw ShapeError("critic: expected inputs for " + std::to_string(n) + " agents");
  }
  // Keys and values depend only on the attended agent, so each is computed
  // once and shared by every querying agent.
  std::vector<Projected> proj(static_cast<std::size_t>(n));
  std::vector<Var<T>> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    proj[k] = project(tape, store, encode_state_action(tape, store, i, obs[k], actions[k]));
    s[k] = encode_state(tape, store, i, obs[k]);
  }
  CriticOutput<T> out;
  out.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    std::vector<const Projected*> others;
    for (int j = 0; j < n; ++j) {
      if (j != i) others.push_back(&proj[static_cast<std::size_t>(j)]);
    }
    auto g = attend_projected(tape, store, s[k], others, &out.weights[k]);
    std::vector<Var<T>> parts{s[k], g};
    out.global.push_back(g);
    out.q.push_back(heads_out_[k].forward(tape, store, concat_cols<T>(parts)));
  }
  return out;
}

// --- updates -----------------------------------------------------------------

template <typename T>
Matrix<T> counterfactual_advantage(const Matrix<T>& q, const Matrix<T>& probs, std::span<const int> actions) {
  if (q.rows() != probs.rows() || q.cols() != probs.cols() || static_cast<Eigen::Index>(actions.size()) != q.rows()) {
    throw ShapeError("counterfactual_advantage: mismatched shapes");
  }
  Matrix<T> a(q.rows(), 1);
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    const T baseline = q.row(r).dot(probs.row(r));
    a(r, 0) = q(r, actions[static_cast<std::size_t>(r)]) - baseline;
  }
  return a;
}

template <typename T>
std::vector<Matrix<T>> td_targets(const PolicyNets<T>& policies, const ParamStore<T>& target_policy,
                                  const AttentionCritic<T>& critic, ParamStore<T>& target_critic,
                                  std::span<const Matrix<T>> next_obs, std::span<const Matrix<T>> rewards,
                                  std::span<const std::uint8_t> done, double gamma, std::mt19937_64& rng) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("discount must lie in [0, 1), got " + std::to_string(gamma));
  const int n = policies.n_agents();
  if (static_cast<int>(next_obs.size()) != n || static_cast<int>(rewards.size()) != n) {
    throw ShapeError("td_targets: expected inputs for " + std::to_string(n) + " agents");
  }
  const auto b = next_obs[0].rows();
  if (static_cast<Eigen::Index>(done.size()) != b) throw ShapeError("td_targets: done flags do not match batch");
  std::vector<std::vector<int>> next_actions;
  for (int i = 0; i < n; ++i) {
    next_actions.push_back(sample_rows(policies.probs(target_policy, i, next_obs[static_cast<std::size_t>(i)]), rng));
  }
  Tape<T> tape;
  std::vector<Var<T>> obs;
  for (const auto& o : next_obs) obs.push_back(tape.constant(o));
  const auto out = critic.forward(tape, target_critic, obs, next_actions);
  std::vector<Matrix<T>> y;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (rewards[k].rows() != b || rewards[k].cols() != 1) throw ShapeError("td_targets: rewards must be B x 1");
    const auto& qv = out.q[k].value();
    Matrix<T> yi(b, 1);
    for (Eigen::Index r = 0; r < b; ++r) {
      const T boot = done[static_cast<std::size_t>(r)] != 0 ? T(0) : qv(r, next_actions[k][static_cast<std::size_t>(r)]);
      yi(r, 0) = rewards[k](r, 0) + static_cast<T>(gamma) * boot;
    }
    y.push_back(std::move(yi));
  }
  return y;
}

template <typename T>
Var<T> critic_loss(Tape<T>& tape, const AttentionCritic<T>& critic, ParamStore<T>& store,
                   std::span<const Matrix<T>> obs, std::span<const std::vector<int>> actions,
                   std::span<const Matrix<T>> targets) {
  if (obs.empty() || obs[0].rows() == 0) throw UsageError("critic update on an empty batch");
  std::vector<Var<T>> in;
  for (const auto& o : obs) in.push_back(tape.constant(o));
  const auto out = critic.forward(tape, store, in, actions);
  Var<T> loss;
  for (std::size_t i = 0; i < out.q.size(); ++i) {
    auto qa = gather(out.q[i], std::span<const int>(actions[i]));
    auto li = huber(qa, tape.constant(targets[i]), T(1));
    loss = i == 0 ? li : loss + li;
  }
  return loss;
}

template <typename T>
Var<T> policy_surrogate(Tape<T>& tape, const PolicyNets<T>& policies, ParamStore<T>& store, int agent,
                        const Matrix<T>& obs, std::span<const int> actions, const Matrix<T>& advantages,
                        double entropy_coef) {
  if (obs.rows() == 0) throw UsageError("policy update on an empty batch");
  auto z = policies.logits(tape, store, agent, tape.constant(obs));
  auto logp = log_softmax(z);
  auto p = softmax(z);
  auto taken = gather(logp, actions);
  auto pg = mean(taken * tape.constant(advantages));
  auto entropy = -mean(row_sum(p * logp));
  return -pg - scale(entropy, static_cast<T>(entropy_coef));
}

template <typename T>
void soft_update(ParamStore<T>& target, const ParamStore<T>& online, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("soft update rate must lie in (0, 1], got " + std::to_string(tau));
  if (target.size() != online.size()) throw ShapeError("soft_update: parameter sets differ");
  const T a = static_cast<T>(tau);
  for (std::size_t k = 0; k < target.size(); ++k) {
    auto& t = target.at(k);
    const auto& o = online.at(k);
    if (t.shape != o.shape) throw ShapeError("soft_update: shape mismatch at '" + target.name(k) + "'");
    if (tau == 1.0) {
      t.values = o.values;
    } else {
      t.values = (T(1) - a) * t.values + a * o.values;
    }
  }
}

template <typename T>
double mean_entropy(const Matrix<T>& probs) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    for (Eigen::Index k = 0; k < probs.cols(); ++k) {
      const double p = static_cast<double>(probs(r, k));
      if (p > 0.0) total -= p * std::log(p);
    }
  }
  return probs.rows() > 0 ? total / static_cast<double>(probs.rows()) : 0.0;
}

#define MADIRL_INSTANTIATE_ACTORS(T)                                                                            \
  template Matrix<T> one_hot<T>(std::span<const int>, int);                                                    \
  template int argmax_lowest<T>(const T*, int);                                                                \
  template std::vector<int> sample_rows<T>(const Matrix<T>&, std::mt19937_64&);                               \
  template class PolicyNets<T>;                                                                                \
  template class AttentionCritic<T>;                                                                           \
  template Matrix<T> counterfactual_advantage<T>(const Matrix<T>&, const Matrix<T>&, std::span<const int>);    \
  template std::vector<Matrix<T>> td_targets<T>(const PolicyNets<T>&, const ParamStore<T>&,                    \
                                                const AttentionCritic<T>&, ParamStore<T>&,                     \
                                                std::span<const Matrix<T>>, std::span<const Matrix<T>>,        \
                                                std::span<const std::uint8_t>, double, std::mt19937_64&);      \
  template Var<T> critic_loss<T>(Tape<T>&, const AttentionCritic<T>&, ParamStore<T>&,                          \
                                 std::span<const Matrix<T>>, std::span<const std::vector<int>>,                \
                                 std::span<const Matrix<T>>);                                                  \
  template Var<T> policy_surrogate<T>(Tape<T>&, const PolicyNets<T>&, ParamStore<T>&, int, const Matrix<T>&,   \
                                      std::span<const int>, const Matrix<T>&, double);                         \
  template void soft_update<T>(ParamStore<T>&, const ParamStore<T>&, double);                                  \
  template double mean_entropy<T>(const Matrix<T>&);

MADIRL_INSTANTIATE_ACTORS(float)
MADIRL_INSTANTIATE_ACTORS(double)

}  // namespace madirl::actors
