#include "madirl/discriminators/discriminators.hpp"

#include "madirl/actors/actors.hpp"
#include "madirl/common/errors.hpp"

#include <cmath>

namespace madirl::discriminators {

DiscVariant parse_variant(const std::string& name) {
  if (name == "dec") return DiscVariant::kDecentralized;
  if (name == "cen") return DiscVariant::kCentralized;
  if (name == "cen-obs") return DiscVariant::kCentralizedObsOnly;
  throw ConfigError("unknown discriminator variant '" + name + "' (expected dec, cen or cen-obs)");
}

std::string variant_name(DiscVariant v) {
  switch (v) {
    case DiscVariant::kDecentralized: return "dec";
    case DiscVariant::kCentralized: return "cen";
    case DiscVariant::kCentralizedObsOnly: return "cen-obs";
  }
  return "dec";
}

namespace {

template <typename T>
Matrix<T> leaky(Matrix<T> m) {
  const T slope = static_cast<T>(numerics::kLeakySlope);
  return m.array().max(m.array() * slope).matrix();
}

void check_inputs(const GameSpec& spec, std::size_t n_obs, std::size_t n_actions, bool with_actions) {
  const auto n = static_cast<std::size_t>(spec.n_agents);
  if (n_obs != n) throw ShapeError("discriminator: expected observations for " + std::to_string(n) + " agents");
  if (with_actions && n_actions != n) {
    throw ShapeError("discriminator: expected actions for " + std::to_string(n) + " agents");
  }
}

std::vector<int> input_dims(const GameSpec& spec, DiscVariant variant, bool with_actions) {
  std::vector<int> dims;
  if (variant == DiscVariant::kDecentralized) {
    for (int i = 0; i < spec.n_agents; ++i) {
      const auto k = static_cast<std::size_t>(i);
      dims.push_back(spec.obs_dims[k] + (with_actions ? spec.n_actions[k] : 0));
    }
  } else {
    int d = 0;
    for (int i = 0; i < spec.n_agents; ++i) {
      const auto k = static_cast<std::size_t>(i);
      d += spec.obs_dims[k] + (with_actions ? spec.n_actions[k] : 0);
    }
    dims.push_back(d);
  }
  return dims;
}

template <typename T>
std::vector<Var<T>> constants(Tape<T>& tape, const std::vector<Matrix<T>>& m) {
  std::vector<Var<T>> out;
  out.reserve(m.size());
  for (const auto& x : m) out.push_back(tape.constant(x));
  return out;
}

bool g_takes_actions(DiscVariant v) { return v != DiscVariant::kCentralizedObsOnly; }

}  // namespace

// --- per-agent scalar networks --------------------------------------------------

template <typename T>
AgentScalarNets<T>::AgentScalarNets(ParamStore<T>& store, const std::string& prefix, std::vector<int> in_dims,
                                    bool shared, int n_agents, int hidden, std::mt19937_64& rng)
    : shared_(shared), n_agents_(n_agents) {
  if (shared) {
    if (in_dims.size() != 1) throw ShapeError("shared scalar nets take one joint input");
    nets_.emplace_back(store, prefix + "trunk", std::vector<int>{in_dims[0], hidden, hidden}, rng);
    for (int i = 0; i < n_agents; ++i) {
      heads_.emplace_back(store, prefix + "head" + std::to_string(i), hidden, 1, true, rng);
    }
  } else {
    if (static_cast<int>(in_dims.size()) != n_agents) throw ShapeError("separate scalar nets take one input per agent");
    for (int i = 0; i < n_agents; ++i) {
      nets_.emplace_back(store, prefix + "agent" + std::to_string(i),
                         std::vector<int>{in_dims[static_cast<std::size_t>(i)], hidden, hidden, 1}, rng);
    }
  }
}

template <typename T>
std::vector<Var<T>> AgentScalarNets<T>::forward(Tape<T>& tape, ParamStore<T>& store,
                                                std::span<const Var<T>> inputs) const {
  std::vector<Var<T>> out;
  if (shared_) {
    if (inputs.size() != 1) throw ShapeError("shared scalar nets take one joint input");
    auto z = leaky_relu(nets_[0].forward(tape, store, inputs[0]), static_cast<T>(numerics::kLeakySlope));
    for (const auto& head : heads_) out.push_back(head.forward(tape, store, z));
  } else {
    if (static_cast<int>(inputs.size()) != n_agents_) throw ShapeError("separate scalar nets take one input per agent");
    for (int i = 0; i < n_agents_; ++i) {
      out.push_back(nets_[static_cast<std::size_t>(i)].forward(tape, store, inputs[static_cast<std::size_t>(i)]));
    }
  }
  return out;
}

template <typename T>
std::vector<Matrix<T>> AgentScalarNets<T>::infer(const ParamStore<T>& store, std::span<const Matrix<T>> inputs) const {
  std::vector<Matrix<T>> out;
  if (shared_) {
    if (inputs.size() != 1) throw ShapeError("shared scalar nets take one joint input");
    const Matrix<T> z = leaky(nets_[0].infer(store, inputs[0]));
    for (const auto& head : heads_) out.push_back(head.infer(store, z));
  } else {
    if (static_cast<int>(inputs.size()) != n_agents_) throw ShapeError("separate scalar nets take one input per agent");
    for (int i = 0; i < n_agents_; ++i) {
      out.push_back(nets_[static_cast<std::size_t>(i)].infer(store, inputs[static_cast<std::size_t>(i)]));
    }
  }
  return out;
}

template <typename T>
std::vector<Matrix<T>> assemble_inputs(const GameSpec& spec, DiscVariant variant, std::span<const Matrix<T>> obs,
                                       std::span<const std::vector<int>> actions, bool with_actions) {
  check_inputs(spec, obs.size(), actions.size(), with_actions);
  const auto b = obs[0].rows();
  for (int i = 0; i < spec.n_agents; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (obs[k].rows() != b || obs[k].cols() != spec.obs_dims[k]) {
      throw ShapeError("discriminator: agent " + std::to_string(i) + " observations have the wrong shape");
    }
    if (with_actions && static_cast<Eigen::Index>(actions[k].size()) != b) {
      throw ShapeError("discriminator: agent " + std::to_string(i) + " action count does not match the batch");
    }
  }
  const auto dims = input_dims(spec, variant, with_actions);
  std::vector<Matrix<T>> out;
  if (variant == DiscVariant::kDecentralized) {
    for (int i = 0; i < spec.n_agents; ++i) {
      const auto k = static_cast<std::size_t>(i);
      Matrix<T> x(b, dims[k]);
      x.leftCols(spec.obs_dims[k]) = obs[k];
      if (with_actions) x.rightCols(spec.n_actions[k]) = madirl::actors::one_hot<T>(actions[k], spec.n_actions[k]);
      out.push_back(std::move(x));
    }
  } else {
    // [o_1 .. o_N, onehot(a_1) .. onehot(a_N)]
    Matrix<T> x(b, dims[0]);
    Eigen::Index col = 0;
    for (int i = 0; i < spec.n_agents; ++i) {
      const auto k = static_cast<std::size_t>(i);
      x.middleCols(col, spec.obs_dims[k]) = obs[k];
      col += spec.obs_dims[k];
    }
    if (with_actions) {
      for (int i = 0; i < spec.n_agents; ++i) {
        const auto k = static_cast<std::size_t>(i);
        x.middleCols(col, spec.n_actions[k]) = madirl::actors::one_hot<T>(actions[k], spec.n_actions[k]);
        col += spec.n_actions[k];
      }
    }
    out.push_back(std::move(x));
  }
  return out;
}

// --- scalar identities -------------------------------------------------------------

double d_value(double f, double pi) {
  if (!(pi > 0.0)) throw NumericError("discriminator: policy probability must be positive");
  const double z = f - std::log(pi);
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double airl_reward(double f, double pi) {
  if (!(pi > 0.0)) throw NumericError("discriminator: policy probability must be positive");
  return f - std::log(pi);
}

double gail_reward(double d) {
  if (!(d > 0.0 && d <= 1.0)) throw NumericError("gail_reward: D must lie in (0, 1]");
  return std::log(d);
}

template <typename T>
Var<T> adversarial_loss(std::span<const Var<T>> expert_logits, std::span<const Var<T>> agent_logits,
                        double entropy_coef) {
  if (expert_logits.empty() || expert_logits.size() != agent_logits.size()) {
    throw ShapeError("adversarial_loss: expert and agent logits must cover the same agents");
  }
  // H(sigmoid(z)) = (1 - sigmoid(z)) z - log sigmoid(z)
  auto entropy_sum = [](Var<T> z) {
    auto one_minus = add_scalar(scale(sigmoid(z), T(-1)), T(1));
    return sum(one_minus * z - log_sigmoid(z));
  };
  Var<T> loss;
  for (std::size_t i = 0; i < expert_logits.size(); ++i) {
    const auto& ze = expert_logits[i];
    const auto& za = agent_logits[i];
    if (ze.rows() == 0 || za.rows() == 0) throw UsageError("discriminator update on an empty batch");
    auto bce = -mean(log_sigmoid(ze)) - mean(log_sigmoid(scale(za, T(-1))));
    const T total = static_cast<T>(ze.rows() + za.rows());
    auto ent = scale(entropy_sum(ze) + entropy_sum(za), T(1) / total);
    auto li = bce - scale(ent, static_cast<T>(entropy_coef));
    loss = i == 0 ? li : loss + li;
  }
  return loss;
}

// --- AIRL ---------------------------------------------------------------------------

template <typename T>
AirlDiscriminator<T>::AirlDiscriminator(ParamStore<T>& store, const GameSpec& spec, DiscVariant variant,
                                        double gamma, std::mt19937_64& rng, int hidden, const std::string& prefix)
    : spec_(spec), variant_(variant), gamma_(gamma), hidden_(hidden), prefix_(prefix) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("discriminator discount must lie in [0, 1]");
  const bool shared = variant != DiscVariant::kDecentralized;
  g_ = AgentScalarNets<T>(store, prefix + "g/", input_dims(spec, variant, g_takes_actions(variant)), shared,
                          spec.n_agents, hidden, rng);
  h_ = AgentScalarNets<T>(store, prefix + "h/", input_dims(spec, variant, false), shared, spec.n_agents, hidden, rng);
}

template <typename T>
std::vector<Var<T>> AirlDiscriminator<T>::g(Tape<T>& tape, ParamStore<T>& store, std::span<const Matrix<T>> obs,
                                            std::span<const std::vector<int>> actions) const {
  const auto x = constants(tape, assemble_inputs<T>(spec_, variant_, obs, actions, g_takes_actions(variant_)));
  return g_.forward(tape, store, x);
}

template <typename T>
std::vector<Var<T>> AirlDiscriminator<T>::h(Tape<T>& tape, ParamStore<T>& store,
                                            std::span<const Matrix<T>> obs) const {
  const auto x = constants(tape, assemble_inputs<T>(spec_, variant_, obs, {}, false));
  return h_.forward(tape, store, x);
}

template <typename T>
std::vector<Var<T>> AirlDiscriminator<T>::f(Tape<T>& tape, ParamStore<T>& store, const JointInputs<T>& in) const {
  auto gv = g(tape, store, in.obs, in.actions);
  auto h0 = h(tape, store, in.obs);
  auto h1 = h(tape, store, in.next_obs);
  std::vector<Var<T>> out;
  for (std::size_t i = 0; i < gv.size(); ++i) out.push_back(gv[i] + scale(h1[i], static_cast<T>(gamma_)) - h0[i]);
  return out;
}

template <typename T>
std::vector<Var<T>> AirlDiscriminator<T>::logits(Tape<T>& tape, ParamStore<T>& store, const JointInputs<T>& in,
                                                 std::span<const Matrix<T>> log_pi) const {
  if (static_cast<int>(log_pi.size()) != spec_.n_agents) throw ShapeError("discriminator: log pi per agent required");
  auto fv = f(tape, store, in);
  for (std::size_t i = 0; i < fv.size(); ++i) {
    if (log_pi[i].rows() != fv[i].rows() || log_pi[i].cols() != 1) throw ShapeError("discriminator: log pi must be B x 1");
    if (!log_pi[i].allFinite()) throw NumericError("discriminator: policy probability must be positive");
    fv[i] = fv[i] - tape.constant(log_pi[i]);
  }
  return fv;
}

template <typename T>
std::vector<Matrix<T>> AirlDiscriminator<T>::f_values(const ParamStore<T>& store, const JointInputs<T>& in) const {
  const auto gv = g_rewards(store, in.obs, in.actions);
  const auto x0 = assemble_inputs<T>(spec_, variant_, in.obs, {}, false);
  const auto x1 = assemble_inputs<T>(spec_, variant_, in.next_obs, {}, false);
  const auto h0 = h_.infer(store, x0);
  const auto h1 = h_.infer(store, x1);
  std::vector<Matrix<T>> out;
  for (std::size_t i = 0; i < gv.size(); ++i) out.push_back(gv[i] + static_cast<T>(gamma_) * h1[i] - h0[i]);
  return out;
}

template <typename T>
std::vector<Matrix<T>> AirlDiscriminator<T>::airl_rewards(const ParamStore<T>& store, const JointInputs<T>& in,
                                                          std::span<const Matrix<T>> log_pi) const {
  if (static_cast<int>(log_pi.size()) != spec_.n_agents) throw ShapeError("discriminator: log pi per agent required");
  auto fv = f_values(store, in);
  for (std::size_t i = 0; i < fv.size(); ++i) {
    if (log_pi[i].rows() != fv[i].rows() || log_pi[i].cols() != 1) throw ShapeError("discriminator: log pi must be B x 1");
    if (!log_pi[i].allFinite()) throw NumericError("discriminator: policy probability must be positive");
    fv[i] -= log_pi[i];
  }
  return fv;
}

template <typename T>
std::vector<Matrix<T>> AirlDiscriminator<T>::g_rewards(const ParamStore<T>& store, std::span<const Matrix<T>> obs,
                                                       std::span<const std::vector<int>> actions) const {
  return g_.infer(store, assemble_inputs<T>(spec_, variant_, obs, actions, g_takes_actions(variant_)));
}

template <typename T>
Var<T> AirlDiscriminator<T>::loss(Tape<T>& tape, ParamStore<T>& store, const JointInputs<T>& expert,
                                  std::span<const Matrix<T>> expert_log_pi, const JointInputs<T>& agent,
                                  std::span<const Matrix<T>> agent_log_pi, double entropy_coef) const {
  if (expert.size() == 0 || agent.size() == 0) throw UsageError("discriminator update on an empty batch");
  const auto ze = logits(tape, store, expert, expert_log_pi);
  const auto za = logits(tape, store, agent, agent_log_pi);
  return adversarial_loss<T>(ze, za, entropy_coef);
}

// --- GAIL ---------------------------------------------------------------------------

template <typename T>
GailDiscriminator<T>::GailDiscriminator(ParamStore<T>& store, const GameSpec& spec, DiscVariant variant,
                                        std::mt19937_64& rng, int hidden, const std::string& prefix)
    : spec_(spec), variant_(variant) {
  if (variant == DiscVariant::kCentralizedObsOnly) {
    throw ConfigError("the GAIL classifier has no observation-only variant");
  }
  d_ = AgentScalarNets<T>(store, prefix + "d/", input_dims(spec, variant, true), variant != DiscVariant::kDecentralized,
                          spec.n_agents, hidden, rng);
}

template <typename T>
std::vector<Var<T>> GailDiscriminator<T>::logits(Tape<T>& tape, ParamStore<T>& store, std::span<const Matrix<T>> obs,
                                                 std::span<const std::vector<int>> actions) const {
  return d_.forward(tape, store, constants(tape, assemble_inputs<T>(spec_, variant_, obs, actions, true)));
}

template <typename T>
std::vector<Matrix<T>> GailDiscriminator<T>::d_values(const ParamStore<T>& store, std::span<const Matrix<T>> obs,
                                                      std::span<const std::vector<int>> actions) const {
  auto z = d_.infer(store, assemble_inputs<T>(spec_, variant_, obs, actions, true));
  for (auto& m : z) m = m.unaryExpr([](T x) { return static_cast<T>(d_value(static_cast<double>(x), 1.0)); });
  return z;
}

template <typename T>
std::vector<Matrix<T>> GailDiscriminator<T>::gail_rewards(const ParamStore<T>& store, std::span<const Matrix<T>> obs,
                                                          std::span<const std::vector<int>> actions) const {
  // log sigmoid(z) = -log(1 + exp(-z)), evaluated without forming D.
  auto z = d_.infer(store, assemble_inputs<T>(spec_, variant_, obs, actions, true));
  for (auto& m : z) {
    m = m.unaryExpr([](T x) {
      const double v = static_cast<double>(x);
      return static_cast<T>(v >= 0.0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v)));
    });
  }
  return z;
}

template <typename T>
Var<T> GailDiscriminator<T>::loss(Tape<T>& tape, ParamStore<T>& store, const JointInputs<T>& expert,
                                  const JointInputs<T>& agent, double entropy_coef) const {
  if (expert.size() == 0 || agent.size() == 0) throw UsageError("discriminator update on an empty batch");
  const auto ze = logits(tape, store, expert.obs, expert.actions);
  const auto za = logits(tape, store, agent.obs, agent.actions);
  return adversarial_loss<T>(ze, za, entropy_coef);
}

template class AgentScalarNets<float>;
template class AgentScalarNets<double>;
template class AirlDiscriminator<float>;
template class AirlDiscriminator<double>;
template class GailDiscriminator<float>;
template class GailDiscriminator<double>;
template std::vector<Matrix<float>> assemble_inputs<float>(const GameSpec&, DiscVariant, std::span<const Matrix<float>>,
                                                           std::span<const std::vector<int>>, bool);
template std::vector<Matrix<double>> assemble_inputs<double>(const GameSpec&, DiscVariant,
                                                             std::span<const Matrix<double>>,
                                                             std::span<const std::vector<int>>, bool);
template Var<float> adversarial_loss<float>(std::span<const Var<float>>, std::span<const Var<float>>, double);
template Var<double> adversarial_loss<double>(std::span<const Var<double>>, std::span<const Var<double>>, double);

// --- trainer ------------------------------------------------------------------------

DiscTrainer::DiscTrainer(Kind kind, GameSpec spec, DiscVariant variant, double gamma, DiscConfig config,
                         std::mt19937_64& init_rng)
    : kind_(kind), spec_(std::move(spec)), config_(config) {
  if (!(config.lr > 0.0)) throw ConfigError("discriminator learning rate must be positive");
  if (!(config.clip > 0.0)) throw ConfigError("discriminator clip norm must be positive");
  if (kind == Kind::kAirl) {
    airl_ = AirlDiscriminator<float>(store_, spec_, variant, gamma, init_rng, config.hidden);
  } else {
    gail_ = GailDiscriminator<float>(store_, spec_, variant, init_rng, config.hidden);
  }
  opt_ = numerics::Adam<float>(store_, config.lr);
}

double DiscTrainer::update(const JointInputs<float>& expert, std::span<const Matrix<float>> expert_log_pi,
                           const JointInputs<float>& agent, std::span<const Matrix<float>> agent_log_pi) {
  store_.zero_grad();
  Tape<float> tape;
  auto loss = kind_ == Kind::kAirl
                  ? airl_.loss(tape, store_, expert, expert_log_pi, agent, agent_log_pi, config_.entropy_coef)
                  : gail_.loss(tape, store_, expert, agent, config_.entropy_coef);
  const double value = loss.item();
  if (!std::isfinite(value)) throw NumericError("discriminator loss is not finite");
  tape.backward(loss);
  numerics::clip_grad_norm(store_, config_.clip);
  opt_.step(store_);
  return value;
}

std::vector<Matrix<float>> DiscTrainer::rewards(const JointInputs<float>& in,
                                                std::span<const Matrix<float>> log_pi) const {
  return kind_ == Kind::kAirl ? airl_.airl_rewards(store_, in, log_pi) : gail_.gail_rewards(store_, in.obs, in.actions);
}

void DiscTrainer::append_to(numerics::Checkpoint& ckpt) const { numerics::append_store(ckpt, store_); }

void DiscTrainer::restore_from(const numerics::Checkpoint& ckpt) { numerics::restore_store(ckpt, store_); }

// --- learned reward export -------------------------------------------------------------

numerics::Checkpoint LearnedReward::export_g(const AirlDiscriminator<float>& disc, const ParamStore<float>& store) {
  numerics::Checkpoint ckpt;
  const std::string g_prefix = disc.prefix() + "g/";
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& name = store.name(i);
    if (name.rfind(g_prefix, 0) != 0) continue;
    const auto& p = store.at(i);
    numerics::NamedArray a;
    a.name = name;
    a.shape = p.shape;
    a.data.assign(p.values.data(), p.values.data() + p.values.size());
    ckpt.arrays.push_back(std::move(a));
  }
  if (ckpt.arrays.empty()) throw UsageError("export_g: no reward parameters under '" + g_prefix + "'");
  const bool obs_only = disc.variant() == DiscVariant::kCentralizedObsOnly;
  std::string layout;
  if (disc.variant() == DiscVariant::kDecentralized) {
    layout = "per agent i: [o_i, onehot(a_i)]";
  } else {
    layout = obs_only ? "joint: [o_1..o_N]" : "joint: [o_1..o_N, onehot(a_1)..onehot(a_N)]";
  }
  ckpt.meta = {{"kind", "airl_g"},
               {"variant", variant_name(disc.variant())},
               {"gamma", disc.gamma()},
               {"hidden", disc.hidden()},
               {"prefix", disc.prefix()},
               {"input_layout", layout},
               {"spec", disc.spec().to_json()}};
  return ckpt;
}

LearnedReward LearnedReward::from_checkpoint(const numerics::Checkpoint& ckpt) {
  if (!ckpt.meta.contains("kind") || ckpt.meta.at("kind") != "airl_g") {
    throw FormatError("checkpoint is not a learned reward export");
  }
  LearnedReward r;
  try {
    r.spec_ = GameSpec::from_json(ckpt.meta.at("spec"));
    r.variant_ = parse_variant(ckpt.meta.at("variant").get<std::string>());
    r.gamma_ = ckpt.meta.at("gamma").get<double>();
    const int hidden = ckpt.meta.at("hidden").get<int>();
    const auto prefix = ckpt.meta.at("prefix").get<std::string>();
    std::mt19937_64 unused(0);
    r.g_ = AgentScalarNets<float>(r.store_, prefix + "g/",
                                  input_dims(r.spec_, r.variant_, g_takes_actions(r.variant_)),
                                  r.variant_ != DiscVariant::kDecentralized, r.spec_.n_agents, hidden, unused);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("learned reward metadata: ") + e.what());
  }
  numerics::restore_store(ckpt, r.store_);
  return r;
}

std::vector<Matrix<float>> LearnedReward::operator()(std::span<const Matrix<float>> obs,
                                                     std::span<const std::vector<int>> actions) const {
  return g_.infer(store_, assemble_inputs<float>(spec_, variant_, obs, actions, g_takes_actions(variant_)));
}

}  // namespace madirl::discriminators
