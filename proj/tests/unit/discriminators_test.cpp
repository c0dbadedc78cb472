#include "madirl/common/errors.hpp"
#include "madirl/discriminators/discriminators.hpp"
#include "madirl/numerics/gradcheck.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace madirl;
using namespace madirl::discriminators;

namespace {

constexpr double kEps = 1e-3;
constexpr double kKinkMargin = 5 * kEps;

GameSpec small_spec(int n_agents = 2) {
  GameSpec s;
  s.env_id = "test";
  s.n_agents = n_agents;
  for (int i = 0; i < n_agents; ++i) {
    s.obs_dims.push_back(3 + i);
    s.n_actions.push_back(3);
    s.roles.push_back("agent");
  }
  return s;
}

template <typename T>
Matrix<T> random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix<T> m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = static_cast<T>(nd(rng));
  return m;
}

template <typename T>
struct Data {
  std::vector<Matrix<T>> obs;
  std::vector<Matrix<T>> next_obs;
  std::vector<std::vector<int>> actions;
  std::vector<Matrix<T>> log_pi;

  Data(const GameSpec& spec, int b, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int i = 0; i < spec.n_agents; ++i) {
      const auto d = spec.obs_dims[static_cast<std::size_t>(i)];
      obs.push_back(random_matrix<T>(b, d, rng));
      next_obs.push_back(random_matrix<T>(b, d, rng));
      std::vector<int> a(static_cast<std::size_t>(b));
      for (auto& x : a) x = std::uniform_int_distribution<int>(0, 2)(rng);
      actions.push_back(a);
      Matrix<T> lp(b, 1);
      for (Eigen::Index r = 0; r < b; ++r) lp(r, 0) = static_cast<T>(std::log(u(rng)));
      log_pi.push_back(lp);
    }
  }

  [[nodiscard]] JointInputs<T> inputs() const { return {obs, actions, next_obs}; }
};

std::vector<Matrix<double>> f_of(const AirlDiscriminator<double>& d, const ParamStore<double>& s, const Data<double>& x) {
  return d.f_values(s, x.inputs());
}

void set_h_bias(ParamStore<double>& store, DiscVariant v, int n_agents, double delta) {
  for (int i = 0; i < n_agents; ++i) {
    const std::string name = v == DiscVariant::kDecentralized
                                 ? "disc/h/agent" + std::to_string(i) + "/fc3/bias"
                                 : "disc/h/head" + std::to_string(i) + "/bias";
    const auto k = store.find(name);
    ASSERT_LT(k, store.size()) << name;
    store.at(k).values.array() += delta;
  }
}

const std::vector<DiscVariant> kAllVariants{DiscVariant::kDecentralized, DiscVariant::kCentralized,
                                            DiscVariant::kCentralizedObsOnly};

}  // namespace

// --- scalar identities ------------------------------------------------------------

TEST(AirlIdentities, RewardEqualsLogOdds) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uf(-10.0, 10.0);
  std::uniform_real_distribution<double> up(1e-4, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double f = uf(rng);
    const double pi = up(rng);
    const double d = d_value(f, pi);
    ASSERT_GT(d, 0.0);
    ASSERT_LT(d, 1.0);
    EXPECT_NEAR(airl_reward(f, pi), std::log(d) - std::log(1.0 - d), 1e-6) << "f " << f << " pi " << pi;
  }
}

TEST(AirlIdentities, WorkedExamples) {
  EXPECT_DOUBLE_EQ(airl_reward(0.0, 1.0), 0.0);
  EXPECT_NEAR(airl_reward(1.0, std::exp(-1.0)), 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(d_value(0.0, 1.0), 0.5);
  EXPECT_NEAR(d_value(std::log(0.3), 0.3), 0.5, 1e-12);
  EXPECT_GT(d_value(20.0, 0.5), 0.999999);
  EXPECT_LT(d_value(20.0, 0.5), 1.0);
  EXPECT_THROW(d_value(0.0, 0.0), NumericError);
  EXPECT_THROW(airl_reward(0.0, -0.1), NumericError);
}

TEST(AirlIdentities, MonotoneInLogitAndPolicyProbability) {
  double prev = 0.0;
  for (double f = -8.0; f <= 8.0; f += 0.25) {
    const double d = d_value(f, 0.4);
    EXPECT_GT(d, prev);
    prev = d;
  }
  prev = 1.0;
  for (double pi = 0.01; pi <= 1.0; pi += 0.01) {
    const double d = d_value(0.3, pi);
    EXPECT_LT(d, prev);
    prev = d;
  }
}

TEST(GailIdentities, LogOfD) {
  EXPECT_NEAR(gail_reward(0.5), -std::log(2.0), 1e-15);
  EXPECT_LT(gail_reward(0.999), 0.0);
  EXPECT_GT(gail_reward(0.999), gail_reward(0.99));
  EXPECT_THROW(gail_reward(0.0), NumericError);
}

// --- structure of f ----------------------------------------------------------------

TEST(AirlDiscriminator, ZeroPotentialGivesFEqualG) {
  for (auto v : kAllVariants) {
    std::mt19937_64 rng(2);
    const auto spec = small_spec();
    ParamStore<double> store;
    AirlDiscriminator<double> disc(store, spec, v, 0.995, rng, 8);
    for (std::size_t k = 0; k < store.size(); ++k) {
      if (store.name(k).rfind("disc/h/", 0) == 0) store.at(k).values.setZero();
    }
    const Data<double> x(spec, 5, rng);
    const auto f = f_of(disc, store, x);
    const auto g = disc.g_rewards(store, x.obs, x.actions);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(f[i], g[i]) << variant_name(v);
  }
}

TEST(AirlDiscriminator, UndiscountedSelfTransitionCancelsPotential) {
  for (auto v : kAllVariants) {
    std::mt19937_64 rng(3);
    const auto spec = small_spec();
    ParamStore<double> store;
    AirlDiscriminator<double> disc(store, spec, v, 1.0, rng, 8);
    Data<double> x(spec, 5, rng);
    x.next_obs = x.obs;
    const auto f = f_of(disc, store, x);
    const auto g = disc.g_rewards(store, x.obs, x.actions);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_TRUE(f[i].isApprox(g[i], 1e-12)) << variant_name(v);
  }
}

TEST(AirlDiscriminator, PotentialShiftChangesFByDiscountedConstant) {
  const double c = 2.5;
  const double gamma = 0.995;
  for (auto v : kAllVariants) {
    std::mt19937_64 rng(4);
    const auto spec = small_spec();
    ParamStore<double> store;
    AirlDiscriminator<double> disc(store, spec, v, gamma, rng, 8);
    const Data<double> x(spec, 6, rng);
    const auto f0 = f_of(disc, store, x);
    const auto g0 = disc.g_rewards(store, x.obs, x.actions);
    set_h_bias(store, v, spec.n_agents, c);
    const auto f1 = f_of(disc, store, x);
    const auto g1 = disc.g_rewards(store, x.obs, x.actions);
    for (std::size_t i = 0; i < f0.size(); ++i) {
      EXPECT_TRUE(((f1[i] - f0[i]).array() - (gamma - 1.0) * c).abs().maxCoeff() < 1e-6) << variant_name(v);
      EXPECT_EQ(g1[i], g0[i]);
    }
  }
}

TEST(AirlDiscriminator, DecentralizedIgnoresOtherAgents) {
  std::mt19937_64 rng(5);
  const auto spec = small_spec(3);
  ParamStore<double> store;
  AirlDiscriminator<double> disc(store, spec, DiscVariant::kDecentralized, 0.995, rng, 8);
  const Data<double> x(spec, 7, rng);
  Data<double> y = x;
  for (int j : {1, 2}) {
    const auto k = static_cast<std::size_t>(j);
    y.obs[k] = random_matrix<double>(7, spec.obs_dims[k], rng);
    y.next_obs[k] = random_matrix<double>(7, spec.obs_dims[k], rng);
    for (auto& a : y.actions[k]) a = (a + 1) % 3;
    y.log_pi[k].array() -= 0.7;
  }
  const auto rx = disc.airl_rewards(store, x.inputs(), x.log_pi);
  const auto ry = disc.airl_rewards(store, y.inputs(), y.log_pi);
  EXPECT_EQ(f_of(disc, store, x)[0], f_of(disc, store, y)[0]);
  EXPECT_EQ(rx[0], ry[0]);
  EXPECT_NE(rx[1], ry[1]);
}

TEST(AirlDiscriminator, ObservationOnlyRewardIgnoresActions) {
  const auto spec = small_spec();
  for (auto v : {DiscVariant::kCentralized, DiscVariant::kCentralizedObsOnly}) {
    std::mt19937_64 rng(6);
    ParamStore<double> store;
    AirlDiscriminator<double> disc(store, spec, v, 0.995, rng, 8);
    const Data<double> x(spec, 5, rng);
    auto other = x.actions;
    for (auto& per_agent : other) {
      for (auto& a : per_agent) a = (a + 2) % 3;
    }
    const auto g0 = disc.g_rewards(store, x.obs, x.actions);
    const auto g1 = disc.g_rewards(store, x.obs, other);
    if (v == DiscVariant::kCentralizedObsOnly) {
      EXPECT_EQ(g0[0], g1[0]);
      EXPECT_EQ(g0[1], g1[1]);
    } else {
      EXPECT_NE(g0[0], g1[0]);
    }
  }
}

TEST(AirlDiscriminator, CentralizedHeadsShareOneTrunk) {
  std::mt19937_64 rng(7);
  const auto spec = small_spec(3);
  ParamStore<double> store;
  AirlDiscriminator<double> disc(store, spec, DiscVariant::kCentralized, 0.995, rng, 8);
  EXPECT_LT(store.find("disc/g/trunk/fc1/weight"), store.size());
  EXPECT_EQ(store.find("disc/g/agent0/fc1/weight"), store.size());
  for (int i = 0; i < 3; ++i) EXPECT_LT(store.find("disc/g/head" + std::to_string(i) + "/weight"), store.size());
  // The joint input is every observation followed by every action one-hot.
  EXPECT_EQ(store.at(store.find("disc/g/trunk/fc1/weight")).shape, (numerics::Shape{3 + 4 + 5 + 9, 8}));
}

TEST(AirlDiscriminator, ZeroOutputLayerGivesZeroReward) {
  std::mt19937_64 rng(8);
  const auto spec = small_spec();
  ParamStore<double> store;
  AirlDiscriminator<double> disc(store, spec, DiscVariant::kDecentralized, 0.995, rng, 8);
  for (int i = 0; i < 2; ++i) {
    store.at(store.find("disc/g/agent" + std::to_string(i) + "/fc3/weight")).values.setZero();
    store.at(store.find("disc/g/agent" + std::to_string(i) + "/fc3/bias")).values.setZero();
  }
  const Data<double> x(spec, 4, rng);
  for (const auto& g : disc.g_rewards(store, x.obs, x.actions)) EXPECT_TRUE((g.array() == 0.0).all());
}

TEST(AirlDiscriminator, InputErrors) {
  std::mt19937_64 rng(9);
  const auto spec = small_spec();
  ParamStore<double> store;
  AirlDiscriminator<double> disc(store, spec, DiscVariant::kDecentralized, 0.995, rng, 8);
  Data<double> x(spec, 4, rng);
  auto bad = x;
  bad.obs.pop_back();
  EXPECT_THROW(disc.f_values(store, bad.inputs()), ShapeError);
  auto neg = x;
  neg.log_pi[0](0, 0) = -std::numeric_limits<double>::infinity();
  EXPECT_THROW(disc.airl_rewards(store, neg.inputs(), neg.log_pi), NumericError);
  Data<double> empty(spec, 0, rng);
  Tape<double> tape;
  EXPECT_THROW(disc.loss(tape, store, empty.inputs(), empty.log_pi, x.inputs(), x.log_pi, 0.01), UsageError);
  EXPECT_THROW(parse_variant("central"), ConfigError);
  EXPECT_EQ(parse_variant("cen-obs"), DiscVariant::kCentralizedObsOnly);
}

// --- objective -------------------------------------------------------------------

TEST(AdversarialLoss, SymmetricValueAtHalf) {
  for (int n : {1, 2, 5}) {
    Tape<double> tape;
    std::vector<Var<double>> ze;
    std::vector<Var<double>> za;
    for (int i = 0; i < n; ++i) {
      ze.push_back(tape.constant(Matrix<double>::Zero(9, 1)));
      za.push_back(tape.constant(Matrix<double>::Zero(9, 1)));
    }
    EXPECT_NEAR(adversarial_loss<double>(ze, za, 0.0).item(), 2.0 * n * std::log(2.0), 1e-12);
    // Binary entropy is maximal, log 2, at D = 1/2.
    EXPECT_NEAR(adversarial_loss<double>(ze, za, 0.01).item(), (2.0 - 0.01) * n * std::log(2.0), 1e-12);
    EXPECT_NEAR(adversarial_loss<double>(za, ze, 0.0).item(), adversarial_loss<double>(ze, za, 0.0).item(), 0.0);
  }
}

TEST(AdversarialLoss, GradcheckAllVariants) {
  const auto spec = small_spec();
  for (auto v : kAllVariants) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      for (std::uint64_t draw = 0;; ++draw) {
        ASSERT_LT(draw, 200u) << "no smooth instance";
        std::mt19937_64 rng(seed * 1000 + draw);
        ParamStore<double> store;
        AirlDiscriminator<double> disc(store, spec, v, 0.995, rng, 8);
        const Data<double> e(spec, 2, rng);
        const Data<double> a(spec, 2, rng);
        auto objective = [&](Tape<double>& t) {
          return disc.loss(t, store, e.inputs(), e.log_pi, a.inputs(), a.log_pi, 0.01);
        };
        Tape<double> probe;
        (void)objective(probe);
        if (numerics::kink_margin(probe) < kKinkMargin) continue;
        const auto report = numerics::gradcheck(store, objective, kEps);
        EXPECT_LT(report.max_error, 1e-4) << variant_name(v) << " seed " << seed << " " << report.worst_param;
        EXPECT_EQ(report.coordinates, static_cast<std::size_t>(store.parameter_count()));
        break;
      }
    }
  }
}

TEST(GailDiscriminator, GradcheckAndRange) {
  const auto spec = small_spec();
  for (auto v : {DiscVariant::kDecentralized, DiscVariant::kCentralized}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      for (std::uint64_t draw = 0;; ++draw) {
        ASSERT_LT(draw, 200u) << "no smooth instance";
        std::mt19937_64 rng(seed * 1000 + draw + 77);
        ParamStore<double> store;
        GailDiscriminator<double> disc(store, spec, v, rng, 8);
        const Data<double> e(spec, 2, rng);
        const Data<double> a(spec, 2, rng);
        auto objective = [&](Tape<double>& t) { return disc.loss(t, store, e.inputs(), a.inputs(), 0.01); };
        Tape<double> probe;
        (void)objective(probe);
        if (numerics::kink_margin(probe) < kKinkMargin) continue;
        const auto report = numerics::gradcheck(store, objective, kEps);
        EXPECT_LT(report.max_error, 1e-4) << variant_name(v) << " seed " << seed << " " << report.worst_param;
        const auto d = disc.d_values(store, e.obs, e.actions);
        const auto r = disc.gail_rewards(store, e.obs, e.actions);
        for (std::size_t i = 0; i < d.size(); ++i) {
          EXPECT_TRUE((d[i].array() > 0.0).all() && (d[i].array() < 1.0).all());
          EXPECT_TRUE((r[i].array() < 0.0).all());
          EXPECT_TRUE(r[i].isApprox(d[i].array().log().matrix(), 1e-12));
        }
        break;
      }
    }
  }
  ParamStore<double> store;
  std::mt19937_64 rng(0);
  EXPECT_THROW(GailDiscriminator<double>(store, spec, DiscVariant::kCentralizedObsOnly, rng), ConfigError);
}

// --- training ----------------------------------------------------------------------

namespace {

// Expert and agent samples differ in the sign of every agent's first
// observation coordinate, so a linear boundary separates them.
Data<float> separable(const GameSpec& spec, int b, float side, std::mt19937_64& rng) {
  Data<float> d(spec, b, rng);
  for (int i = 0; i < spec.n_agents; ++i) {
    const auto k = static_cast<std::size_t>(i);
    d.obs[k] *= 0.3f;
    d.next_obs[k] *= 0.3f;
    d.obs[k].col(0).array() += side;
    d.next_obs[k].col(0).array() += side;
    d.log_pi[k].setConstant(std::log(1.0f / 3.0f));
  }
  return d;
}

}  // namespace

TEST(DiscTrainer, SeparatesSeparableData) {
  const auto spec = small_spec();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (auto kind : {DiscTrainer::Kind::kAirl, DiscTrainer::Kind::kGail}) {
      std::mt19937_64 rng(seed);
      DiscTrainer trainer(kind, spec, DiscVariant::kDecentralized, 0.995, {}, rng);
      for (int step = 0; step < 500; ++step) {
        const auto e = separable(spec, 64, 1.0f, rng);
        const auto a = separable(spec, 64, -1.0f, rng);
        trainer.update(e.inputs(), e.log_pi, a.inputs(), a.log_pi);
      }
      const auto e = separable(spec, 1000, 1.0f, rng);
      const auto a = separable(spec, 1000, -1.0f, rng);
      const auto re = trainer.rewards(e.inputs(), e.log_pi);
      const auto ra = trainer.rewards(a.inputs(), a.log_pi);
      for (int i = 0; i < spec.n_agents; ++i) {
        const auto k = static_cast<std::size_t>(i);
        auto mean_d = [&](const Matrix<float>& r) {
          double s = 0.0;
          for (Eigen::Index j = 0; j < r.rows(); ++j) {
            // AIRL rewards are logits of D; GAIL rewards are log D.
            s += kind == DiscTrainer::Kind::kAirl ? d_value(r(j, 0), 1.0) : std::exp(static_cast<double>(r(j, 0)));
          }
          return s / static_cast<double>(r.rows());
        };
        EXPECT_GT(mean_d(re[k]), 0.7) << "seed " << seed;
        EXPECT_LT(mean_d(ra[k]), 0.3) << "seed " << seed;
      }
    }
  }
}

TEST(DiscTrainer, EmptyBatchIsRejected) {
  const auto spec = small_spec();
  std::mt19937_64 rng(0);
  DiscTrainer trainer(DiscTrainer::Kind::kAirl, spec, DiscVariant::kDecentralized, 0.995, {}, rng);
  const Data<float> full(spec, 3, rng);
  const Data<float> empty(spec, 0, rng);
  EXPECT_THROW(trainer.update(empty.inputs(), empty.log_pi, full.inputs(), full.log_pi), UsageError);
}

// --- reward export -------------------------------------------------------------------

TEST(LearnedReward, ExportRebuildsGExactly) {
  for (auto v : kAllVariants) {
    const auto spec = small_spec(3);
    std::mt19937_64 rng(11);
    DiscTrainer trainer(DiscTrainer::Kind::kAirl, spec, v, 0.99, {}, rng);
    const auto ckpt = LearnedReward::export_g(trainer.airl(), trainer.params());
    for (const auto& a : ckpt.arrays) EXPECT_EQ(a.name.rfind("disc/g/", 0), 0u) << a.name;
    const auto bytes = numerics::encode_checkpoint(ckpt);
    const auto reward = LearnedReward::from_checkpoint(numerics::decode_checkpoint(bytes));
    EXPECT_EQ(reward.variant(), v);
    EXPECT_EQ(reward.gamma(), 0.99);
    EXPECT_EQ(reward.spec(), spec);
    const Data<float> x(spec, 8, rng);
    const auto expected = trainer.airl().g_rewards(trainer.params(), x.obs, x.actions);
    const auto got = reward(x.obs, x.actions);
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(got[i], expected[i]) << variant_name(v);
  }
  numerics::Checkpoint junk;
  EXPECT_THROW(LearnedReward::from_checkpoint(junk), FormatError);
}
