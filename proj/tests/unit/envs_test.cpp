#include "madirl/common/errors.hpp"
#include "madirl/envs/game.hpp"
#include "madirl/envs/particle.hpp"
#include "madirl/envs/toy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

using namespace madirl;
using namespace madirl::envs;

namespace {

const std::vector<std::string> kAllIds = {"keep_away", "coop_comm", "coop_nav", "rover_tower:8",
                                          "rover_tower:12", "rover_tower:16", "toy_coop"};

std::vector<int> random_actions(const GameSpec& spec, std::mt19937_64& rng) {
  std::vector<int> a;
  for (int n : spec.n_actions) a.push_back(std::uniform_int_distribution<int>(0, n - 1)(rng));
  return a;
}

struct Trace {
  std::vector<std::vector<Observation>> obs;
  std::vector<std::vector<float>> rewards;
};

Trace rollout(Env& env, std::uint64_t seed, std::uint64_t action_seed) {
  std::mt19937_64 rng(action_seed);
  Trace t;
  t.obs.push_back(env.reset(seed));
  while (!env.done()) {
    auto r = env.step(random_actions(env.spec(), rng));
    t.obs.push_back(r.obs);
    t.rewards.push_back(r.rewards);
  }
  return t;
}

// Straight-line walker score, computed without the environment: with d cells
// to go the remaining per-step distances are d-1, d-2, ..., 0.
double toy_closed_form_score() {
  const int g = ToyCoop::kGrid;
  double total = 0.0;
  int count = 0;
  for (int ax = 0; ax < g; ++ax)
    for (int ay = 0; ay < g; ++ay)
      for (int gx = 0; gx < g; ++gx)
        for (int gy = 0; gy < g; ++gy) {
          const int d = std::abs(ax - gx) + std::abs(ay - gy);
          total += 0.5 * d * (d - 1) / 2.0;
          ++count;
        }
  const double per_agent_dist = total / count;
  return (25.0 - 2.0 * per_agent_dist / 4.0) / 25.0;
}

}  // namespace

TEST(Envs, SpecsAreWellFormed) {
  for (const auto& id : kAllIds) {
    auto env = make_env(id);
    const auto& s = env->spec();
    EXPECT_EQ(s.env_id, id);
    EXPECT_EQ(s.episode_length, 25);
    ASSERT_EQ(static_cast<int>(s.obs_dims.size()), s.n_agents);
    ASSERT_EQ(static_cast<int>(s.n_actions.size()), s.n_agents);
    ASSERT_EQ(static_cast<int>(s.roles.size()), s.n_agents);
    const auto obs = env->reset(1);
    for (int i = 0; i < s.n_agents; ++i) {
      EXPECT_EQ(static_cast<int>(obs[static_cast<std::size_t>(i)].size()), s.obs_dims[static_cast<std::size_t>(i)]) << id;
    }
    EXPECT_EQ(GameSpec::from_json(s.to_json()), s);
  }
  EXPECT_EQ(make_env("rover_tower:8")->spec().n_agents, 8);
  EXPECT_EQ(make_env("rover_tower:16")->spec().n_agents, 16);
}

TEST(Envs, UnknownIdIsConfigError) {
  EXPECT_THROW(make_env("simple_tag"), ConfigError);
  EXPECT_THROW(make_env("rover_tower:10"), ConfigError);
}

TEST(Envs, SameSeedSameTrajectory) {
  for (const auto& id : kAllIds) {
    auto a = make_env(id);
    auto b = make_env(id);
    const auto ta = rollout(*a, 42, 7);
    const auto tb = rollout(*b, 42, 7);
    EXPECT_EQ(ta.obs, tb.obs) << id;
    EXPECT_EQ(ta.rewards, tb.rewards) << id;
    const auto tc = rollout(*a, 43, 7);
    EXPECT_NE(ta.obs.front(), tc.obs.front()) << id;
  }
}

TEST(Envs, DoneAfterExactlyTwentyFiveSteps) {
  for (const auto& id : kAllIds) {
    auto env = make_env(id);
    std::mt19937_64 rng(3);
    env->reset(5);
    for (int t = 0; t < 25; ++t) {
      auto r = env->step(random_actions(env->spec(), rng));
      EXPECT_EQ(r.done, t == 24) << id << " step " << t;
    }
    EXPECT_THROW(env->step(random_actions(env->spec(), rng)), UsageError) << id;
  }
}

TEST(Envs, InvalidActionsAreRejected) {
  auto env = make_env("coop_comm");
  std::vector<int> ok{0, 0};
  EXPECT_THROW(env->step(ok), UsageError);  // before reset
  env->reset(0);
  std::vector<int> bad_speaker{3, 0};
  std::vector<int> bad_listener{0, 5};
  std::vector<int> negative{-1, 0};
  std::vector<int> too_few{0};
  EXPECT_THROW(env->step(bad_speaker), UsageError);
  EXPECT_THROW(env->step(bad_listener), UsageError);
  EXPECT_THROW(env->step(negative), UsageError);
  EXPECT_THROW(env->step(too_few), ShapeError);
  EXPECT_NO_THROW(env->step(ok));
}

TEST(Envs, PositionsStayInArenaAndRewardsBounded) {
  for (const auto& id : kAllIds) {
    auto env = make_env(id);
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int ep = 0; ep < 60; ++ep) {
      env->reset(static_cast<std::uint64_t>(ep));
      while (!env->done()) {
        auto r = env->step(random_actions(env->spec(), rng));
        for (float v : r.rewards) {
          ASSERT_TRUE(std::isfinite(v));
          worst = std::max(worst, std::abs(static_cast<double>(v)) * 25.0);
        }
        if (auto* p = dynamic_cast<ParticleEnv*>(env.get())) {
          for (const auto& q : p->world().pos) {
            ASSERT_LE(std::abs(q.x()), kArenaBound);
            ASSERT_LE(std::abs(q.y()), kArenaBound);
          }
        }
      }
    }
    EXPECT_LE(worst, env->reward_bound() + 1e-5) << id;
    if (id != "coop_nav") {
      EXPECT_LE(env->reward_bound(), 10.0) << id;
    }
  }
}

TEST(Envs, IntegrateMatchesDampedEuler) {
  WorldState w;
  w.pos = {Vec2(0.0, 0.0)};
  w.vel = {Vec2(0.2, -0.4)};
  w.movable = {true};
  std::vector<Vec2> accel{kAccel * move_direction(1)};
  integrate(w, accel);
  // v' = 0.75 v + 0.5 e_x, p' = 0.1 v'
  EXPECT_NEAR(w.vel[0].x(), 0.65, 1e-12);
  EXPECT_NEAR(w.vel[0].y(), -0.3, 1e-12);
  EXPECT_NEAR(w.pos[0].x(), 0.065, 1e-12);
  EXPECT_NEAR(w.pos[0].y(), -0.03, 1e-12);
  EXPECT_THROW(move_direction(5), UsageError);
}

TEST(CoopNav, AgentOnEveryLandmarkGivesZeroPenalty) {
  auto env = make_coop_nav();
  env->reset(9);
  auto& w = env->world();
  w.landmarks = {Vec2(-1.0, 0.0), Vec2(0.0, 1.0), Vec2(1.0, -1.0)};
  w.pos = w.landmarks;
  for (auto& v : w.vel) v.setZero();
  std::vector<int> noop{0, 0, 0};
  const auto r = env->step(noop);
  for (float v : r.rewards) EXPECT_FLOAT_EQ(v, 0.0f);
}

TEST(CoopNav, CollisionCostsOnePerPair) {
  auto env = make_coop_nav();
  env->reset(9);
  auto& w = env->world();
  w.landmarks = {Vec2(0.0, 0.0), Vec2(0.05, 0.0), Vec2(1.0, 1.0)};
  w.pos = w.landmarks;
  for (auto& v : w.vel) v.setZero();
  std::vector<int> noop{0, 0, 0};
  const auto r = env->step(noop);
  for (float v : r.rewards) EXPECT_NEAR(v * 25.0f, -1.0f, 1e-6);
}

TEST(CoopComm, OnlySpeakerSeesGoal) {
  auto env = make_coop_comm();
  const auto obs = env->reset(4);
  const int g = env->world().goal[1];
  ASSERT_EQ(obs[0].size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(obs[0][static_cast<std::size_t>(k)], k == g ? 1.0f : 0.0f);
  // Changing the goal changes the speaker view and leaves the listener view untouched.
  env->world().goal = {(g + 1) % 3, (g + 1) % 3};
  const auto obs2 = env->observe();
  EXPECT_NE(obs2[0], obs[0]);
  EXPECT_EQ(obs2[1], obs[1]);
}

TEST(CoopComm, SpeakerNeverMovesAndMessageArrivesNextStep) {
  auto env = make_coop_comm();
  env->reset(8);
  const Vec2 speaker = env->world().pos[0];
  std::mt19937_64 rng(1);
  const auto first = env->observe();
  for (int k = 8; k < 11; ++k) EXPECT_EQ(first[1][static_cast<std::size_t>(k)], 0.0f);
  while (!env->done()) {
    auto a = random_actions(env->spec(), rng);
    auto r = env->step(a);
    EXPECT_EQ(env->world().pos[0], speaker);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(r.obs[1][static_cast<std::size_t>(8 + k)], k == a[0] ? 1.0f : 0.0f);
    EXPECT_EQ(r.rewards[0], r.rewards[1]);
  }
}

TEST(KeepAway, PusherDoesNotSeeGoalAndRewardsAreOpposed) {
  auto env = make_keep_away();
  const auto obs = env->reset(2);
  env->world().goal[0] = 1 - env->world().goal[0];
  const auto obs2 = env->observe();
  EXPECT_EQ(obs2[1], obs[1]);
  EXPECT_NE(obs2[0], obs[0]);
  std::mt19937_64 rng(2);
  while (!env->done()) {
    auto r = env->step(random_actions(env->spec(), rng));
    EXPECT_EQ(r.rewards[0], -r.rewards[1]);
  }
}

TEST(KeepAway, OverlapIsResolvedByShoving) {
  auto env = make_keep_away();
  env->reset(2);
  auto& w = env->world();
  w.pos = {Vec2(0.0, 0.0), Vec2(0.05, 0.0)};
  w.vel = {Vec2(0.5, 0.0), Vec2(0.0, 0.0)};
  std::vector<int> noop{0, 0};
  env->step(noop);
  EXPECT_GE((w.pos[1] - w.pos[0]).norm(), 2.0 * kEntityRadius - 1e-12);
  // Equal-mass elastic exchange along the contact normal.
  EXPECT_NEAR(w.vel[0].x(), 0.0, 1e-12);
  EXPECT_NEAR(w.vel[1].x(), 0.375, 1e-12);
}

TEST(RoverTower, PairingIsPerfectMatching) {
  auto env = make_rover_tower(8);
  env->reset(123);
  const auto& p = env->world().pairing;
  ASSERT_EQ(p.size(), 4u);
  std::vector<int> seen(4, 0);
  for (int t : p) {
    ASSERT_GE(t, 0);
    ASSERT_LT(t, 4);
    ++seen[static_cast<std::size_t>(t)];
  }
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(RoverTower, PairingMarginalIsUniform) {
  for (int n : {8, 12, 16}) {
    auto env = make_rover_tower(n);
    const int m = n / 2;
    std::vector<int> count(static_cast<std::size_t>(m * m), 0);
    const int trials = 10000;
    for (int s = 0; s < trials; ++s) {
      env->reset(static_cast<std::uint64_t>(s) * 7919u + 1u);
      const auto& p = env->world().pairing;
      for (int r = 0; r < m; ++r) ++count[static_cast<std::size_t>(r * m + p[static_cast<std::size_t>(r)])];
    }
    for (int c : count) EXPECT_NEAR(static_cast<double>(c) / trials, 1.0 / m, 0.02) << "N=" << n;
  }
}

TEST(RoverTower, RoverLearnsGoalOnlyThroughMessages) {
  auto env = make_rover_tower(8);
  const auto obs = env->reset(31);
  auto& w = env->world();
  for (int r = 0; r < 4; ++r) w.goal[static_cast<std::size_t>(r)] = (w.goal[static_cast<std::size_t>(r)] + 1) % 4;
  const auto obs2 = env->observe();
  for (int r = 0; r < 4; ++r) EXPECT_EQ(obs2[static_cast<std::size_t>(r)], obs[static_cast<std::size_t>(r)]);

  env->reset(31);
  std::vector<int> actions(8, 0);
  for (int t = 0; t < 4; ++t) actions[static_cast<std::size_t>(4 + t)] = t;
  const auto r = env->step(actions);
  for (int rover = 0; rover < 4; ++rover) {
    const int tower = env->world().pairing[static_cast<std::size_t>(rover)];
    const auto& o = r.obs[static_cast<std::size_t>(rover)];
    for (int k = 0; k < 4; ++k) EXPECT_EQ(o[static_cast<std::size_t>(12 + k)], k == tower ? 1.0f : 0.0f);
    EXPECT_EQ(r.rewards[static_cast<std::size_t>(rover)], r.rewards[static_cast<std::size_t>(4 + tower)]);
  }
}

TEST(EpisodeScore, Examples) {
  std::vector<std::vector<float>> zeros(25, std::vector<float>(3, 0.0f));
  for (double s : episode_score(zeros, 3)) EXPECT_EQ(s, 0.0);

  const float c = 2.5f;
  std::vector<std::vector<float>> constant(25, std::vector<float>(2, c / 25.0f));
  for (double s : episode_score(constant, 2)) EXPECT_NEAR(s, c, 1e-5);

  std::vector<std::vector<float>> incomplete(24, std::vector<float>(2, 0.0f));
  EXPECT_THROW(episode_score(incomplete, 2), UsageError);
}

TEST(EpisodeScore, PermutationEquivariant) {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> n01;
  std::vector<std::vector<float>> r(25, std::vector<float>(3));
  for (auto& row : r)
    for (auto& v : row) v = n01(rng);
  const std::vector<int> perm{2, 0, 1};
  auto permuted = r;
  for (std::size_t t = 0; t < r.size(); ++t)
    for (int i = 0; i < 3; ++i) permuted[t][static_cast<std::size_t>(i)] = r[t][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  const auto a = episode_score(r, 3);
  const auto b = episode_score(permuted, 3);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(b[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
}

TEST(JointTransition, Validation) {
  auto env = make_env("toy_coop");
  JointTransition tr;
  tr.obs = env->reset(0);
  tr.actions = {1, 2};
  auto r = env->step(tr.actions);
  tr.next_obs = r.obs;
  tr.gt_rewards = r.rewards;
  tr.done = false;
  tr.step_index = 0;
  EXPECT_NO_THROW(tr.validate(env->spec()));
  auto bad = tr;
  bad.done = true;
  EXPECT_THROW(bad.validate(env->spec()), ShapeError);
  bad = tr;
  bad.actions = {1};
  EXPECT_THROW(bad.validate(env->spec()), ShapeError);
  bad = tr;
  bad.obs[0].pop_back();
  EXPECT_THROW(bad.validate(env->spec()), ShapeError);
}

TEST(ToyCoop, ObservationLayoutAndLocality) {
  ToyCoop env;
  env.reset(0);
  env.set_state({ToyCoop::Cell{0, 0}, ToyCoop::Cell{4, 2}}, {ToyCoop::Cell{1, 3}, ToyCoop::Cell{2, 2}});
  auto obs = env.observe();
  const std::vector<float> o0{-1.0f, -1.0f, 0.5f, 1.5f, 2.0f, 1.0f};
  EXPECT_EQ(obs[0], o0);
  env.set_state({ToyCoop::Cell{0, 0}, ToyCoop::Cell{4, 2}}, {ToyCoop::Cell{1, 3}, ToyCoop::Cell{0, 4}});
  EXPECT_EQ(env.observe()[0], o0);
}

TEST(ToyCoop, MovesAreBlockedAtTheBorder) {
  EXPECT_EQ(ToyCoop::move({4, 0}, 1), (ToyCoop::Cell{4, 0}));
  EXPECT_EQ(ToyCoop::move({0, 0}, 4), (ToyCoop::Cell{0, 0}));
  EXPECT_EQ(ToyCoop::move({2, 2}, 3), (ToyCoop::Cell{2, 3}));
}

TEST(ToyCoop, OptimalScoreMatchesStraightLineClosedForm) {
  ToyCoop env;
  const auto opt = toy_optimal_score(env);
  ASSERT_EQ(opt.size(), 2u);
  EXPECT_EQ(opt[0], opt[1]);
  EXPECT_NEAR(opt[0], toy_closed_form_score(), 1e-12);
}

TEST(ToyCoop, GreedyWalkerRealisesOptimalScore) {
  ToyCoop env;
  const double opt = toy_optimal_score(env)[0];
  double total = 0.0;
  const int episodes = 4000;
  for (int ep = 0; ep < episodes; ++ep) {
    auto obs = env.reset(static_cast<std::uint64_t>(ep));
    std::vector<std::vector<float>> rewards;
    while (!env.done()) {
      std::vector<int> a;
      for (const auto& o : obs) {
        if (o[2] > 0.25f) a.push_back(1);
        else if (o[2] < -0.25f) a.push_back(2);
        else if (o[3] > 0.25f) a.push_back(3);
        else if (o[3] < -0.25f) a.push_back(4);
        else a.push_back(0);
      }
      auto r = env.step(a);
      obs = r.obs;
      rewards.push_back(r.rewards);
    }
    total += episode_score(rewards, 2)[0];
  }
  EXPECT_NEAR(total / episodes, opt, 0.01);
}

TEST(ToyCoop, OptimalDominatesRandomPolicies) {
  ToyCoop env;
  const double opt = toy_optimal_score(env)[0];
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> act(0, 4);
  double best = -1e9;
  for (int p = 0; p < 1000; ++p) {
    // Deterministic table policy keyed on the relative goal offset.
    std::map<std::pair<int, int>, int> table;
    double total = 0.0;
    const int episodes = 20;
    for (int ep = 0; ep < episodes; ++ep) {
      auto obs = env.reset(rng());
      std::vector<std::vector<float>> rewards;
      while (!env.done()) {
        std::vector<int> a;
        for (const auto& o : obs) {
          const auto key = std::make_pair(static_cast<int>(std::lround(o[2] * 2)), static_cast<int>(std::lround(o[3] * 2)));
          auto it = table.find(key);
          if (it == table.end()) it = table.emplace(key, act(rng)).first;
          a.push_back(it->second);
        }
        auto r = env.step(a);
        obs = r.obs;
        rewards.push_back(r.rewards);
      }
      total += episode_score(rewards, 2)[0];
    }
    best = std::max(best, total / episodes);
  }
  EXPECT_LE(best, opt);
}

TEST(ToyCoop, OptimalScoreRejectsOtherGames) {
  auto env = make_env("coop_nav");
  EXPECT_THROW(toy_optimal_score(*env), UsageError);
}
