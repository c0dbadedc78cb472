#include "madirl/envs/particle.hpp"

#include "madirl/common/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace madirl::envs {

namespace {

const double kDiagonal = 2.0 * kArenaBound * std::sqrt(2.0);

Vec2 uniform_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-kArenaBound, kArenaBound);
  const double x = u(rng);
  const double y = u(rng);
  return {x, y};
}

void push_vec(Observation& o, const Vec2& v) {
  o.push_back(static_cast<float>(v.x()));
  o.push_back(static_cast<float>(v.y()));
}

void push_one_hot(Observation& o, int index, int n) {
  for (int k = 0; k < n; ++k) o.push_back(k == index ? 1.0f : 0.0f);
}

void reset_agents(WorldState& w, int n, std::mt19937_64& rng) {
  w.pos.resize(static_cast<std::size_t>(n));
  for (auto& p : w.pos) p = uniform_point(rng);
  w.vel.assign(static_cast<std::size_t>(n), Vec2::Zero());
  w.movable.assign(static_cast<std::size_t>(n), true);
  w.goal.assign(static_cast<std::size_t>(n), -1);
  w.inbox.assign(static_cast<std::size_t>(n), -1);
  w.pairing.clear();
}

void reset_landmarks(WorldState& w, int n, std::mt19937_64& rng) {
  w.landmarks.resize(static_cast<std::size_t>(n));
  for (auto& l : w.landmarks) l = uniform_point(rng);
}

std::vector<Vec2> movement_accel(std::span<const int> actions, const WorldState& w) {
  std::vector<Vec2> accel(actions.size(), Vec2::Zero());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (w.movable[i]) accel[i] = kAccel * move_direction(actions[i]);
  }
  return accel;
}

// ---------------------------------------------------------------------------

class CoopComm final : public ParticleEnv {
 public:
  static constexpr int kLandmarks = 3;

  CoopComm()
      : ParticleEnv(GameSpec{"coop_comm", 2, {kLandmarks, 2 + 2 * kLandmarks + kLandmarks},
                             {kLandmarks, kMoveActions}, kEpisodeLength, {"speaker", "listener"}}) {}

  [[nodiscard]] std::vector<Observation> observe() const override {
    const auto& w = world_;
    Observation speaker;
    push_one_hot(speaker, w.goal[0], kLandmarks);
    Observation listener;
    push_vec(listener, w.vel[1]);
    for (const auto& l : w.landmarks) push_vec(listener, l - w.pos[1]);
    push_one_hot(listener, w.inbox[1], kLandmarks);
    return {speaker, listener};
  }

  [[nodiscard]] double reward_bound() const override { return kDiagonal; }

 protected:
  void reset_world(std::mt19937_64& rng) override {
    reset_agents(world_, 2, rng);
    world_.movable[0] = false;
    reset_landmarks(world_, kLandmarks, rng);
    const int g = std::uniform_int_distribution<int>(0, kLandmarks - 1)(rng);
    world_.goal = {g, g};
  }

  std::vector<double> advance(std::span<const int> actions) override {
    std::vector<int> move{0, actions[1]};
    integrate(world_, movement_accel(move, world_));
    world_.inbox[1] = actions[0];
    const double d = (world_.pos[1] - world_.landmarks[static_cast<std::size_t>(world_.goal[1])]).norm();
    return {-d, -d};
  }
};

// ---------------------------------------------------------------------------

class CoopNav final : public ParticleEnv {
 public:
  static constexpr int kAgents = 3;
  static constexpr int kLandmarks = 3;
  static constexpr int kObs = 4 + 2 * kLandmarks + 2 * (kAgents - 1);

  CoopNav()
      : ParticleEnv(GameSpec{"coop_nav", kAgents, {kObs, kObs, kObs}, {kMoveActions, kMoveActions, kMoveActions},
                             kEpisodeLength, {"agent", "agent", "agent"}}) {}

  [[nodiscard]] std::vector<Observation> observe() const override {
    const auto& w = world_;
    std::vector<Observation> out(kAgents);
    for (int i = 0; i < kAgents; ++i) {
      auto& o = out[static_cast<std::size_t>(i)];
      const auto& p = w.pos[static_cast<std::size_t>(i)];
      push_vec(o, w.vel[static_cast<std::size_t>(i)]);
      push_vec(o, p);
      for (const auto& l : w.landmarks) push_vec(o, l - p);
      for (int j = 0; j < kAgents; ++j) {
        if (j != i) push_vec(o, w.pos[static_cast<std::size_t>(j)] - p);
      }
    }
    return out;
  }

  // Every landmark at the arena diagonal from every agent plus all pairs colliding.
  [[nodiscard]] double reward_bound() const override { return kLandmarks * kDiagonal + 3.0; }

 protected:
  void reset_world(std::mt19937_64& rng) override {
    reset_agents(world_, kAgents, rng);
    reset_landmarks(world_, kLandmarks, rng);
  }

  std::vector<double> advance(std::span<const int> actions) override {
    integrate(world_, movement_accel(actions, world_));
    const auto& w = world_;
    double r = 0.0;
    for (const auto& l : w.landmarks) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : w.pos) best = std::min(best, (p - l).norm());
      r -= best;
    }
    for (int i = 0; i < kAgents; ++i) {
      for (int j = i + 1; j < kAgents; ++j) {
        if ((w.pos[static_cast<std::size_t>(i)] - w.pos[static_cast<std::size_t>(j)]).norm() < 2.0 * kEntityRadius) {
          r -= 1.0;
        }
      }
    }
    return std::vector<double>(kAgents, r);
  }
};

// ---------------------------------------------------------------------------

class KeepAway final : public ParticleEnv {
 public:
  static constexpr int kLandmarks = 2;

  KeepAway()
      : ParticleEnv(GameSpec{"keep_away", 2, {2 + 2 + 2 * kLandmarks + 2, 2 + 2 * kLandmarks + 2},
                             {kMoveActions, kMoveActions}, kEpisodeLength, {"reacher", "pusher"}}) {}

  [[nodiscard]] std::vector<Observation> observe() const override {
    const auto& w = world_;
    Observation reacher;
    push_vec(reacher, w.vel[0]);
    push_vec(reacher, w.landmarks[static_cast<std::size_t>(w.goal[0])] - w.pos[0]);
    for (const auto& l : w.landmarks) push_vec(reacher, l - w.pos[0]);
    push_vec(reacher, w.pos[1] - w.pos[0]);
    Observation pusher;
    push_vec(pusher, w.vel[1]);
    for (const auto& l : w.landmarks) push_vec(pusher, l - w.pos[1]);
    push_vec(pusher, w.pos[0] - w.pos[1]);
    return {reacher, pusher};
  }

  [[nodiscard]] double reward_bound() const override { return kDiagonal; }

 protected:
  void reset_world(std::mt19937_64& rng) override {
    reset_agents(world_, 2, rng);
    reset_landmarks(world_, kLandmarks, rng);
    world_.goal[0] = std::uniform_int_distribution<int>(0, kLandmarks - 1)(rng);
  }

  std::vector<double> advance(std::span<const int> actions) override {
    integrate(world_, movement_accel(actions, world_));
    shove(world_, 0, 1);
    const double d = (world_.pos[0] - world_.landmarks[static_cast<std::size_t>(world_.goal[0])]).norm();
    return {-d, d};
  }
};

// ---------------------------------------------------------------------------

class RoverTower final : public ParticleEnv {
 public:
  explicit RoverTower(int n_agents) : ParticleEnv(make_spec(n_agents)), pairs_(n_agents / 2) {}

  [[nodiscard]] std::vector<Observation> observe() const override {
    const auto& w = world_;
    std::vector<Observation> out(static_cast<std::size_t>(2 * pairs_));
    for (int r = 0; r < pairs_; ++r) {
      auto& o = out[static_cast<std::size_t>(r)];
      const auto& p = w.pos[static_cast<std::size_t>(r)];
      push_vec(o, w.vel[static_cast<std::size_t>(r)]);
      push_vec(o, p);
      for (const auto& l : w.landmarks) push_vec(o, l - p);
      push_one_hot(o, w.inbox[static_cast<std::size_t>(r)], pairs_);
    }
    for (int r = 0; r < pairs_; ++r) {
      const int t = w.pairing[static_cast<std::size_t>(r)];
      auto& o = out[static_cast<std::size_t>(pairs_ + t)];
      const int g = w.goal[static_cast<std::size_t>(pairs_ + t)];
      push_one_hot(o, g, pairs_);
      push_vec(o, w.landmarks[static_cast<std::size_t>(g)] - w.pos[static_cast<std::size_t>(r)]);
    }
    return out;
  }

  [[nodiscard]] double reward_bound() const override { return kDiagonal; }

 protected:
  void reset_world(std::mt19937_64& rng) override {
    const int n = 2 * pairs_;
    reset_agents(world_, n, rng);
    for (int t = 0; t < pairs_; ++t) world_.movable[static_cast<std::size_t>(pairs_ + t)] = false;
    reset_landmarks(world_, pairs_, rng);
    world_.pairing.resize(static_cast<std::size_t>(pairs_));
    std::iota(world_.pairing.begin(), world_.pairing.end(), 0);
    std::shuffle(world_.pairing.begin(), world_.pairing.end(), rng);
    std::uniform_int_distribution<int> pick(0, pairs_ - 1);
    for (int t = 0; t < pairs_; ++t) world_.goal[static_cast<std::size_t>(pairs_ + t)] = pick(rng);
    for (int r = 0; r < pairs_; ++r) {
      world_.goal[static_cast<std::size_t>(r)] =
          world_.goal[static_cast<std::size_t>(pairs_ + world_.pairing[static_cast<std::size_t>(r)])];
    }
  }

  std::vector<double> advance(std::span<const int> actions) override {
    integrate(world_, movement_accel(actions, world_));
    std::vector<double> rewards(static_cast<std::size_t>(2 * pairs_), 0.0);
    for (int r = 0; r < pairs_; ++r) {
      const int t = world_.pairing[static_cast<std::size_t>(r)];
      world_.inbox[static_cast<std::size_t>(r)] = actions[static_cast<std::size_t>(pairs_ + t)];
      const auto& goal = world_.landmarks[static_cast<std::size_t>(world_.goal[static_cast<std::size_t>(r)])];
      const double d = (world_.pos[static_cast<std::size_t>(r)] - goal).norm();
      rewards[static_cast<std::size_t>(r)] = -d;
      rewards[static_cast<std::size_t>(pairs_ + t)] = -d;
    }
    return rewards;
  }

 private:
  static GameSpec make_spec(int n_agents) {
    if (n_agents < 2 || n_agents % 2 != 0) {
      throw ConfigError("rover_tower: agent count must be a positive even number, got " + std::to_string(n_agents));
    }
    const int m = n_agents / 2;
    GameSpec s;
    s.env_id = "rover_tower:" + std::to_string(n_agents);
    s.n_agents = n_agents;
    for (int i = 0; i < m; ++i) {
      s.obs_dims.push_back(4 + 3 * m);
      s.n_actions.push_back(kMoveActions);
      s.roles.emplace_back("rover");
    }
    for (int i = 0; i < m; ++i) {
      s.obs_dims.push_back(m + 2);
      s.n_actions.push_back(m);
      s.roles.emplace_back("tower");
    }
    return s;
  }

  int pairs_;
};

}  // namespace

Vec2 move_direction(int action) {
  switch (action) {
    case 0: return {0.0, 0.0};
    case 1: return {1.0, 0.0};
    case 2: return {-1.0, 0.0};
    case 3: return {0.0, 1.0};
    case 4: return {0.0, -1.0};
    default: throw UsageError("move_direction: action " + std::to_string(action) + " out of range");
  }
}

void integrate(WorldState& w, std::span<const Vec2> accel) {
  for (std::size_t i = 0; i < w.pos.size(); ++i) {
    if (!w.movable[i]) continue;
    w.vel[i] = w.vel[i] * (1.0 - kDamping) + accel[i] * kDt;
    w.pos[i] += w.vel[i] * kDt;
    for (int k = 0; k < 2; ++k) {
      if (std::abs(w.pos[i][k]) > kArenaBound) {
        w.pos[i][k] = std::clamp(w.pos[i][k], -kArenaBound, kArenaBound);
        w.vel[i][k] = 0.0;
      }
    }
  }
}

bool shove(WorldState& w, int a, int b) {
  auto& pa = w.pos[static_cast<std::size_t>(a)];
  auto& pb = w.pos[static_cast<std::size_t>(b)];
  Vec2 delta = pb - pa;
  const double dist = delta.norm();
  const double min_dist = 2.0 * kEntityRadius;
  if (dist >= min_dist) return false;
  const Vec2 n = dist > 1e-12 ? Vec2(delta / dist) : Vec2(1.0, 0.0);
  const double push = 0.5 * (min_dist - dist);
  pa -= push * n;
  pb += push * n;
  auto& va = w.vel[static_cast<std::size_t>(a)];
  auto& vb = w.vel[static_cast<std::size_t>(b)];
  const double ua = va.dot(n);
  const double ub = vb.dot(n);
  va += (ub - ua) * n;
  vb += (ua - ub) * n;
  for (auto* p : {&pa, &pb}) {
    for (int k = 0; k < 2; ++k) (*p)[k] = std::clamp((*p)[k], -kArenaBound, kArenaBound);
  }
  return true;
}

std::unique_ptr<ParticleEnv> make_coop_comm() { return std::make_unique<CoopComm>(); }
std::unique_ptr<ParticleEnv> make_coop_nav() { return std::make_unique<CoopNav>(); }
std::unique_ptr<ParticleEnv> make_keep_away() { return std::make_unique<KeepAway>(); }
std::unique_ptr<ParticleEnv> make_rover_tower(int n_agents) { return std::make_unique<RoverTower>(n_agents); }

}  // namespace madirl::envs
