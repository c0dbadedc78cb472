#include "madirl/envs/toy.hpp"

#include "madirl/common/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

namespace madirl::envs {

namespace {

int manhattan(ToyCoop::Cell a, ToyCoop::Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

}  // namespace

ToyCoop::ToyCoop()
    : Env(GameSpec{"toy_coop", kAgents, {kObsDim, kObsDim}, {5, 5}, kEpisodeLength, {"walker", "walker"}}) {}

ToyCoop::Cell ToyCoop::move(Cell c, int action) {
  switch (action) {
    case 1: c.x = std::min(c.x + 1, kGrid - 1); break;
    case 2: c.x = std::max(c.x - 1, 0); break;
    case 3: c.y = std::min(c.y + 1, kGrid - 1); break;
    case 4: c.y = std::max(c.y - 1, 0); break;
    default: break;
  }
  return c;
}

void ToyCoop::set_state(const std::array<Cell, kAgents>& agents, const std::array<Cell, kAgents>& goals) {
  for (const auto& c : agents) {
    if (c.x < 0 || c.x >= kGrid || c.y < 0 || c.y >= kGrid) throw UsageError("toy_coop: agent cell outside grid");
  }
  for (const auto& c : goals) {
    if (c.x < 0 || c.x >= kGrid || c.y < 0 || c.y >= kGrid) throw UsageError("toy_coop: goal cell outside grid");
  }
  agents_ = agents;
  goals_ = goals;
}

std::vector<Observation> ToyCoop::observe() const {
  std::vector<Observation> out(kAgents);
  for (int i = 0; i < kAgents; ++i) {
    const auto& a = agents_[static_cast<std::size_t>(i)];
    const auto& g = goals_[static_cast<std::size_t>(i)];
    const auto& p = agents_[static_cast<std::size_t>(1 - i)];
    const double x = to_world(a.x);
    const double y = to_world(a.y);
    out[static_cast<std::size_t>(i)] = {static_cast<float>(x),
                                        static_cast<float>(y),
                                        static_cast<float>(to_world(g.x) - x),
                                        static_cast<float>(to_world(g.y) - y),
                                        static_cast<float>(to_world(p.x) - x),
                                        static_cast<float>(to_world(p.y) - y)};
  }
  return out;
}

void ToyCoop::reset_world(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, kGrid - 1);
  for (int i = 0; i < kAgents; ++i) {
    const int ax = u(rng);
    const int ay = u(rng);
    const int gx = u(rng);
    const int gy = u(rng);
    agents_[static_cast<std::size_t>(i)] = {ax, ay};
    goals_[static_cast<std::size_t>(i)] = {gx, gy};
  }
}

std::vector<double> ToyCoop::advance(std::span<const int> actions) {
  double dist = 0.0;
  for (int i = 0; i < kAgents; ++i) {
    auto& a = agents_[static_cast<std::size_t>(i)];
    a = move(a, actions[static_cast<std::size_t>(i)]);
    dist += manhattan(a, goals_[static_cast<std::size_t>(i)]) * kCell;
  }
  const double r = 1.0 - dist / 4.0;
  return std::vector<double>(kAgents, r);
}

std::vector<double> toy_optimal_score(const Env& env) {
  if (dynamic_cast<const ToyCoop*>(&env) == nullptr) {
    throw UsageError("toy_optimal_score: only defined for toy_coop, got " + env.spec().env_id);
  }
  // The shared reward separates into per-agent distance costs with
  // independent dynamics, so the joint optimum is the sum of single-agent
  // optima. cost[c][g] is the minimal remaining sum of distances (in cells).
  constexpr int n = ToyCoop::kGrid * ToyCoop::kGrid;
  const int horizon = env.spec().episode_length;
  auto cell_of = [](int k) { return ToyCoop::Cell{k % ToyCoop::kGrid, k / ToyCoop::kGrid}; };
  auto index_of = [](ToyCoop::Cell c) { return c.y * ToyCoop::kGrid + c.x; };

  std::vector<double> cost(n * n, 0.0);
  std::vector<double> next(n * n, 0.0);
  for (int t = horizon - 1; t >= 0; --t) {
    for (int c = 0; c < n; ++c) {
      for (int g = 0; g < n; ++g) {
        double best = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 5; ++a) {
          const auto c2 = ToyCoop::move(cell_of(c), a);
          const double v = manhattan(c2, cell_of(g)) + cost[static_cast<std::size_t>(index_of(c2) * n + g)];
          best = std::min(best, v);
        }
        next[static_cast<std::size_t>(c * n + g)] = best;
      }
    }
    std::swap(cost, next);
  }
  double mean_cost = 0.0;
  for (double v : cost) mean_cost += v;
  mean_cost /= static_cast<double>(cost.size());

  const double expected_dist_sum = ToyCoop::kAgents * mean_cost * ToyCoop::kCell;
  const double score = (horizon - expected_dist_sum / 4.0) / horizon;
  return std::vector<double>(ToyCoop::kAgents, score);
}

}  // namespace madirl::envs
