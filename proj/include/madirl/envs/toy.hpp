#pragma once

#include "madirl/envs/game.hpp"

#include <array>

namespace madirl::envs {

/// Two agents on a 5x5 grid, each walking to its own goal cell. Both receive
/// the shared reward 1 - (d_1 + d_2) / 4, where d_i is agent i's Manhattan
/// distance to its goal in world units (cell size 0.5) after the move.
///
/// o_i = [x_i, y_i, gx_i - x_i, gy_i - y_i, x_j - x_i, y_j - y_i].
class ToyCoop final : public Env {
 public:
  static constexpr int kGrid = 5;
  static constexpr double kCell = 0.5;
  static constexpr int kAgents = 2;
  static constexpr int kObsDim = 6;

  struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
  };

  ToyCoop();

  [[nodiscard]] std::vector<Observation> observe() const override;
  [[nodiscard]] double reward_bound() const override { return 1.0; }

  [[nodiscard]] const std::array<Cell, kAgents>& agents() const { return agents_; }
  [[nodiscard]] const std::array<Cell, kAgents>& goals() const { return goals_; }
  /// Places agents and goals directly (tests and scripted rollouts).
  void set_state(const std::array<Cell, kAgents>& agents, const std::array<Cell, kAgents>& goals);

  static Cell move(Cell c, int action);
  static double to_world(int coord) { return (coord - kGrid / 2) * kCell; }

 protected:
  void reset_world(std::mt19937_64& rng) override;
  std::vector<double> advance(std::span<const int> actions) override;

 private:
  std::array<Cell, kAgents> agents_{};
  std::array<Cell, kAgents> goals_{};
};

/// Expected per-agent score of the optimal joint policy under the reset
/// distribution, by exact finite-horizon dynamic programming. Throws
/// UsageError for any environment other than toy_coop.
std::vector<double> toy_optimal_score(const Env& env);

}  // namespace madirl::envs
