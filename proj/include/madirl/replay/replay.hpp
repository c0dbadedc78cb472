#pragma once

#include "madirl/envs/game.hpp"
#include "madirl/numerics/array.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <random>
#include <vector>

namespace madirl::replay {

using envs::GameSpec;
using envs::JointTransition;
using numerics::Matrix;

inline constexpr std::size_t kDefaultCapacity = 1'250'000;

/// A sampled minibatch laid out per agent: obs[i] is B x obs_dim_i.
struct Batch {
  int size = 0;
  std::vector<Matrix<float>> obs;
  std::vector<Matrix<float>> next_obs;
  std::vector<std::vector<int>> actions;
  std::vector<std::vector<float>> gt_rewards;
  std::vector<std::uint8_t> done;
};

/// FIFO ring buffer of joint transitions. Storage is flat per agent and grows
/// on demand up to the capacity.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(GameSpec spec, std::size_t capacity = kDefaultCapacity);

  /// Throws ShapeError if `tr` does not match the game spec.
  void push(const JointTransition& tr);

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] bool empty() const { return size_ == 0; }
  [[nodiscard]] const GameSpec& spec() const { return spec_; }

  /// Element `k` in insertion order, 0 being the oldest retained.
  [[nodiscard]] JointTransition at(std::size_t k) const;

  /// Uniform draws with replacement over the current contents (logical indices).
  std::vector<std::size_t> sample_indices(std::size_t batch_size, std::mt19937_64& rng) const;
  Batch sample(std::size_t batch_size, std::mt19937_64& rng) const;
  std::vector<JointTransition> sample_transitions(std::size_t batch_size, std::mt19937_64& rng) const;
  Batch gather(const std::vector<std::size_t>& logical) const;

  void clear();

 private:
  [[nodiscard]] std::size_t slot(std::size_t logical) const;

  GameSpec spec_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;  // slot of the oldest element once full
  std::vector<std::vector<float>> obs_;
  std::vector<std::vector<float>> next_obs_;
  std::vector<std::vector<int>> actions_;
  std::vector<std::vector<float>> rewards_;
  std::vector<std::uint8_t> done_;
  std::vector<int> step_;
};

inline constexpr std::uint32_t kDemoFormatVersion = 1;

/// Expert demonstrations: complete 25-step episodes from one game.
/// meta carries env id, expert checkpoint hash, generation seed and count.
struct DemoSet {
  GameSpec spec;
  std::vector<std::vector<JointTransition>> episodes;
  nlohmann::json meta = nlohmann::json::object();

  /// Throws ShapeError on short episodes or transitions that do not fit spec.
  void validate() const;
  [[nodiscard]] std::size_t transition_count() const;
  /// Pushes every transition (episode order) into `buffer`.
  void fill(ReplayBuffer& buffer) const;
};

/// File layout: magic "MADIRLDM", u32 version, u64 header length, JSON header
/// {format_version, env_id, spec, count, episode_length, payload_crc32, meta},
/// then per episode, per step, per agent: obs f32[d], action u32,
/// next_obs f32[d], reward f32; then done u8 and step u32. Little-endian.
std::vector<std::uint8_t> encode_demos(const DemoSet& demos);
DemoSet decode_demos(std::span<const std::uint8_t> bytes);

void save_demos(const DemoSet& demos, const std::filesystem::path& path);
DemoSet load_demos(const std::filesystem::path& path);
/// As load_demos, but throws SpecMismatchError unless the file's game matches.
DemoSet load_demos(const std::filesystem::path& path, const GameSpec& expected);

}  // namespace madirl::replay
