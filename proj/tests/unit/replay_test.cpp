#include "madirl/common/errors.hpp"
#include "madirl/envs/game.hpp"
#include "madirl/replay/replay.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

using namespace madirl;
using namespace madirl::replay;

namespace {

using envs::Observation;

// Transition for toy_coop whose first observation float carries a sequence tag.
JointTransition tagged(const GameSpec& spec, int tag, int step = 0) {
  JointTransition tr;
  for (int i = 0; i < spec.n_agents; ++i) {
    Observation o(static_cast<std::size_t>(spec.obs_dims[static_cast<std::size_t>(i)]), 0.0f);
    o[0] = static_cast<float>(tag);
    tr.obs.push_back(o);
    o[1] = 1.0f;
    tr.next_obs.push_back(o);
    tr.actions.push_back(tag % spec.n_actions[static_cast<std::size_t>(i)]);
    tr.gt_rewards.push_back(0.01f * static_cast<float>(tag));
  }
  tr.step_index = step;
  tr.done = step == spec.episode_length - 1;
  return tr;
}

DemoSet record_demos(const std::string& id, int episodes, std::uint64_t seed) {
  auto env = envs::make_env(id);
  DemoSet demos;
  demos.spec = env->spec();
  demos.meta = {{"generation_seed", seed}, {"expert_checkpoint_hash", "test"}};
  std::mt19937_64 rng(seed);
  for (int e = 0; e < episodes; ++e) {
    auto obs = env->reset(rng());
    std::vector<JointTransition> ep;
    while (!env->done()) {
      JointTransition tr;
      tr.obs = obs;
      for (int n : demos.spec.n_actions) tr.actions.push_back(std::uniform_int_distribution<int>(0, n - 1)(rng));
      tr.step_index = env->step_index();
      auto r = env->step(tr.actions);
      tr.next_obs = r.obs;
      tr.gt_rewards = r.rewards;
      tr.done = r.done;
      obs = r.obs;
      ep.push_back(std::move(tr));
    }
    demos.episodes.push_back(std::move(ep));
  }
  return demos;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("madirl_replay_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(ReplayBuffer, FifoEviction) {
  const auto spec = envs::make_env("toy_coop")->spec();
  ReplayBuffer buf(spec, 3);
  for (int k = 1; k <= 4; ++k) buf.push(tagged(spec, k));
  ASSERT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.at(0).obs[0][0], 2.0f);
  EXPECT_EQ(buf.at(1).obs[0][0], 3.0f);
  EXPECT_EQ(buf.at(2).obs[0][0], 4.0f);
}

TEST(ReplayBuffer, SequenceTagsStayOrderedUnderWraparound) {
  const auto spec = envs::make_env("toy_coop")->spec();
  ReplayBuffer buf(spec, 37);
  for (int k = 0; k < 10000; ++k) {
    buf.push(tagged(spec, k));
    ASSERT_LE(buf.size(), buf.capacity());
  }
  for (std::size_t j = 0; j < buf.size(); ++j) {
    EXPECT_EQ(buf.at(j).obs[0][0], static_cast<float>(10000 - 37 + static_cast<int>(j)));
  }
}

TEST(ReplayBuffer, SingleItemRoundTrip) {
  const auto spec = envs::make_env("toy_coop")->spec();
  ReplayBuffer buf(spec, 10);
  const auto tr = tagged(spec, 5, 24);
  buf.push(tr);
  std::mt19937_64 rng(0);
  const auto s = buf.sample_transitions(1, rng);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], tr);
  const auto b = buf.sample(3, rng);
  EXPECT_EQ(b.size, 3);
  EXPECT_EQ(b.obs[1](2, 0), 5.0f);
  EXPECT_EQ(b.next_obs[0](0, 1), 1.0f);
  EXPECT_EQ(b.actions[0][1], 0);
  EXPECT_EQ(b.done[0], 1);
}

TEST(ReplayBuffer, EmptySampleAndShapeMismatchThrow) {
  const auto spec = envs::make_env("toy_coop")->spec();
  ReplayBuffer buf(spec, 10);
  std::mt19937_64 rng(0);
  EXPECT_THROW(buf.sample(4, rng), UsageError);
  auto tr = tagged(spec, 1);
  tr.obs[0].push_back(0.0f);
  EXPECT_THROW(buf.push(tr), ShapeError);
  auto tr2 = tagged(spec, 1);
  tr2.actions.pop_back();
  EXPECT_THROW(buf.push(tr2), ShapeError);
  EXPECT_THROW(ReplayBuffer(spec, 0), ConfigError);
}

TEST(ReplayBuffer, DeterministicGivenRngState) {
  const auto spec = envs::make_env("toy_coop")->spec();
  ReplayBuffer buf(spec, 100);
  for (int k = 0; k < 50; ++k) buf.push(tagged(spec, k));
  std::mt19937_64 a(9);
  std::mt19937_64 b(9);
  EXPECT_EQ(buf.sample_indices(64, a), buf.sample_indices(64, b));
  EXPECT_EQ(buf.sample_indices(200, a).size(), 200u);  // larger than size: with replacement
}

TEST(ReplayBuffer, UniformSamplingChiSquare) {
  const auto spec = envs::make_env("toy_coop")->spec();
  ReplayBuffer buf(spec, 10);
  for (int k = 0; k < 15; ++k) buf.push(tagged(spec, k));
  std::mt19937_64 rng(2024);
  const int draws = 100000;
  std::vector<int> count(10, 0);
  for (auto k : buf.sample_indices(draws, rng)) ++count[k];
  double chi2 = 0.0;
  for (int c : count) {
    EXPECT_NEAR(c / static_cast<double>(draws), 0.1, 0.01);
    chi2 += (c - draws / 10.0) * (c - draws / 10.0) / (draws / 10.0);
  }
  const boost::math::chi_squared dist(9);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.001);
}

TEST(DemoSet, SaveLoadIsBitExact) {
  const auto demos = record_demos("coop_comm", 7, 3);
  const auto path = temp_path("roundtrip.demos");
  save_demos(demos, path);
  const auto loaded = load_demos(path, demos.spec);
  EXPECT_EQ(loaded.spec, demos.spec);
  EXPECT_EQ(loaded.meta, demos.meta);
  ASSERT_EQ(loaded.episodes.size(), demos.episodes.size());
  for (std::size_t e = 0; e < demos.episodes.size(); ++e) EXPECT_EQ(loaded.episodes[e], demos.episodes[e]);
  std::filesystem::remove(path);
}

TEST(DemoSet, TruncatedOrCorruptFileIsRejected) {
  const auto demos = record_demos("toy_coop", 3, 4);
  auto bytes = encode_demos(demos);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  EXPECT_THROW(decode_demos(truncated), FormatError);
  auto flipped = bytes;
  flipped[bytes.size() - 20] ^= 0x40;
  EXPECT_THROW(decode_demos(flipped), FormatError);
  auto version = bytes;
  version[8] = 99;
  EXPECT_THROW(decode_demos(version), FormatError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(decode_demos(magic), FormatError);
}

TEST(DemoSet, SpecMismatchIsRejected) {
  const auto demos = record_demos("coop_nav", 2, 5);
  const auto path = temp_path("mismatch.demos");
  save_demos(demos, path);
  EXPECT_THROW(load_demos(path, envs::make_env("keep_away")->spec()), SpecMismatchError);
  ReplayBuffer other(envs::make_env("keep_away")->spec(), 100);
  EXPECT_THROW(demos.fill(other), SpecMismatchError);
  std::filesystem::remove(path);
}

TEST(DemoSet, ShortEpisodeIsRejected) {
  auto demos = record_demos("toy_coop", 2, 6);
  demos.episodes[1].pop_back();
  EXPECT_THROW(demos.validate(), ShapeError);
  EXPECT_THROW(encode_demos(demos), ShapeError);
}

TEST(DemoSet, FillPreservesEpisodeOrder) {
  const auto demos = record_demos("toy_coop", 4, 8);
  ReplayBuffer buf(demos.spec, 1000);
  demos.fill(buf);
  ASSERT_EQ(buf.size(), demos.transition_count());
  EXPECT_EQ(buf.at(26), demos.episodes[1][1]);
}
