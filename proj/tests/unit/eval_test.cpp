#include "madirl/actors/actors.hpp"
#include "madirl/common/errors.hpp"
#include "madirl/eval/eval.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

using namespace madirl;
using namespace madirl::eval;

namespace {

envs::GameSpec uniform_spec(int n, int obs_dim = 10, int n_actions = 5) {
  envs::GameSpec s;
  s.env_id = "uniform";
  s.n_agents = n;
  s.obs_dims.assign(static_cast<std::size_t>(n), obs_dim);
  s.n_actions.assign(static_cast<std::size_t>(n), n_actions);
  s.roles.assign(static_cast<std::size_t>(n), "agent");
  return s;
}

std::int64_t attention_critic_params(int n) {
  numerics::ParamStore<float> store;
  std::mt19937_64 rng(0);
  actors::AttentionCritic<float> critic(store, uniform_spec(n), rng);
  return count_params(store);
}

// Per-agent critic over every agent's observation and action, the layout
// attention replaces.
std::int64_t concatenated_critic_params(int n) {
  const auto spec = uniform_spec(n);
  numerics::ParamStore<float> store;
  std::mt19937_64 rng(0);
  int joint = 0;
  for (int i = 0; i < n; ++i) joint += spec.obs_dims[static_cast<std::size_t>(i)] + spec.n_actions[static_cast<std::size_t>(i)];
  for (int i = 0; i < n; ++i) {
    numerics::Mlp<float> net(store, "naive/" + std::to_string(i), {joint, 128, 128, 5}, rng);
  }
  return count_params(store);
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("madirl_eval_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

void write_run(const std::filesystem::path& dir, const std::string& algo, bool complete, std::vector<double> nss) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "run.json") << nlohmann::json{{"run_id", dir.filename().string()}, {"complete", complete}};
  std::ofstream(dir / "config.resolved.json")
      << nlohmann::json{{"env", "toy_coop"}, {"algorithm", algo}, {"disc", "dec"}, {"demos", 50}};
  std::ofstream m(dir / "metrics.csv");
  m << metrics_header(2) << "\n";
  for (std::size_t k = 0; k < nss.size(); ++k) {
    MetricsRow r;
    r.episode = static_cast<std::int64_t>(100 * (k + 1));
    r.nss = nss[k];
    r.scores = {nss[k], 2 * nss[k]};
    r.policy_losses = {0.1, 0.2};
    m << metrics_line(r) << "\n";
  }
}

}  // namespace

// --- NSS -------------------------------------------------------------------------

TEST(Nss, WorkedExampleFromPublishedScores) {
  const ScoreTriple t{{-80.248}, {-77.129}, {-178.575}};
  EXPECT_NEAR(nss(t), 0.9693, 1e-3);
}

TEST(Nss, BoundaryCasesAreExact) {
  const ScoreTriple expert{{3.0, -7.5}, {3.0, -7.5}, {1.0, -20.0}};
  EXPECT_EQ(nss(expert), 1.0);
  const ScoreTriple random{{1.0, -20.0}, {3.0, -7.5}, {1.0, -20.0}};
  EXPECT_EQ(nss(random), 0.0);
}

TEST(Nss, IsNotClamped) {
  EXPECT_DOUBLE_EQ(nss({{5.0}, {3.0}, {1.0}}), 2.0);
  EXPECT_DOUBLE_EQ(nss({{-1.0}, {3.0}, {1.0}}), -1.0);
}

TEST(Nss, AffineAndPermutationInvariance) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  std::uniform_real_distribution<double> pos(0.01, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    ScoreTriple t;
    for (int i = 0; i < 4; ++i) {
      t.score_a.push_back(u(rng));
      t.score_e.push_back(u(rng));
      t.score_r.push_back(u(rng));
    }
    const auto base = nss_terms(t);
    auto moved = t;
    const double alpha = pos(rng);
    const double beta = u(rng);
    moved.score_a[2] = alpha * t.score_a[2] + beta;
    moved.score_e[2] = alpha * t.score_e[2] + beta;
    moved.score_r[2] = alpha * t.score_r[2] + beta;
    EXPECT_NEAR(nss_terms(moved)[2], base[2], 1e-9 * std::max(1.0, std::abs(base[2])));
    auto perm = t;
    std::swap(perm.score_a[0], perm.score_a[3]);
    std::swap(perm.score_e[0], perm.score_e[3]);
    std::swap(perm.score_r[0], perm.score_r[3]);
    EXPECT_NEAR(nss(perm), nss(t), 1e-12 * std::max(1.0, std::abs(nss(t))));
  }
}

TEST(Nss, DegenerateBaselineIsRejected) {
  EXPECT_THROW(nss({{1.0}, {2.0}, {2.0}}), DegenerateError);
  EXPECT_THROW(nss({{1.0, 2.0}, {2.0}, {0.0}}), ShapeError);
}

// --- PCC ---------------------------------------------------------------------------

TEST(Pcc, WorkedExamples) {
  const std::vector<double> x{1, 2, 3};
  const std::vector<double> y{1, 2, 4};
  EXPECT_NEAR(pcc(x, y), 0.9820, 1e-3);
  EXPECT_DOUBLE_EQ(pcc(x, x), 1.0);
  const std::vector<double> neg{-1, -2, -3};
  EXPECT_DOUBLE_EQ(pcc(x, neg), -1.0);
}

TEST(Pcc, ScaleInvarianceAndErrors) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  std::vector<double> x(50);
  std::vector<double> y(50);
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = nd(rng);
    y[k] = 0.5 * x[k] + nd(rng);
  }
  auto ax = x;
  for (auto& v : ax) v = 3.7 * v - 12.0;
  EXPECT_NEAR(pcc(ax, y), pcc(x, y), 1e-9);
  const std::vector<double> flat(50, 1.0);
  EXPECT_THROW(pcc(flat, y), DegenerateError);
  EXPECT_THROW(pcc(std::vector<double>{1.0}, std::vector<double>{2.0}), ShapeError);
  EXPECT_THROW(pcc(x, std::vector<double>(3, 0.0)), ShapeError);
}

// --- parameter counts ----------------------------------------------------------------

TEST(CountParams, TwoLayerNetShapeArithmetic) {
  numerics::ParamStore<float> store;
  std::mt19937_64 rng(0);
  numerics::Mlp<float> net(store, "net", {10, 128, 5}, rng);
  EXPECT_EQ(count_params(store), 2053);
}

TEST(CountParams, AttentionCriticIsAffineInAgents) {
  std::vector<std::int64_t> c;
  for (int n : {4, 8, 12, 16}) c.push_back(attention_critic_params(n));
  EXPECT_EQ(c[1] - c[0], c[2] - c[1]);
  EXPECT_EQ(c[2] - c[1], c[3] - c[2]);
  // The slope is one agent's encoders and head; the shared maps are the intercept.
  const std::int64_t per_agent = (15 * 128 + 128) + (10 * 128 + 128) + (256 * 128 + 128) + (128 * 5 + 5);
  EXPECT_EQ((c[1] - c[0]) / 4, per_agent);
  EXPECT_EQ(c[0] - 4 * per_agent, 4 * (3 * 128 * 32 + 32));
}

TEST(CountParams, ConcatenatedCriticGrowsQuadratically) {
  std::vector<std::int64_t> c;
  for (int n : {4, 8, 12, 16}) c.push_back(concatenated_critic_params(n));
  const auto d1 = c[1] - c[0];
  const auto d2 = c[2] - c[1];
  const auto d3 = c[3] - c[2];
  EXPECT_GT(d2 - d1, 0);
  EXPECT_EQ(d2 - d1, d3 - d2);
}

TEST(CountParams, CheckpointGroupsAndTargetCopies) {
  const auto spec = uniform_spec(3);
  numerics::ParamStore<float> policy;
  numerics::ParamStore<float> critic;
  std::mt19937_64 rng(0);
  actors::PolicyNets<float> pol(policy, spec, rng);
  actors::AttentionCritic<float> att(critic, spec, rng);
  numerics::Checkpoint ckpt;
  numerics::append_store(ckpt, policy);
  numerics::append_store(ckpt, critic);
  numerics::append_store(ckpt, policy, "target/");
  const auto r = count_params(ckpt, 3);
  EXPECT_EQ(r.policies, count_params(policy));
  EXPECT_EQ(r.critic, count_params(critic));
  EXPECT_EQ(r.discriminators, 0);
  EXPECT_EQ(r.total(), r.policies + r.critic);
  EXPECT_EQ(r.to_json()["total"], r.total());

  numerics::ParamStore<float> four;
  actors::PolicyNets<float> pol4(four, uniform_spec(4), rng);
  EXPECT_EQ(count_params(four) - count_params(policy), count_params(policy) / 3);
}

// --- confidence intervals ---------------------------------------------------------------

TEST(MeanCi, StudentTHalfWidth) {
  const std::vector<double> one{0.7};
  const auto a = mean_ci(one);
  EXPECT_EQ(a.mean, 0.7);
  EXPECT_FALSE(a.half_width.has_value());
  const std::vector<double> same(10, 0.42);
  const auto b = mean_ci(same);
  EXPECT_DOUBLE_EQ(b.mean, 0.42);
  EXPECT_NEAR(*b.half_width, 0.0, 1e-12);
  const std::vector<double> v{1.0, 2.0, 3.0};
  const auto c = mean_ci(v);
  // t(0.975, 2) = 4.302653, s = 1
  EXPECT_NEAR(*c.half_width, 4.302653 / std::sqrt(3.0), 1e-6);
  EXPECT_NEAR(standard_error(v), 1.0 / std::sqrt(3.0), 1e-15);
}

// --- metrics and report ---------------------------------------------------------------------

TEST(Metrics, CsvRoundTrip) {
  const auto dir = temp_dir("csv");
  MetricsRow r;
  r.episode = 1200;
  r.nss = 0.123456789012345;
  r.scores = {-1.5, 2.25, 1.0 / 3.0};
  r.disc_loss = 1.386;
  r.critic_loss = 0.01;
  r.policy_losses = {-0.5, 0.25, 0.0};
  {
    std::ofstream out(dir / "metrics.csv");
    out << metrics_header(3) << "\n" << metrics_line(r) << "\n";
  }
  EXPECT_EQ(metrics_header(2), "episode,nss,score_agent_0,score_agent_1,disc_loss,critic_loss,policy_loss_0,policy_loss_1");
  const auto rows = read_metrics(dir / "metrics.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].episode, 1200);
  EXPECT_EQ(rows[0].nss, r.nss);
  EXPECT_EQ(rows[0].scores, r.scores);
  EXPECT_EQ(rows[0].policy_losses, r.policy_losses);
  std::filesystem::remove_all(dir);
}

TEST(Report, GroupsRunsAndSkipsIncompleteOnes) {
  const auto root = temp_dir("report");
  write_run(root / "a1", "ma-daac", true, {0.1, 0.5, 0.8});
  write_run(root / "a2", "ma-daac", true, {0.2, 0.6, 0.9});
  write_run(root / "a3", "ma-daac", false, {0.0});
  write_run(root / "g1", "ma-gail", true, {0.1, 0.3, 0.4});
  const std::vector<std::filesystem::path> dirs{root / "a1", root / "a2", root / "a3", root / "g1"};
  ReportOptions opt;
  opt.final_window = 1;
  opt.reference = "ma-gail/dec";
  const auto s = report(dirs, root / "out", opt);
  ASSERT_EQ(s.size(), 2u);
  const auto& daac = s[0]["group"] == "ma-daac/dec" ? s[0] : s[1];
  const auto& gail = s[0]["group"] == "ma-daac/dec" ? s[1] : s[0];
  EXPECT_EQ(daac["runs"], 2);
  EXPECT_NEAR(daac["final_nss_mean"].get<double>(), 0.85, 1e-12);
  EXPECT_NEAR(daac["final_nss_ci95"].get<double>(), 12.706205 * 0.05, 1e-5);
  EXPECT_NEAR(daac["relative_nss"].get<double>(), 0.45, 1e-12);
  EXPECT_TRUE(gail["final_nss_ci95"].is_null());
  EXPECT_EQ(daac["curve"].size(), 3u);
  EXPECT_TRUE(std::filesystem::exists(root / "out" / "summary.csv"));
  EXPECT_TRUE(std::filesystem::exists(root / "out" / "summary.json"));
  std::filesystem::remove_all(root);
}
