#include "madirl/orchestrator/pipeline.hpp"

#include "madirl/common/binary_io.hpp"
#include "madirl/common/errors.hpp"
#include "madirl/discriminators/discriminators.hpp"
#include "madirl/envs/toy.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <thread>

namespace madirl::orchestrator {

namespace {

namespace fs = std::filesystem;
using actors::ActMode;
using actors::MaacLearner;
using envs::JointTransition;
using numerics::Matrix;
using Episode = std::vector<JointTransition>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

actors::MaacConfig maac_config(const ExperimentConfig& c) {
  actors::MaacConfig m;
  m.gamma = c.gamma;
  m.lr_policy = c.lr_policy;
  m.lr_critic = c.lr_critic;
  m.tau_policy = c.tau_policy;
  m.tau_critic = c.tau_critic;
  m.critic_clip = c.clip_critic;
  m.entropy_coef = c.entropy_policy;
  m.hidden = c.hidden;
  m.heads = c.heads;
  return m;
}

envs::GameSpec spec_of(const std::string& env) { return envs::make_env(env)->spec(); }

std::string run_id(const ExperimentConfig& c) {
  std::string id = c.env + "-" + c.algorithm;
  if (c.algorithm == "ma-daac" || c.algorithm == "ma-gail") id += "-" + c.disc;
  if (c.algorithm == "retrain") id += "-" + c.reward;
  if (c.on_policy) id += "-onpolicy";
  return id + "-s" + std::to_string(c.seed);
}

template <typename Act>
Episode play_episode(envs::Env& env, std::uint64_t seed, Act&& act) {
  auto obs = env.reset(seed);
  Episode ep;
  ep.reserve(static_cast<std::size_t>(env.spec().episode_length));
  while (!env.done()) {
    JointTransition tr;
    tr.step_index = env.step_index();
    tr.actions = act(obs);
    auto res = env.step(tr.actions);
    tr.obs = std::move(obs);
    tr.next_obs = res.obs;
    tr.gt_rewards = std::move(res.rewards);
    tr.done = res.done;
    obs = std::move(res.obs);
    ep.push_back(std::move(tr));
  }
  return ep;
}

std::vector<double> mean_scores(const std::vector<Episode>& eps, const envs::GameSpec& spec) {
  std::vector<double> sum(static_cast<std::size_t>(spec.n_agents), 0.0);
  for (const auto& ep : eps) {
    const auto s = envs::episode_score(ep, spec.n_agents, spec.episode_length);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += s[i];
  }
  for (auto& v : sum) v /= static_cast<double>(eps.size());
  return sum;
}

std::vector<Matrix<float>> column(const std::vector<std::vector<float>>& per_agent) {
  std::vector<Matrix<float>> out;
  for (const auto& v : per_agent) {
    out.push_back(Eigen::Map<const Matrix<float>>(v.data(), static_cast<Eigen::Index>(v.size()), 1));
  }
  return out;
}

actors::LearnBatch to_learn(const replay::Batch& b) {
  actors::LearnBatch lb;
  lb.obs = b.obs;
  lb.next_obs = b.next_obs;
  lb.actions = b.actions;
  lb.done = b.done;
  return lb;
}

std::vector<Matrix<float>> log_pi(const MaacLearner& learner, const replay::Batch& b) {
  std::vector<Matrix<float>> out;
  for (int i = 0; i < learner.spec().n_agents; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out.push_back(learner.action_log_probs(i, b.obs[k], b.actions[k]));
  }
  return out;
}

discriminators::JointInputs<float> inputs_of(const replay::Batch& b) {
  return {b.obs, b.actions, b.next_obs};
}

/// Episode batches as one replay::Batch, for learned-reward inference.
replay::Batch stack(const std::vector<Episode>& eps, const envs::GameSpec& spec) {
  replay::ReplayBuffer buf(spec, std::max<std::size_t>(1, eps.size() * static_cast<std::size_t>(spec.episode_length)));
  for (const auto& ep : eps) {
    for (const auto& tr : ep) buf.push(tr);
  }
  std::vector<std::size_t> all(buf.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return buf.gather(all);
}

// --- rollouts ----------------------------------------------------------------------------

/// K environment workers with their own env and sampling streams. Episode j
/// of a collection goes to worker j % K; results are merged in worker order.
class RolloutWorkers {
 public:
  RolloutWorkers(const std::string& env, std::uint64_t seed, int k) {
    for (int w = 0; w < k; ++w) {
      workers_.push_back({envs::make_env(env), derive_stream(seed, "env", static_cast<std::uint64_t>(w)),
                          derive_stream(seed, "policy", static_cast<std::uint64_t>(w))});
    }
  }

  std::vector<Episode> collect(const MaacLearner& learner, int count) {
    const int k = static_cast<int>(workers_.size());
    std::vector<std::vector<Episode>> per(workers_.size());
    auto run = [&](int w) {
      auto& wk = workers_[static_cast<std::size_t>(w)];
      for (int j = w; j < count; j += k) {
        const auto seed = wk.env_rng();
        per[static_cast<std::size_t>(w)].push_back(play_episode(
            *wk.env, seed, [&](const auto& obs) { return learner.act(obs, ActMode::kSample, wk.policy_rng); }));
      }
    };
    const int active = std::min(k, count);
    if (active <= 1) {
      run(0);
    } else {
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(active));
      std::vector<std::thread> threads;
      for (int w = 0; w < active; ++w) {
        threads.emplace_back([&, w] {
          try {
            run(w);
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    std::vector<Episode> out;
    for (auto& v : per) {
      for (auto& ep : v) out.push_back(std::move(ep));
    }
    return out;
  }

 private:
  struct Worker {
    std::unique_ptr<envs::Env> env;
    std::mt19937_64 env_rng;
    std::mt19937_64 policy_rng;
  };
  std::vector<Worker> workers_;
};

/// Greedy evaluation on a fixed set of episode seeds.
class Evaluator {
 public:
  Evaluator(const std::string& env, std::uint64_t seed, std::string_view stream, int n) : env_(envs::make_env(env)) {
    auto rng = derive_stream(seed, stream);
    for (int e = 0; e < n; ++e) seeds_.push_back(rng());
  }

  std::vector<Episode> episodes(const MaacLearner& learner, ActMode mode = ActMode::kArgmax,
                                std::uint64_t action_seed = 0) {
    std::mt19937_64 rng(action_seed);
    std::vector<Episode> out;
    for (auto s : seeds_) {
      out.push_back(play_episode(*env_, s, [&](const auto& obs) { return learner.act(obs, mode, rng); }));
    }
    return out;
  }

  std::vector<double> scores(const MaacLearner& learner) { return mean_scores(episodes(learner), env_->spec()); }

 private:
  std::unique_ptr<envs::Env> env_;
  std::vector<std::uint64_t> seeds_;
};

struct Refs {
  std::vector<double> expert;
  std::vector<double> random;

  [[nodiscard]] double nss_of(const std::vector<double>& scores) const {
    if (expert.empty() || random.empty()) return kNaN;
    return eval::nss({scores, expert, random});
  }
  [[nodiscard]] nlohmann::json to_json() const { return {{"score_expert", expert}, {"score_random", random}}; }
};

// --- run directory ------------------------------------------------------------------------

class RunWriter {
 public:
  RunWriter(fs::path dir, const ExperimentConfig& cfg, int n_agents) : dir_(std::move(dir)) {
    fs::create_directories(dir_ / "checkpoints");
    nlohmann::json resolved = cfg.to_json();
    resolved["workers"] = cfg.effective_workers();
    std::ofstream(dir_ / "config.resolved.json") << resolved.dump(2) << "\n";
    metrics_.open(dir_ / "metrics.csv");
    metrics_ << eval::metrics_header(n_agents) << "\n";
    events_.open(dir_ / "events.log");
    record_ = {{"run_id", run_id(cfg)}, {"complete", false}, {"status", "running"}, {"config", resolved}};
    write_record();
  }

  void row(const eval::MetricsRow& r) {
    metrics_ << eval::metrics_line(r) << "\n";
    metrics_.flush();
  }
  void event(std::int64_t round, std::string_view what) { events_ << round << ' ' << what << '\n'; }
  void note(const std::string& line) { events_ << "# " << line << '\n'; }

  nlohmann::json& record() { return record_; }
  void write_record() {
    const auto text = record_.dump(2) + "\n";
    io::write_file_atomic(dir_ / "run.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
  [[nodiscard]] const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::ofstream metrics_;
  std::ofstream events_;
  nlohmann::json record_;
};

numerics::Checkpoint learner_checkpoint(const MaacLearner& learner, const ExperimentConfig& cfg) {
  numerics::Checkpoint ckpt;
  learner.append_to(ckpt);
  ckpt.meta = {{"kind", "learner"},       {"env", cfg.env},       {"spec", learner.spec().to_json()},
               {"hidden", cfg.hidden},    {"heads", cfg.heads},   {"algorithm", cfg.algorithm},
               {"seed", cfg.seed}};
  return ckpt;
}

MaacLearner learner_from(const numerics::Checkpoint& ckpt) {
  if (!ckpt.meta.contains("spec") || !ckpt.meta.contains("hidden")) {
    throw FormatError("checkpoint has no learner metadata (spec, hidden)");
  }
  actors::MaacConfig m;
  m.hidden = ckpt.meta.at("hidden").get<int>();
  m.heads = ckpt.meta.value("heads", actors::kHeads);
  std::mt19937_64 rng(0);
  MaacLearner learner(envs::GameSpec::from_json(ckpt.meta.at("spec")), m, rng);
  learner.restore_policies(ckpt);
  return learner;
}

// --- the shared MAAC loop --------------------------------------------------------------------

struct LoopHooks {
  /// Per-agent B x 1 rewards for a sampled agent batch.
  std::function<std::vector<Matrix<float>>(const replay::Batch&)> rewards;
  /// Runs after the MAAC round; returns the discriminator loss if it stepped.
  std::function<std::optional<double>(const replay::Batch&)> after_round;
  std::function<void(numerics::Checkpoint&)> save_extra;
};

/// Running per-agent reward standard deviation over every sampled batch.
class RewardScaler {
 public:
  explicit RewardScaler(std::size_t n) : mean_(n, 0.0), m2_(n, 0.0) {}

  void scale(std::vector<Matrix<float>>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double nb = static_cast<double>(r[i].rows());
      const double mb = r[i].template cast<double>().mean();
      const double m2b = (r[i].template cast<double>().array() - mb).square().sum();
      const double total = count_ + nb;
      const double delta = mb - mean_[i];
      mean_[i] += delta * nb / total;
      m2_[i] += m2b + delta * delta * count_ * nb / total;
      if (i + 1 == r.size()) count_ = total;
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double sd = count_ > 1 ? std::sqrt(m2_[i] / (count_ - 1)) : 0.0;
      r[i] /= static_cast<float>(sd + 1e-8);
    }
  }

 private:
  double count_ = 0.0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

struct LoopResult {
  std::vector<eval::MetricsRow> rows;
  std::optional<std::int64_t> hit;
  std::int64_t episodes = 0;
  fs::path last_good;
};

double mean_or_nan(double sum, int n) { return n > 0 ? sum / n : kNaN; }

LoopResult run_loop(const ExperimentConfig& cfg, MaacLearner& learner, const Refs& refs, RunWriter& w,
                    const LoopHooks& hooks) {
  const auto& spec = learner.spec();
  const int per_event = cfg.episodes_per_event(spec.episode_length);
  if (per_event < 1 || cfg.update_period % spec.episode_length != 0) {
    throw ConfigError("update_period must be a multiple of the episode length " + std::to_string(spec.episode_length));
  }
  if (cfg.eval_every % per_event != 0) {
    throw ConfigError("eval_every must be a multiple of " + std::to_string(per_event) + " episodes");
  }
  RolloutWorkers workers(cfg.env, cfg.seed, cfg.effective_workers());
  Evaluator evaluator(cfg.env, cfg.seed, "eval", cfg.eval_episodes);
  std::optional<Evaluator> confirm;
  replay::ReplayBuffer buffer(spec, cfg.agent_capacity());
  auto replay_rng = derive_stream(cfg.seed, "replay");
  auto learn_rng = derive_stream(cfg.seed, "learner");
  const auto warmup = static_cast<std::size_t>(cfg.effective_warmup());
  const auto n = static_cast<std::size_t>(spec.n_agents);

  LoopResult out;
  out.last_good = w.dir() / "checkpoints" / "last.ckpt";
  std::int64_t round = 0;
  int streak = 0;
  double disc_sum = 0.0;
  double critic_sum = 0.0;
  std::vector<double> policy_sum(n, 0.0);
  int disc_n = 0;
  int rounds_n = 0;
  bool have_good = false;
  RewardScaler scaler(n);

  auto save = [&](const fs::path& path) {
    auto ckpt = learner_checkpoint(learner, cfg);
    if (hooks.save_extra) hooks.save_extra(ckpt);
    numerics::save_checkpoint(path, ckpt);
  };

  while (out.episodes < cfg.episodes) {
    const int count = static_cast<int>(std::min<std::int64_t>(per_event, cfg.episodes - out.episodes));
    for (const auto& ep : workers.collect(learner, count)) {
      for (const auto& tr : ep) buffer.push(tr);
    }
    out.episodes += count;
    if (buffer.size() >= warmup) {
      try {
        for (int r = 0; r < cfg.rounds_per_update; ++r, ++round) {
          const auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size), replay_rng);
          auto rewards = hooks.rewards(batch);
          if (cfg.normalize_rewards) scaler.scale(rewards);
          for (const auto& m : rewards) {
            if (!m.allFinite()) throw NumericError("non-finite reward at round " + std::to_string(round));
          }
          w.event(round, "rewards");
          const auto lb = to_learn(batch);
          const auto cs = learner.update_critic(lb, rewards, learn_rng);
          const auto pl = learner.update_policies(lb, learn_rng);
          learner.update_targets();
          w.event(round, "maac");
          critic_sum += cs.loss;
          for (std::size_t i = 0; i < n; ++i) policy_sum[i] += pl[i];
          ++rounds_n;
          if (hooks.after_round) {
            if (const auto d = hooks.after_round(batch)) {
              w.event(round, "disc");
              disc_sum += *d;
              ++disc_n;
            }
          }
        }
      } catch (const NumericError& e) {
        w.record()["status"] = "diverged";
        w.record()["error"] = e.what();
        w.record()["last_good_checkpoint"] = have_good ? nlohmann::json(out.last_good.string()) : nlohmann::json(nullptr);
        w.write_record();
        throw NumericError(std::string(e.what()) + "; last good checkpoint: " +
                           (have_good ? out.last_good.string() : std::string("none")));
      }
    }
    if (out.episodes % cfg.eval_every == 0 || out.episodes == cfg.episodes) {
      eval::MetricsRow row;
      row.episode = out.episodes;
      row.scores = evaluator.scores(learner);
      row.nss = refs.nss_of(row.scores);
      row.disc_loss = mean_or_nan(disc_sum, disc_n);
      row.critic_loss = mean_or_nan(critic_sum, rounds_n);
      for (std::size_t i = 0; i < n; ++i) row.policy_losses.push_back(mean_or_nan(policy_sum[i], rounds_n));
      disc_sum = critic_sum = 0.0;
      std::fill(policy_sum.begin(), policy_sum.end(), 0.0);
      disc_n = rounds_n = 0;
      w.row(row);
      out.rows.push_back(row);
      save(out.last_good);
      have_good = true;
      if (cfg.stop_nss && row.nss >= *cfg.stop_nss) {
        if (++streak == 1) out.hit = row.episode;
        if (streak >= cfg.stop_patience) {
          if (!cfg.stop_confirm) break;
          if (!confirm) confirm.emplace(cfg.env, cfg.seed, "final", cfg.final_eval_episodes);
          const double full = refs.nss_of(confirm->scores(learner));
          w.event(round, "confirm " + std::to_string(row.episode) + " " + std::to_string(full));
          if (full >= *cfg.stop_nss) break;
        }
      } else {
        streak = 0;
        out.hit.reset();
      }
    }
  }
  if (cfg.stop_nss && streak < cfg.stop_patience) out.hit.reset();
  return out;
}

void finish(RunWriter& w, const ExperimentConfig& cfg, const LoopResult& loop, RunOutcome& outcome, const Refs& refs,
            std::chrono::steady_clock::time_point t0) {
  outcome.dir = w.dir();
  outcome.rows = loop.rows;
  outcome.hit_episode = loop.hit;
  outcome.episodes_trained = loop.episodes;
  auto& rec = w.record();
  rec["complete"] = true;
  rec["status"] = loop.hit && loop.episodes < cfg.episodes ? "stopped-at-threshold" : "complete";
  rec["episodes_trained"] = loop.episodes;
  rec["hit_episode"] = loop.hit ? nlohmann::json(*loop.hit) : nlohmann::json(nullptr);
  rec["final_scores"] = outcome.final_scores;
  rec["final_nss"] = std::isfinite(outcome.final_nss) ? nlohmann::json(outcome.final_nss) : nlohmann::json(nullptr);
  rec["pcc"] = outcome.pcc ? nlohmann::json(*outcome.pcc) : nlohmann::json(nullptr);
  rec["references"] = refs.to_json();
  rec["checkpoint"] = outcome.checkpoint.string();
  rec["last_good_checkpoint"] = loop.last_good.string();
  if (!outcome.reward_export.empty()) rec["reward_export"] = outcome.reward_export.string();
  rec["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  w.write_record();
  outcome.record = rec;
}

std::vector<double> json_scores(const nlohmann::json& meta, const char* key) {
  if (auto it = meta.find(key); it != meta.end() && it->is_array()) return it->get<std::vector<double>>();
  return {};
}

/// Pairs (g_i, r_i) over every step and agent of the given episodes.
double reward_pcc(const discriminators::LearnedReward& g, const std::vector<Episode>& eps, const envs::GameSpec& spec) {
  const auto b = stack(eps, spec);
  const auto learned = g(b.obs, b.actions);
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < learned.size(); ++i) {
    for (Eigen::Index r = 0; r < learned[i].rows(); ++r) {
      x.push_back(learned[i](r, 0));
      y.push_back(b.gt_rewards[i][static_cast<std::size_t>(r)]);
    }
  }
  return eval::pcc(x, y);
}

}  // namespace

// --- public operations ------------------------------------------------------------------------

BaselineStats random_baseline(const std::string& env_id, int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw ConfigError("random_baseline: n_episodes must be positive");
  auto env = envs::make_env(env_id);
  const auto& spec = env->spec();
  auto env_rng = derive_stream(seed, "baseline-env");
  auto act_rng = derive_stream(seed, "baseline-actions");
  const auto n = static_cast<std::size_t>(spec.n_agents);
  std::vector<std::vector<double>> per_agent(n);
  for (int e = 0; e < n_episodes; ++e) {
    const auto ep = play_episode(*env, env_rng(), [&](const auto&) {
      std::vector<int> a(n);
      for (std::size_t i = 0; i < n; ++i) a[i] = std::uniform_int_distribution<int>(0, spec.n_actions[i] - 1)(act_rng);
      return a;
    });
    const auto s = envs::episode_score(ep, spec.n_agents, spec.episode_length);
    for (std::size_t i = 0; i < n; ++i) per_agent[i].push_back(s[i]);
  }
  BaselineStats out;
  out.episodes = n_episodes;
  for (const auto& v : per_agent) {
    out.mean.push_back(eval::mean_ci(v).mean);
    out.sem.push_back(eval::standard_error(v));
  }
  return out;
}

RunOutcome train_expert(const ExperimentConfig& config, const fs::path& out) {
  config.validate();
  if (config.algorithm != "expert-maac") throw ConfigError("train_expert needs algorithm expert-maac");
  const auto t0 = std::chrono::steady_clock::now();
  auto env = envs::make_env(config.env);
  const auto spec = env->spec();
  RunWriter w(out, config, spec.n_agents);

  Refs refs;
  refs.random = config.score_random.empty()
                    ? random_baseline(config.env, config.baseline_episodes, config.seed).mean
                    : config.score_random;
  if (!config.score_expert.empty()) {
    refs.expert = config.score_expert;
  } else if (config.env == "toy_coop") {
    refs.expert = envs::toy_optimal_score(*env);
  }

  auto init_rng = derive_stream(config.seed, "init");
  MaacLearner learner(spec, maac_config(config), init_rng);
  LoopHooks hooks;
  hooks.rewards = [](const replay::Batch& b) { return column(b.gt_rewards); };
  const auto loop = run_loop(config, learner, refs, w, hooks);

  RunOutcome outcome;
  Evaluator final_eval(config.env, config.seed, "final", config.final_eval_episodes);
  outcome.final_scores = final_eval.scores(learner);
  outcome.final_nss = refs.nss_of(outcome.final_scores);
  auto ckpt = learner_checkpoint(learner, config);
  ckpt.meta["kind"] = "expert";
  ckpt.meta["score_expert"] = outcome.final_scores;
  ckpt.meta["score_expert_episodes"] = config.final_eval_episodes;
  ckpt.meta["score_random"] = refs.random;
  outcome.checkpoint = w.dir() / "checkpoints" / "expert.ckpt";
  numerics::save_checkpoint(outcome.checkpoint, ckpt);
  finish(w, config, loop, outcome, refs, t0);
  return outcome;
}

replay::DemoSet generate_demos(const numerics::Checkpoint& expert, const std::string& env_id, int count,
                               std::uint64_t seed) {
  if (count < 1) throw ConfigError("generate_demos: count must be positive");
  auto env = envs::make_env(env_id);
  const auto learner = learner_from(expert);
  if (!(learner.spec() == env->spec())) {
    throw SpecMismatchError("expert was trained on " + learner.spec().env_id + ", demos requested for " + env_id);
  }
  auto env_rng = derive_stream(seed, "demos");
  std::mt19937_64 unused(0);
  replay::DemoSet demos;
  demos.spec = env->spec();
  for (int e = 0; e < count; ++e) {
    demos.episodes.push_back(
        play_episode(*env, env_rng(), [&](const auto& obs) { return learner.act(obs, ActMode::kArgmax, unused); }));
  }
  const auto bytes = numerics::encode_checkpoint(expert);
  demos.meta = {{"env", env_id},
                {"count", count},
                {"seed", seed},
                {"expert_crc32", io::crc32(bytes)},
                {"scores", mean_scores(demos.episodes, demos.spec)},
                {"score_random", json_scores(expert.meta, "score_random")},
                {"score_expert_policy", json_scores(expert.meta, "score_expert")}};
  return demos;
}

RunOutcome train_irl(const ExperimentConfig& config, const replay::DemoSet& demos, const fs::path& out) {
  config.validate();
  if (config.algorithm != "ma-daac" && config.algorithm != "ma-gail") {
    throw ConfigError("train_irl needs algorithm ma-daac or ma-gail");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = spec_of(config.env);
  if (!(demos.spec == spec)) {
    throw SpecMismatchError("demonstrations are for " + demos.spec.env_id + ", run is on " + config.env);
  }
  demos.validate();
  RunWriter w(out, config, spec.n_agents);

  Refs refs;
  refs.expert = !config.score_expert.empty() ? config.score_expert : json_scores(demos.meta, "scores");
  refs.random = !config.score_random.empty() ? config.score_random : json_scores(demos.meta, "score_random");
  if (refs.expert.empty()) refs.expert = mean_scores(demos.episodes, spec);
  if (refs.random.empty()) refs.random = random_baseline(config.env, config.baseline_episodes, config.seed).mean;

  replay::ReplayBuffer expert_buffer(spec, std::max<std::size_t>(1, demos.transition_count()));
  demos.fill(expert_buffer);
  auto expert_rng = derive_stream(config.seed, "expert");
  auto init_rng = derive_stream(config.seed, "init");
  MaacLearner learner(spec, maac_config(config), init_rng);
  const bool airl = config.algorithm == "ma-daac";
  discriminators::DiscConfig dc;
  dc.lr = config.lr_disc;
  dc.entropy_coef = config.entropy_disc;
  dc.clip = config.clip_disc;
  dc.hidden = config.disc_hidden;
  discriminators::DiscTrainer disc(airl ? discriminators::DiscTrainer::Kind::kAirl
                                        : discriminators::DiscTrainer::Kind::kGail,
                                   spec, discriminators::parse_variant(config.disc), config.gamma, dc, init_rng);
  w.note(airl ? "reward = f - log pi" : "reward = log D");

  LoopHooks hooks;
  // The learner only ever sees discriminator rewards; gt_rewards stay in the buffer for logging.
  hooks.rewards = [&](const replay::Batch& b) { return disc.rewards(inputs_of(b), log_pi(learner, b)); };
  hooks.after_round = [&](const replay::Batch& b) -> std::optional<double> {
    if (!config.disc_updates) return std::nullopt;
    const auto eb = expert_buffer.sample(static_cast<std::size_t>(config.batch_size), expert_rng);
    const auto e_lp = log_pi(learner, eb);
    const auto a_lp = log_pi(learner, b);
    return disc.update(inputs_of(eb), e_lp, inputs_of(b), a_lp);
  };
  hooks.save_extra = [&](numerics::Checkpoint& c) { disc.append_to(c); };
  const auto loop = run_loop(config, learner, refs, w, hooks);

  RunOutcome outcome;
  Evaluator final_eval(config.env, config.seed, "final", config.final_eval_episodes);
  const auto final_eps = final_eval.episodes(learner);
  outcome.final_scores = mean_scores(final_eps, spec);
  outcome.final_nss = refs.nss_of(outcome.final_scores);
  auto ckpt = learner_checkpoint(learner, config);
  disc.append_to(ckpt);
  ckpt.meta["disc"] = config.disc;
  outcome.checkpoint = w.dir() / "checkpoints" / "final.ckpt";
  numerics::save_checkpoint(outcome.checkpoint, ckpt);
  if (airl) {
    auto g = discriminators::LearnedReward::export_g(disc.airl(), disc.params());
    g.meta["env"] = config.env;
    g.meta["score_expert"] = refs.expert;
    g.meta["score_random"] = refs.random;
    g.meta["source_run"] = w.record()["run_id"];
    outcome.reward_export = w.dir() / "reward_g.ckpt";
    numerics::save_checkpoint(outcome.reward_export, g);
    try {
      outcome.pcc = reward_pcc(discriminators::LearnedReward::from_checkpoint(g), final_eps, spec);
    } catch (const DegenerateError& e) {
      w.note(std::string("pcc undefined: ") + e.what());
    }
  }
  finish(w, config, loop, outcome, refs, t0);
  return outcome;
}

RunOutcome retrain(const ExperimentConfig& config, const fs::path& out) {
  config.validate();
  if (config.algorithm != "retrain") throw ConfigError("retrain needs algorithm retrain");
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = spec_of(config.env);

  std::optional<discriminators::LearnedReward> g;
  nlohmann::json export_meta = nlohmann::json::object();
  if (!config.reward_path.empty()) {
    const auto ckpt = numerics::load_checkpoint(config.reward_path);
    export_meta = ckpt.meta;
    if (config.reward == "g") {
      g = discriminators::LearnedReward::from_checkpoint(ckpt);
      if (!(g->spec() == spec)) {
        throw SpecMismatchError("reward export is for " + g->spec().env_id + ", run is on " + config.env);
      }
    }
  } else if (config.reward == "g") {
    throw ConfigError("retrain: missing g export (reward_path)");
  }
  Refs refs;
  refs.expert = !config.score_expert.empty() ? config.score_expert : json_scores(export_meta, "score_expert");
  refs.random = !config.score_random.empty() ? config.score_random : json_scores(export_meta, "score_random");
  if (refs.random.empty()) refs.random = random_baseline(config.env, config.baseline_episodes, config.seed).mean;
  if (refs.expert.empty()) throw ConfigError("retrain: expert reference scores unavailable (score_expert or export)");

  RunWriter w(out, config, spec.n_agents);
  w.record()["deviations"] = {"policies are retrained with MAAC at every scale; MACK is not implemented"};
  w.write_record();
  auto init_rng = derive_stream(config.seed, "init");
  MaacLearner learner(spec, maac_config(config), init_rng);
  LoopHooks hooks;
  hooks.rewards = [&](const replay::Batch& b) -> std::vector<Matrix<float>> {
    if (config.reward == "ground-truth") return column(b.gt_rewards);
    if (config.reward == "zero") {
      return std::vector<Matrix<float>>(static_cast<std::size_t>(spec.n_agents), Matrix<float>::Zero(b.size, 1));
    }
    return (*g)(b.obs, b.actions);
  };
  const auto loop = run_loop(config, learner, refs, w, hooks);

  RunOutcome outcome;
  Evaluator final_eval(config.env, config.seed, "final", config.final_eval_episodes);
  const auto final_eps = final_eval.episodes(learner);
  outcome.final_scores = mean_scores(final_eps, spec);
  outcome.final_nss = refs.nss_of(outcome.final_scores);
  outcome.checkpoint = w.dir() / "checkpoints" / "final.ckpt";
  numerics::save_checkpoint(outcome.checkpoint, learner_checkpoint(learner, config));
  if (g) {
    try {
      outcome.pcc = reward_pcc(*g, final_eps, spec);
    } catch (const DegenerateError& e) {
      w.note(std::string("pcc undefined: ") + e.what());
    }
  }
  finish(w, config, loop, outcome, refs, t0);
  return outcome;
}

std::vector<double> evaluate_checkpoint(const numerics::Checkpoint& ckpt, const std::string& env, int n_episodes,
                                        std::uint64_t seed, actors::ActMode mode) {
  const auto learner = learner_from(ckpt);
  if (!(learner.spec() == spec_of(env))) {
    throw SpecMismatchError("checkpoint is for " + learner.spec().env_id + ", evaluation requested on " + env);
  }
  Evaluator ev(env, seed, "eval", n_episodes);
  return mean_scores(ev.episodes(learner, mode, derive_stream(seed, "eval-actions")()), learner.spec());
}

}  // namespace madirl::orchestrator
