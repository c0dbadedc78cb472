#include "madirl/orchestrator/config.hpp"

#include "madirl/common/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

namespace madirl::orchestrator {

namespace {

template <typename Cfg, typename F>
void visit_fields(Cfg& c, F&& f) {
  f("env", c.env);
  f("seed", c.seed);
  f("algorithm", c.algorithm);
  f("gamma", c.gamma);
  f("buffer_size", c.buffer_size);
  f("lr_policy", c.lr_policy);
  f("lr_critic", c.lr_critic);
  f("lr_disc", c.lr_disc);
  f("tau_policy", c.tau_policy);
  f("tau_critic", c.tau_critic);
  f("entropy_policy", c.entropy_policy);
  f("entropy_disc", c.entropy_disc);
  f("clip_critic", c.clip_critic);
  f("clip_disc", c.clip_disc);
  f("batch_size", c.batch_size);
  f("update_period", c.update_period);
  f("rounds_per_update", c.rounds_per_update);
  f("warmup", c.warmup);
  f("hidden", c.hidden);
  f("heads", c.heads);
  f("disc_hidden", c.disc_hidden);
  f("episodes", c.episodes);
  f("disc", c.disc);
  f("demos", c.demos);
  f("demos_path", c.demos_path);
  f("expert_path", c.expert_path);
  f("reward", c.reward);
  f("reward_path", c.reward_path);
  f("score_expert", c.score_expert);
  f("score_random", c.score_random);
  f("eval_every", c.eval_every);
  f("eval_episodes", c.eval_episodes);
  f("final_eval_episodes", c.final_eval_episodes);
  f("baseline_episodes", c.baseline_episodes);
  f("stop_nss", c.stop_nss);
  f("stop_patience", c.stop_patience);
  f("stop_confirm", c.stop_confirm);
  f("on_policy", c.on_policy);
  f("disc_updates", c.disc_updates);
  f("normalize_rewards", c.normalize_rewards);
  f("workers", c.workers);
}

template <typename V>
void to_json_value(nlohmann::json& j, const V& v) {
  j = v;
}

template <typename V>
void to_json_value(nlohmann::json& j, const std::optional<V>& v) {
  j = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename V>
void from_json_value(const nlohmann::json& j, V& v) {
  v = j.get<V>();
}

template <typename V>
void from_json_value(const nlohmann::json& j, std::optional<V>& v) {
  if (j.is_null()) {
    v.reset();
  } else {
    v = j.get<V>();
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

std::optional<int> threads_cap() {
  const char* s = std::getenv("MADIRL_THREADS");
  if (s == nullptr || *s == '\0') return std::nullopt;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError("MADIRL_THREADS must be a positive integer, got '" + std::string(s) + "'");
  return static_cast<int>(std::min<long>(v, 1024));
}

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  visit_fields(*this, [&](const char* name, const auto& v) { to_json_value(j[name], v); });
  return j;
}

void ExperimentConfig::merge(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a key-value object");
  std::set<std::string> known;
  visit_fields(*this, [&](const char* name, auto& v) {
    known.insert(name);
    if (auto it = j.find(name); it != j.end()) {
      try {
        from_json_value(*it, v);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + name + "': " + e.what());
      }
    }
  });
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("config: unknown key '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  static const std::set<std::string> algorithms{"expert-maac", "ma-daac", "ma-gail", "retrain"};
  static const std::set<std::string> variants{"dec", "cen", "cen-obs"};
  static const std::set<std::string> rewards{"g", "ground-truth", "zero"};
  require(!env.empty(), "env must be set");
  require(algorithms.contains(algorithm), "algorithm must be one of expert-maac, ma-daac, ma-gail, retrain");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(buffer_size >= 1, "buffer_size must be positive");
  for (auto [name, v] : {std::pair{"lr_policy", lr_policy}, {"lr_critic", lr_critic}, {"lr_disc", lr_disc}}) {
    require(v > 0.0 && v <= 1.0, std::string(name) + " must lie in (0, 1]");
  }
  require(tau_policy > 0.0 && tau_policy <= 1.0, "tau_policy must lie in (0, 1]");
  require(tau_critic > 0.0 && tau_critic <= 1.0, "tau_critic must lie in (0, 1]");
  require(entropy_policy >= 0.0 && std::isfinite(entropy_policy), "entropy_policy must be non-negative");
  require(entropy_disc >= 0.0 && std::isfinite(entropy_disc), "entropy_disc must be non-negative");
  require(clip_critic > 0.0 && clip_disc > 0.0, "clip norms must be positive");
  require(batch_size >= 1, "batch_size must be positive");
  require(update_period >= 1, "update_period must be positive");
  require(rounds_per_update >= 1, "rounds_per_update must be positive");
  require(warmup >= 1, "warmup must be positive");
  require(hidden >= 1 && disc_hidden >= 1, "hidden widths must be positive");
  require(heads >= 1 && hidden % heads == 0, "heads must divide hidden");
  require(episodes >= 1, "episodes must be positive");
  require(variants.contains(disc), "disc must be dec, cen or cen-obs");
  require(demos >= 1, "demos must be positive");
  require(rewards.contains(reward), "reward must be g, ground-truth or zero");
  require(eval_every >= 1 && eval_episodes >= 1, "evaluation cadence must be positive");
  require(final_eval_episodes >= 1 && baseline_episodes >= 1, "evaluation episode counts must be positive");
  require(stop_patience >= 1, "stop_patience must be positive");
  require(!stop_nss || std::isfinite(*stop_nss), "stop_nss must be finite");
  require(workers >= 0, "workers must be non-negative");
  require(score_expert.size() == score_random.size() || score_expert.empty() || score_random.empty(),
          "score_expert and score_random must have equal length");
  if (algorithm == "ma-gail") require(disc != "cen-obs", "ma-gail has no observation-only variant");
  if (algorithm == "retrain" && reward == "g") require(!reward_path.empty(), "retrain with reward g needs reward_path");
}

std::size_t ExperimentConfig::agent_capacity() const {
  return on_policy ? static_cast<std::size_t>(update_period) : buffer_size;
}

int ExperimentConfig::effective_warmup() const {
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(warmup), agent_capacity()));
}

int ExperimentConfig::effective_workers() const {
  const auto cap = threads_cap();
  const int want = workers > 0 ? workers : cap.value_or(1);
  return cap ? std::min(want, *cap) : want;
}

ExperimentConfig defaults_for(const std::string& algorithm) {
  ExperimentConfig c;
  c.algorithm = algorithm;
  if (algorithm == "expert-maac" || algorithm == "retrain") {
    c.buffer_size = 50'000;
    c.tau_policy = 0.01;
    c.tau_critic = 0.01;
    c.normalize_rewards = true;
  }
  return c;
}

std::mt19937_64 derive_stream(std::uint64_t master, std::string_view name, std::uint64_t index) {
  // FNV-1a of the name keeps streams for different names unrelated.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace madirl::orchestrator
