#include "madirl/common/errors.hpp"
#include "madirl/eval/eval.hpp"
#include "madirl/numerics/checkpoint.hpp"
#include "madirl/orchestrator/config.hpp"
#include "madirl/orchestrator/pipeline.hpp"
#include "madirl/replay/replay.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

using madirl::orchestrator::ExperimentConfig;
namespace fs = std::filesystem;

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> env;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<std::string> disc;
  std::optional<std::string> algo;
  std::string out = "runs/out";
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_algo, bool with_disc) {
  cmd->add_option("--config", f.config_path, "Key-value config document (JSON)");
  cmd->add_option("--env", f.env, "Environment id");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--episodes", f.episodes, "Training budget in episodes");
  cmd->add_option("--out", f.out, "Output run directory");
  cmd->add_option("--set", f.sets, "Override a config key: key=<json value>");
  if (with_disc) cmd->add_option("--disc", f.disc, "Discriminator variant")->check(CLI::IsMember({"dec", "cen", "cen-obs"}));
  if (with_algo) cmd->add_option("--algo", f.algo, "Imitation algorithm")->check(CLI::IsMember({"ma-daac", "ma-gail"}));
}

ExperimentConfig resolve(const std::string& algorithm, const CommonFlags& f) {
  const std::string algo = f.algo.value_or(algorithm);
  auto cfg = madirl::orchestrator::defaults_for(algo);
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw madirl::ConfigError("cannot open config " + f.config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw madirl::ConfigError("config " + f.config_path + ": " + e.what());
    }
    cfg.merge(j);
  }
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw madirl::ConfigError("--set expects key=value, got " + s);
    nlohmann::json v;
    try {
      v = nlohmann::json::parse(s.substr(eq + 1));
    } catch (const nlohmann::json::exception&) {
      v = s.substr(eq + 1);
    }
    cfg.merge({{s.substr(0, eq), v}});
  }
  if (f.env) cfg.env = *f.env;
  if (f.seed) cfg.seed = *f.seed;
  if (f.episodes) cfg.episodes = *f.episodes;
  if (f.disc) cfg.disc = *f.disc;
  cfg.algorithm = algo;
  return cfg;
}

void print_outcome(const madirl::orchestrator::RunOutcome& o) { std::cout << o.record.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent adversarial imitation with an attention critic"};
  app.require_subcommand(1);

  CommonFlags expert_f;
  auto* expert = app.add_subcommand("train-expert", "Train experts with MAAC on ground-truth rewards");
  add_common(expert, expert_f, false, false);

  CommonFlags demos_f;
  std::string demos_expert;
  std::string demos_out = "demos.demos";
  int demos_count = 50;
  auto* gen = app.add_subcommand("gen-demos", "Record argmax episodes of an expert");
  gen->add_option("--expert", demos_expert, "Expert checkpoint")->required();
  gen->add_option("--env", demos_f.env, "Environment id");
  gen->add_option("--seed", demos_f.seed, "Seed");
  gen->add_option("--count", demos_count, "Number of episodes")->check(CLI::PositiveNumber);
  gen->add_option("--demos,--out", demos_out, "Output .demos path");

  CommonFlags base_f;
  int base_episodes = 500;
  auto* baseline = app.add_subcommand("random-baseline", "Score uniformly random play");
  baseline->add_option("--env", base_f.env, "Environment id");
  baseline->add_option("--seed", base_f.seed, "Seed");
  baseline->add_option("--episodes", base_episodes, "Episodes")->check(CLI::PositiveNumber);
  baseline->add_option("--out", base_f.out, "Output JSON path");

  CommonFlags irl_f;
  std::string irl_demos;
  auto* irl = app.add_subcommand("train-irl", "Adversarial imitation from demonstrations");
  add_common(irl, irl_f, true, true);
  irl->add_option("--demos", irl_demos, "Demonstrations (.demos)")->required();

  CommonFlags re_f;
  std::optional<std::string> re_reward;
  std::optional<std::string> re_path;
  auto* re = app.add_subcommand("retrain", "Train fresh policies on a fixed reward");
  add_common(re, re_f, false, false);
  re->add_option("--reward", re_reward, "Reward source")->check(CLI::IsMember({"g", "ground-truth", "zero"}));
  re->add_option("--reward-path", re_path, "Learned reward export (reward_g.ckpt)");

  std::string ev_ckpt;
  std::string ev_env = "toy_coop";
  int ev_episodes = 500;
  std::uint64_t ev_seed = 0;
  bool ev_sample = false;
  auto* ev = app.add_subcommand("eval", "Greedy scores of a policy checkpoint");
  ev->add_option("--checkpoint,--expert", ev_ckpt, "Checkpoint")->required();
  ev->add_option("--env", ev_env, "Environment id");
  ev->add_option("--episodes", ev_episodes, "Episodes")->check(CLI::PositiveNumber);
  ev->add_option("--seed", ev_seed, "Seed");
  ev->add_flag("--sample", ev_sample, "Sample actions from the policy instead of argmax");

  std::vector<std::string> rep_dirs;
  std::string rep_out = "report";
  madirl::eval::ReportOptions rep_opt;
  auto* rep = app.add_subcommand("report", "Summaries over run directories");
  rep->add_option("runs", rep_dirs, "Run directories")->required();
  rep->add_option("--out", rep_out, "Output directory");
  rep->add_option("--window", rep_opt.final_window, "Final evaluation rows averaged per run");
  rep->add_option("--reference", rep_opt.reference, "Reference group, e.g. ma-gail/dec");

  CLI11_PARSE(app, argc, argv);

  try {
    if (expert->parsed()) {
      print_outcome(madirl::orchestrator::train_expert(resolve("expert-maac", expert_f), expert_f.out));
    } else if (gen->parsed()) {
      const auto ckpt = madirl::numerics::load_checkpoint(demos_expert);
      const auto env = demos_f.env.value_or(ckpt.meta.value("env", std::string("toy_coop")));
      const auto demos = madirl::orchestrator::generate_demos(ckpt, env, demos_count, demos_f.seed.value_or(0));
      madirl::replay::save_demos(demos, demos_out);
      std::cout << demos.meta.dump(2) << "\n";
    } else if (baseline->parsed()) {
      const auto env = base_f.env.value_or("toy_coop");
      const auto b = madirl::orchestrator::random_baseline(env, base_episodes, base_f.seed.value_or(0));
      const nlohmann::json j{{"env", env}, {"episodes", b.episodes}, {"mean", b.mean}, {"sem", b.sem}};
      if (base_f.out != "runs/out") std::ofstream(base_f.out) << j.dump(2) << "\n";
      std::cout << j.dump(2) << "\n";
    } else if (irl->parsed()) {
      auto cfg = resolve("ma-daac", irl_f);
      cfg.demos_path = irl_demos;
      const auto demos = madirl::replay::load_demos(irl_demos, madirl::envs::make_env(cfg.env)->spec());
      cfg.demos = static_cast<int>(demos.episodes.size());
      print_outcome(madirl::orchestrator::train_irl(cfg, demos, irl_f.out));
    } else if (re->parsed()) {
      auto cfg = resolve("retrain", re_f);
      if (re_reward) cfg.reward = *re_reward;
      if (re_path) cfg.reward_path = *re_path;
      print_outcome(madirl::orchestrator::retrain(cfg, re_f.out));
    } else if (ev->parsed()) {
      const auto ckpt = madirl::numerics::load_checkpoint(ev_ckpt);
      const auto scores = madirl::orchestrator::evaluate_checkpoint(
          ckpt, ev_env, ev_episodes, ev_seed, ev_sample ? madirl::actors::ActMode::kSample : madirl::actors::ActMode::kArgmax);
      nlohmann::json j{{"env", ev_env}, {"episodes", ev_episodes}, {"scores", scores}};
      j["params"] = madirl::eval::count_params(ckpt, static_cast<int>(scores.size())).to_json();
      std::cout << j.dump(2) << "\n";
    } else if (rep->parsed()) {
      std::vector<fs::path> dirs(rep_dirs.begin(), rep_dirs.end());
      std::cout << madirl::eval::report(dirs, rep_out, rep_opt).dump(2) << "\n";
    }
  } catch (const madirl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
