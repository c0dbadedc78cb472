#include "madirl/eval/eval.hpp"

#include "madirl/common/errors.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

namespace madirl::eval {

void ScoreTriple::validate() const {
  if (score_a.empty() || score_a.size() != score_e.size() || score_a.size() != score_r.size()) {
    throw ShapeError("score triple: per-agent score lists must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < score_e.size(); ++i) {
    if (score_e[i] == score_r[i]) {
      throw DegenerateError("score triple: expert and random scores coincide for agent " + std::to_string(i));
    }
  }
}

std::vector<double> nss_terms(const ScoreTriple& t) {
  t.validate();
  std::vector<double> out(t.score_a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (t.score_a[i] - t.score_r[i]) / (t.score_e[i] - t.score_r[i]);
  return out;
}

double nss(const ScoreTriple& t) {
  const auto terms = nss_terms(t);
  return std::accumulate(terms.begin(), terms.end(), 0.0) / static_cast<double>(terms.size());
}

double pcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("pcc: sequences differ in length");
  if (x.size() < 2) throw ShapeError("pcc: need at least two pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - mx;
    const double dy = y[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateError("pcc: a sequence has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

nlohmann::json ParamReport::to_json() const {
  return {{"n_agents", n_agents},         {"policies", policies}, {"critic", critic},
          {"discriminators", discriminators}, {"other", other},       {"total", total()}};
}

template <typename T>
std::int64_t count_params(const numerics::ParamStore<T>& store) {
  return store.parameter_count();
}

template std::int64_t count_params<float>(const numerics::ParamStore<float>&);
template std::int64_t count_params<double>(const numerics::ParamStore<double>&);

ParamReport count_params(const numerics::Checkpoint& ckpt, int n_agents) {
  ParamReport r;
  r.n_agents = n_agents;
  for (const auto& a : ckpt.arrays) {
    std::int64_t n = 1;
    for (auto d : a.shape) n *= d;
    if (a.name.rfind("target/", 0) == 0) continue;
    if (a.name.rfind("policy/", 0) == 0) {
      r.policies += n;
    } else if (a.name.rfind("critic/", 0) == 0) {
      r.critic += n;
    } else if (a.name.rfind("disc/", 0) == 0) {
      r.discriminators += n;
    } else {
      r.other += n;
    }
  }
  return r;
}

MeanCi mean_ci(std::span<const double> values, double level) {
  if (values.empty()) throw ShapeError("mean_ci: no values");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("mean_ci: level must lie in (0, 1)");
  MeanCi out;
  out.n = static_cast<int>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  const boost::math::students_t dist(static_cast<double>(values.size() - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - level) / 2.0));
  out.half_width = t * standard_error(values);
  return out;
}

double standard_error(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double n = static_cast<double>(values.size());
  const double m = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

// --- metrics.csv ---------------------------------------------------------------

std::string metrics_header(int n_agents) {
  std::ostringstream os;
  os << "episode,nss";
  for (int i = 0; i < n_agents; ++i) os << ",score_agent_" << i;
  os << ",disc_loss,critic_loss";
  for (int i = 0; i < n_agents; ++i) os << ",policy_loss_" << i;
  return os.str();
}

std::string metrics_line(const MetricsRow& row) {
  std::ostringstream os;
  os << std::setprecision(17) << row.episode << ',' << row.nss;
  for (double s : row.scores) os << ',' << s;
  os << ',' << row.disc_loss << ',' << row.critic_loss;
  for (double l : row.policy_losses) os << ',' << l;
  return os.str();
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  int n_agents = 0;
  for (const auto& h : header) {
    if (h.rfind("score_agent_", 0) == 0) ++n_agents;
  }
  const std::size_t expected = 4 + 2 * static_cast<std::size_t>(n_agents);
  if (header.size() != expected || header[0] != "episode" || header[1] != "nss") {
    throw FormatError(path.string() + ": unexpected header '" + line + "'");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError(path.string() + ": bad value '" + cell + "'");
      }
    }
    if (v.size() != expected) throw FormatError(path.string() + ": row has " + std::to_string(v.size()) + " columns");
    MetricsRow r;
    const auto n = static_cast<std::size_t>(n_agents);
    r.episode = static_cast<std::int64_t>(v[0]);
    r.nss = v[1];
    r.scores.assign(v.begin() + 2, v.begin() + 2 + static_cast<std::ptrdiff_t>(n));
    r.disc_loss = v[2 + n];
    r.critic_loss = v[3 + n];
    r.policy_losses.assign(v.begin() + 4 + static_cast<std::ptrdiff_t>(n), v.end());
    rows.push_back(std::move(r));
  }
  return rows;
}

// --- report ----------------------------------------------------------------------

namespace {

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw FormatError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

struct RunSummary {
  std::string run_id;
  std::vector<MetricsRow> rows;
  double final_nss = 0.0;
  std::vector<double> final_scores;
};

struct Group {
  std::string env;
  std::string label;  // algorithm/variant
  int demos = 0;
  std::vector<RunSummary> runs;
};

std::string json_or(const nlohmann::json& j, const char* key, const std::string& fallback) {
  return j.contains(key) && j.at(key).is_string() ? j.at(key).get<std::string>() : fallback;
}

}  // namespace

nlohmann::json report(std::span<const std::filesystem::path> run_dirs, const std::filesystem::path& out_dir,
                      const ReportOptions& options) {
  if (options.final_window <= 0) throw ConfigError("report: final window must be positive");
  std::map<std::string, Group> groups;
  for (const auto& dir : run_dirs) {
    try {
      const auto run = read_json(dir / "run.json");
      if (!run.value("complete", false)) {
        std::cerr << "warning: skipping incomplete run " << dir.string() << "\n";
        continue;
      }
      const auto cfg = read_json(dir / "config.resolved.json");
      RunSummary s;
      s.run_id = json_or(run, "run_id", dir.filename().string());
      s.rows = read_metrics(dir / "metrics.csv");
      if (s.rows.empty()) {
        std::cerr << "warning: skipping run without evaluation rows " << dir.string() << "\n";
        continue;
      }
      const auto n = std::min<std::size_t>(s.rows.size(), static_cast<std::size_t>(options.final_window));
      s.final_scores.assign(s.rows.back().scores.size(), 0.0);
      for (std::size_t k = s.rows.size() - n; k < s.rows.size(); ++k) {
        s.final_nss += s.rows[k].nss / static_cast<double>(n);
        for (std::size_t i = 0; i < s.final_scores.size(); ++i) {
          s.final_scores[i] += s.rows[k].scores[i] / static_cast<double>(n);
        }
      }
      Group g;
      g.env = json_or(cfg, "env", "?");
      const auto algo = json_or(cfg, "algorithm", "?");
      g.label = algo == "expert-maac" ? algo : algo + "/" + json_or(cfg, "disc", "dec");
      g.demos = cfg.value("demos", 0);
      const std::string key = g.env + "|" + g.label + "|" + std::to_string(g.demos);
      auto [it, inserted] = groups.try_emplace(key, g);
      it->second.runs.push_back(std::move(s));
    } catch (const Error& e) {
      std::cerr << "warning: skipping run " << dir.string() << ": " << e.what() << "\n";
    }
  }

  nlohmann::json summary = nlohmann::json::array();
  for (const auto& [key, g] : groups) {
    std::vector<double> finals;
    for (const auto& r : g.runs) finals.push_back(r.final_nss);
    const auto ci = mean_ci(finals);
    std::vector<double> mean_scores(g.runs.front().final_scores.size(), 0.0);
    for (const auto& r : g.runs) {
      for (std::size_t i = 0; i < mean_scores.size() && i < r.final_scores.size(); ++i) {
        mean_scores[i] += r.final_scores[i] / static_cast<double>(g.runs.size());
      }
    }
    // Mean NSS over runs at each evaluated episode.
    std::map<std::int64_t, std::pair<double, int>> curve;
    for (const auto& r : g.runs) {
      for (const auto& row : r.rows) {
        auto& c = curve[row.episode];
        c.first += row.nss;
        c.second += 1;
      }
    }
    nlohmann::json jc = nlohmann::json::array();
    for (const auto& [ep, c] : curve) jc.push_back({{"episode", ep}, {"nss", c.first / c.second}, {"runs", c.second}});
    nlohmann::json entry = {{"env", g.env},           {"group", g.label},          {"demos", g.demos},
                            {"runs", g.runs.size()}, {"final_nss_mean", ci.mean}, {"final_scores_mean", mean_scores},
                            {"curve", jc}};
    entry["final_nss_ci95"] = ci.half_width ? nlohmann::json(*ci.half_width) : nlohmann::json(nullptr);
    summary.push_back(entry);
  }
  for (auto& entry : summary) {
    if (options.reference.empty()) break;
    for (const auto& ref : summary) {
      if (ref["group"] == options.reference && ref["env"] == entry["env"] && ref["demos"] == entry["demos"]) {
        entry["relative_nss"] = entry["final_nss_mean"].get<double>() - ref["final_nss_mean"].get<double>();
        std::vector<double> rel;
        const auto a = entry["final_scores_mean"].get<std::vector<double>>();
        const auto b = ref["final_scores_mean"].get<std::vector<double>>();
        for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) rel.push_back(a[i] - b[i]);
        entry["relative_scores"] = rel;
      }
    }
  }

  std::filesystem::create_directories(out_dir);
  {
    std::ofstream js(out_dir / "summary.json");
    js << std::setw(2) << summary << "\n";
  }
  {
    std::ofstream csv(out_dir / "summary.csv");
    csv << "env,group,demos,runs,final_nss_mean,final_nss_ci95,relative_nss\n" << std::setprecision(10);
    for (const auto& e : summary) {
      csv << e["env"].get<std::string>() << ',' << e["group"].get<std::string>() << ',' << e["demos"].get<int>() << ','
          << e["runs"].get<int>() << ',' << e["final_nss_mean"].get<double>() << ',';
      if (!e["final_nss_ci95"].is_null()) csv << e["final_nss_ci95"].get<double>();
      csv << ',';
      if (e.contains("relative_nss")) csv << e["relative_nss"].get<double>();
      csv << '\n';
    }
  }
  {
    std::ofstream csv(out_dir / "curves.csv");
    csv << "env,group,demos,run_id,episode,nss\n" << std::setprecision(10);
    for (const auto& [key, g] : groups) {
      for (const auto& r : g.runs) {
        for (const auto& row : r.rows) {
          csv << g.env << ',' << g.label << ',' << g.demos << ',' << r.run_id << ',' << row.episode << ',' << row.nss
              << '\n';
        }
      }
    }
  }
  return summary;
}

}  // namespace madirl::eval
