#pragma once

#include "madirl/numerics/array.hpp"
#include "madirl/numerics/checkpoint.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace madirl::eval {

/// Per-agent episode scores of the run under evaluation (a), the expert
/// demonstrations (e) and uniformly random play (r).
struct ScoreTriple {
  std::vector<double> score_a;
  std::vector<double> score_e;
  std::vector<double> score_r;

  /// Throws ShapeError on length mismatch, DegenerateError when e == r for an agent.
  void validate() const;
};

/// (score_a - score_r) / (score_e - score_r) per agent.
std::vector<double> nss_terms(const ScoreTriple& t);
/// Mean of nss_terms over agents. Not clamped.
double nss(const ScoreTriple& t);

/// Sample Pearson correlation. Throws ShapeError for unequal lengths or
/// fewer than 2 pairs, DegenerateError when either side has zero variance.
double pcc(std::span<const double> x, std::span<const double> y);

struct ParamReport {
  int n_agents = 0;
  std::int64_t policies = 0;
  std::int64_t critic = 0;
  std::int64_t discriminators = 0;
  /// Parameters outside the three groups, e.g. a test network.
  std::int64_t other = 0;

  [[nodiscard]] std::int64_t total() const { return policies + critic + discriminators + other; }
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Sum of shape products over every parameter.
template <typename T>
std::int64_t count_params(const numerics::ParamStore<T>& store);

/// Groups by name prefix: "policy/", "critic/", "disc/". Names under
/// "target/" are copies, not trainable parameters, and are skipped.
ParamReport count_params(const numerics::Checkpoint& ckpt, int n_agents);

struct MeanCi {
  double mean = 0.0;
  std::optional<double> half_width;  // absent for fewer than 2 values
  int n = 0;
};

/// Mean and Student-t confidence half-width over independent runs.
MeanCi mean_ci(std::span<const double> values, double level = 0.95);

/// Sample standard error of the mean; 0 for fewer than 2 values.
double standard_error(std::span<const double> values);

/// One row of metrics.csv.
struct MetricsRow {
  std::int64_t episode = 0;
  double nss = 0.0;
  std::vector<double> scores;
  double disc_loss = 0.0;
  double critic_loss = 0.0;
  std::vector<double> policy_losses;
};

std::string metrics_header(int n_agents);
std::string metrics_line(const MetricsRow& row);
/// Parses a metrics.csv written by metrics_header/metrics_line.
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

struct ReportOptions {
  /// Evaluation rows at the end of each run averaged into its final score.
  int final_window = 5;
  /// Group label used as the reference for relative scores, e.g. "ma-gail/dec".
  std::string reference;
};

/// Reads run directories (metrics.csv, run.json, config.resolved.json),
/// groups them by algorithm, environment, discriminator variant and demo
/// count, and writes summary.csv and summary.json into out_dir. Incomplete
/// runs are skipped with a warning on stderr. Returns the JSON summary.
nlohmann::json report(std::span<const std::filesystem::path> run_dirs, const std::filesystem::path& out_dir,
                      const ReportOptions& options = {});

}  // namespace madirl::eval
