#pragma once

// Verification experiments and their persisted results.
//
// Every experiment produces rows of the CSV schema
//   eps,a_eps,replicas,metric_name,estimate,ci_low,ci_high,verdict
// Per-eps rows carry Monte Carlo intervals (mean +- 2 SE, or Wilson with
// z = 2 for probabilities). Deterministic checks carry their acceptance band
// in ci_low/ci_high instead. Rows with eps = 0 summarize the whole sweep.
// Verdicts are a pure function of the rows (see recompute_verdicts), so a
// CSV can be re-judged without rerunning anything.

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "nse_mdp/config.hpp"
#include "nse_mdp/spectral.hpp"

namespace nse_mdp::experiment {

struct CsvRow {
  double eps = 0.0;
  double a_eps = 0.0;
  long long replicas = 0;
  std::string metric;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::string verdict;
};

struct Witness {
  std::string label;
  spectral::SpectralField field;
};

struct ExperimentRecord {
  std::string name;  ///< verify-core, thm35, prop33, prop36, mdp-tail
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<CsvRow> rows;
  bool passed = false;
  double wall_clock = 0.0;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
  std::vector<Witness> witnesses;  ///< fields behind a failed inequality
};

/// Per-run knobs that are not physics (and so not part of the config hash).
struct RunOptions {
  std::uint64_t seed = 0;  ///< 0: use the config seed
  int replicas = 0;        ///< 0: use the config replicas
};

ExperimentRecord run_estimates_suite(const config::ExperimentConfig& cfg, const RunOptions& opts = {});
ExperimentRecord run_thm35(const config::ExperimentConfig& cfg, const RunOptions& opts = {});
ExperimentRecord run_prop33(const config::ExperimentConfig& cfg, const RunOptions& opts = {});
ExperimentRecord run_prop36(const config::ExperimentConfig& cfg, const RunOptions& opts = {});
ExperimentRecord run_mdp_tail(const config::ExperimentConfig& cfg, const RunOptions& opts = {});

/// Fills in the verdict column and returns the overall verdict.
/// Throws InvalidArgument for an unknown experiment name.
bool recompute_verdicts(const std::string& name, std::vector<CsvRow>& rows);

/// Wilson score interval with z standard deviations.
std::pair<double, double> wilson_interval(std::size_t hits, std::size_t n, double z = 2.0);

std::string csv_text(const std::vector<CsvRow>& rows);
std::vector<CsvRow> parse_csv(const std::string& text);

/// Writes <name>.csv, <name>_manifest.json and any witness snapshots into dir.
void write_record(const ExperimentRecord& rec, const config::ExperimentConfig& cfg,
                  const std::filesystem::path& dir);

struct ReportSummary {
  bool all_passed = true;
  bool all_consistent = true;  ///< persisted verdicts equal recomputed ones
  nlohmann::ordered_json details = nlohmann::ordered_json::array();
};

/// Re-judges every experiment CSV found in dir.
ReportSummary report_data(const std::filesystem::path& dir);

}  // namespace nse_mdp::experiment
