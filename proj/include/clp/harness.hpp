#pragma once

#include "clp/conformal.hpp"
#include "clp/degree_sampler.hpp"
#include "clp/graph.hpp"
#include "clp/linkpred.hpp"
#include "clp/quantile.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace clp {

/// Where the graph comes from: an edge-list file, or the synthetic
/// configuration-model generator followed by optional clique injection.
struct DatasetConfig {
  std::string edge_list;  // empty selects the generator
  std::string features;   // empty draws standard-normal features
  std::size_t num_nodes = 0;
  std::size_t synth_nodes = 2000;
  double synth_beta = 2.5;
  Degree synth_dmin = 2;
  std::size_t clique_size = 0;
  std::size_t clique_count = 0;
  /// Selects the clique placement stream; sweeps vary it per variant.
  std::uint64_t clique_variant = 0;
  std::size_t feature_dim = 32;
  std::uint64_t graph_seed = 1;
};

struct RunConfig {
  double alpha = 0.1;
  SplitRatios ratios;
  LinkPredConfig model;
  QuantileConfig quantile;
  SamplerConfig sampler;  // seed is replaced per trial
  DatasetConfig dataset;
  std::uint64_t master_seed = 0;
  std::size_t splits = 5;
  std::size_t repetitions = 4;
  bool run_cqr = true;
  bool run_scqr = true;

  std::size_t trials() const { return splits * repetitions; }
};

/// Rejects alpha outside (0, 1), zero trials and malformed ratios.
void validate(const RunConfig& config);

/// Applies one "key = value" setting. Unknown keys and malformed values
/// throw ValidationError.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Flat UTF-8 "key = value" lines; '#' starts a comment. ParseError carries
/// the line number.
void apply_config_text(RunConfig& config, std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Every setting as (key, canonical value text) in a fixed order. Feeding the
/// pairs back through apply_setting reproduces the configuration.
std::vector<std::pair<std::string, std::string>> config_settings(const RunConfig& config);

/// Graph with features plus the negative pool drawn once per dataset.
struct Dataset {
  Graph graph;
  std::vector<NodePair> negatives;
  double ks = 0.0;  // power-law KS of the non-isolated degrees
};

Dataset load_dataset(const DatasetConfig& config);

inline constexpr std::string_view kArmCqr = "cqr";
inline constexpr std::string_view kArmScqr = "s-cqr";

struct TrialRecord {
  std::string arm;
  std::size_t trial = 0;
  std::size_t split = 0;
  std::uint64_t seed = 0;  // trial stream root: derive_seed(master, trial, "trial")
  /// Empty when the trial produced numbers; otherwise the reason it did not.
  std::string failure;
  ConformalReport report;
  double ks_before = 0.0;
  double ks_after = 0.0;
  double density_before = 0.0;
  double density_after = 0.0;

  bool ok() const { return failure.empty(); }
};

struct ArmSummary {
  std::size_t trials = 0;
  std::size_t failed = 0;
  double mean_coverage = 0.0;
  double std_coverage = 0.0;
  double mean_length = 0.0;
  double std_length = 0.0;
  double mean_ks_before = 0.0;
  double mean_ks_after = 0.0;
  double mean_density_after = 0.0;
};

struct ExperimentReport {
  RunConfig config;
  std::vector<TrialRecord> trials;  // trial-major, CQR before S-CQR

  std::optional<ArmSummary> summary(std::string_view arm) const;
  /// 100 (len_CQR - len_SCQR) / len_CQR; empty unless both arms have results.
  std::optional<double> improvement_pct() const;
};

/// Everything an arm needs from one trial: the split, the training subgraph,
/// the trained base model and its node embeddings.
struct TrialBase {
  std::size_t trial = 0;
  std::size_t split_index = 0;
  std::uint64_t seed = 0;
  EdgeSplit split;
  Graph subgraph;
  ModelParams params;
  Matrix embeddings;
};

/// Degree context of the trial's training subgraph with its ideal sequence
/// drawn from the trial's own stream.
DegreeContext trial_degree_context(const TrialBase& base);

TrialBase prepare_trial(const RunConfig& config, const Dataset& dataset, std::size_t trial);

TrialRecord run_cqr_arm(const RunConfig& config, const TrialBase& base);
/// Sampler seed comes from the trial; config.sampler supplies lambda, mode and S.
TrialRecord run_scqr_arm(const RunConfig& config, const TrialBase& base, const SamplerConfig& sampler);

ExperimentReport run_pipeline(const RunConfig& config);
ExperimentReport run_pipeline(const RunConfig& config, const Dataset& dataset);

struct LambdaRow {
  double lambda = 0.0;
  double density = 0.0;
  double ks = 0.0;
  double coverage = 0.0;
  double avg_length = 0.0;
  double expected_density = 0.0;  // from sum of keep probabilities
  std::size_t failed = 0;
};

struct LambdaSweep {
  RunConfig config;
  std::vector<LambdaRow> rows;
};

/// One S-CQR run per lambda; base models are trained once per trial and
/// reused across lambda values.
LambdaSweep sweep_lambda(const RunConfig& config, std::span<const double> lambdas);

struct CliqueRow {
  std::size_t clique_size = 0;
  std::size_t clique_count = 0;
  double mean_ks = 0.0;
  double mean_length = 0.0;
  double mean_coverage = 0.0;
  std::vector<double> variant_ks;
  std::vector<double> variant_length;
};

struct CliqueSweep {
  RunConfig config;
  std::size_t variants = 5;
  std::vector<CliqueRow> rows;
};

/// For each (m, n): `variants` injected graphs, CQR on each, mean KS and
/// mean interval length. Variant v uses clique stream v and master seed
/// derive_seed(master, v, "clique-variant").
CliqueSweep sweep_cliques(const RunConfig& config, std::span<const std::pair<std::size_t, std::size_t>> grid,
                          std::size_t variants = 5);

double mean(std::span<const double> values);
/// Sample standard deviation; 0 for fewer than two values.
double sample_std(std::span<const double> values);
/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

std::string report_json(const ExperimentReport& report);
std::string sweep_json(const LambdaSweep& sweep);
std::string sweep_json(const CliqueSweep& sweep);
std::string sweep_csv(const LambdaSweep& sweep);
std::string sweep_csv(const CliqueSweep& sweep);

/// Writes report_json(report) to path; IoError carries the path.
void write_report(const ExperimentReport& report, const std::filesystem::path& path);

}  // namespace clp
