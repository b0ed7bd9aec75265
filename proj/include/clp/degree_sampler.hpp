#pragma once

#include "clp/graph.hpp"
#include "clp/powerlaw.hpp"
#include "clp/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace clp {

/// Step-function empirical CDF of a degree sequence.
class Ecdf {
 public:
  explicit Ecdf(std::span<const Degree> degrees);

  /// Fraction of the sequence that is <= d.
  double operator()(double d) const;

  std::span<const Degree> support() const noexcept { return support_; }
  std::span<const double> cumulative() const noexcept { return cumulative_; }

 private:
  std::vector<Degree> support_;   // distinct values, ascending
  std::vector<double> cumulative_;  // fraction <= support_[i]
};

/// x_m (1 - u)^(-1 / beta).
double pareto_inverse_cdf(double u, double x_m, double beta);

/// Continuous Pareto draws, u ~ Uniform[0, 1) from a generator seeded once.
std::vector<double> pareto_draws(double x_m, double beta, std::size_t count, std::uint64_t seed);

/// pareto_draws discretized to max(1, round(x)).
DegreeSequence pareto_sequence(double x_m, double beta, std::size_t count, std::uint64_t seed);

/// |eCDF_orig(d) - eCDF_ideal(d)|.
double deviation(double d, const Ecdf& original, const Ecdf& ideal);
/// eCDF_orig(d) - eCDF_ideal(d).
double signed_deviation(double d, const Ecdf& original, const Ecdf& ideal);

enum class DeviationAggregation { Sum, Max };

enum class SamplerMode {
  Literal,      // keep = min(lambda * S(dvia_u, dvia_v), 1)
  Directional,  // keep = 1 - min(lambda * S(o_u, o_v), 1), o = max(0, ideal - orig)
};

struct SamplerConfig {
  double lambda = 0.3;
  DeviationAggregation aggregation = DeviationAggregation::Sum;
  SamplerMode mode = SamplerMode::Directional;
  std::uint64_t seed = 0;
};

/// Degrees of the source graph plus the two eCDFs the keep rule compares.
struct DegreeContext {
  std::vector<Degree> node_degrees;  // indexed by node id
  PowerLawFit fit;
  DegreeSequence ideal;
  Ecdf original;
  Ecdf ideal_ecdf;
};

/// Fits the power law on the non-isolated degrees of `source` and draws an
/// ideal sequence of the same length with x_m = d_min.
DegreeContext make_degree_context(const Graph& source, std::uint64_t seed);

double edge_keep_probability(Degree d_u, Degree d_v, const SamplerConfig& config, const Ecdf& original,
                             const Ecdf& ideal);
double edge_keep_probability(const NodePair& pair, const SamplerConfig& config, const DegreeContext& context);

/// Sum of keep probabilities over the edges.
double expected_retained_count(std::span<const LabeledEdge> edges, const SamplerConfig& config,
                               const DegreeContext& context);

struct SampledEdges {
  LabeledEdges train;
  LabeledEdges val;
  LabeledEdges calib;
  /// Positive train and val edges retained before class rebalancing.
  std::vector<NodePair> retained_positive;
};

/// Keeps edge e when r_e < P_keep(e), with r_e a counter-based uniform keyed
/// by the edge, then down-samples the majority label inside each subset.
/// Output subsets preserve input order and are subsets of their inputs.
SampledEdges sample_edges(std::span<const LabeledEdge> train, std::span<const LabeledEdge> val,
                          std::span<const LabeledEdge> calib, const DegreeContext& context,
                          const SamplerConfig& config);

/// Convenience overload that builds the context from the training subgraph.
SampledEdges sample_edges(std::span<const LabeledEdge> train, std::span<const LabeledEdge> val,
                          std::span<const LabeledEdge> calib, const Graph& degree_source,
                          const SamplerConfig& config);

/// 2E / (N (N - 1)).
double graph_density(std::size_t num_nodes, std::size_t num_edges);

}  // namespace clp
