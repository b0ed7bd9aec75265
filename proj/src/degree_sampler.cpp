#include "clp/degree_sampler.hpp"

#include "clp/errors.hpp"
#include "clp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace clp {

namespace {

double aggregate(double a, double b, DeviationAggregation agg) {
  return agg == DeviationAggregation::Sum ? a + b : std::max(a, b);
}

void require_config(const SamplerConfig& config) {
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) {
    throw ValidationError("sampler lambda must be a finite value >= 0");
  }
}

// Down-samples the majority label to the minority count; kept edges retain
// their input order.
LabeledEdges rebalance(LabeledEdges edges, std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < edges.size(); ++i) (edges[i].label ? pos : neg).push_back(i);
  if (pos.size() == neg.size()) return edges;
  auto& majority = pos.size() > neg.size() ? pos : neg;
  const std::size_t keep = std::min(pos.size(), neg.size());
  Rng rng(seed);
  std::shuffle(majority.begin(), majority.end(), rng);
  std::vector<bool> drop(edges.size(), false);
  for (std::size_t i = keep; i < majority.size(); ++i) drop[majority[i]] = true;
  LabeledEdges out;
  out.reserve(2 * keep);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!drop[i]) out.push_back(edges[i]);
  }
  return out;
}

}  // namespace

Ecdf::Ecdf(std::span<const Degree> degrees) {
  if (degrees.empty()) throw ValidationError("ecdf of an empty sequence");
  std::vector<Degree> sorted(degrees.begin(), degrees.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    support_.push_back(sorted[i]);
    cumulative_.push_back(static_cast<double>(i + 1) / n);
  }
  cumulative_.back() = 1.0;
}

double Ecdf::operator()(double d) const {
  const auto it = std::upper_bound(support_.begin(), support_.end(), d,
                                   [](double value, Degree s) { return value < static_cast<double>(s); });
  if (it == support_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - support_.begin()) - 1];
}

double pareto_inverse_cdf(double u, double x_m, double beta) {
  if (!(x_m > 0.0) || !(beta > 0.0)) throw ValidationError("pareto requires x_m > 0 and beta > 0");
  if (!(u >= 0.0 && u < 1.0)) throw ValidationError("pareto inverse CDF requires u in [0, 1)");
  return x_m * std::pow(1.0 - u, -1.0 / beta);
}

std::vector<double> pareto_draws(double x_m, double beta, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ValidationError("pareto sequence length must be >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> out(count);
  for (auto& x : out) x = pareto_inverse_cdf(uniform(rng), x_m, beta);
  return out;
}

DegreeSequence pareto_sequence(double x_m, double beta, std::size_t count, std::uint64_t seed) {
  const auto draws = pareto_draws(x_m, beta, count, seed);
  constexpr double kMax = static_cast<double>(std::numeric_limits<Degree>::max());
  DegreeSequence out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = static_cast<Degree>(std::clamp(std::round(draws[i]), 1.0, kMax));
  }
  return out;
}

double deviation(double d, const Ecdf& original, const Ecdf& ideal) {
  return std::abs(signed_deviation(d, original, ideal));
}

double signed_deviation(double d, const Ecdf& original, const Ecdf& ideal) {
  if (d < 0) throw ValidationError("deviation: negative degree");
  return original(d) - ideal(d);
}

DegreeContext make_degree_context(const Graph& source, std::uint64_t seed) {
  auto node_degrees = source.degrees();
  const DegreeSequence observed = degree_sequence(source, /*drop_isolated=*/true);
  if (observed.empty()) throw ValidationError("degree source has no edges");
  const PowerLawFit fit = fit_power_law(observed);
  DegreeSequence ideal = pareto_sequence(static_cast<double>(fit.d_min), fit.beta_hat, observed.size(), seed);
  Ecdf original(observed);
  Ecdf ideal_ecdf(ideal);
  return DegreeContext{std::move(node_degrees), fit, std::move(ideal), std::move(original), std::move(ideal_ecdf)};
}

double edge_keep_probability(Degree d_u, Degree d_v, const SamplerConfig& config, const Ecdf& original,
                             const Ecdf& ideal) {
  require_config(config);
  if (config.mode == SamplerMode::Literal) {
    const double s = aggregate(deviation(d_u, original, ideal), deviation(d_v, original, ideal), config.aggregation);
    return std::min(config.lambda * s, 1.0);
  }
  const double o_u = std::max(0.0, -signed_deviation(d_u, original, ideal));
  const double o_v = std::max(0.0, -signed_deviation(d_v, original, ideal));
  return 1.0 - std::min(config.lambda * aggregate(o_u, o_v, config.aggregation), 1.0);
}

double edge_keep_probability(const NodePair& pair, const SamplerConfig& config, const DegreeContext& context) {
  if (pair.v >= context.node_degrees.size()) throw ValidationError("edge endpoint outside the degree source");
  return edge_keep_probability(context.node_degrees[pair.u], context.node_degrees[pair.v], config,
                               context.original, context.ideal_ecdf);
}

double expected_retained_count(std::span<const LabeledEdge> edges, const SamplerConfig& config,
                               const DegreeContext& context) {
  double total = 0.0;
  for (const auto& e : edges) total += edge_keep_probability(e.pair, config, context);
  return total;
}

SampledEdges sample_edges(std::span<const LabeledEdge> train, std::span<const LabeledEdge> val,
                          std::span<const LabeledEdge> calib, const DegreeContext& context,
                          const SamplerConfig& config) {
  require_config(config);
  const std::uint64_t draw_seed = derive_seed(config.seed, 0, "edge-retention");
  auto retain = [&](std::span<const LabeledEdge> edges) {
    LabeledEdges kept;
    for (const auto& e : edges) {
      const double r = counter_uniform(draw_seed, e.pair.key() * 2 + e.label);
      if (r < edge_keep_probability(e.pair, config, context)) kept.push_back(e);
    }
    return kept;
  };

  SampledEdges out;
  LabeledEdges train_kept = retain(train);
  LabeledEdges val_kept = retain(val);
  LabeledEdges calib_kept = retain(calib);
  for (const auto* subset : {&train_kept, &val_kept}) {
    for (const auto& e : *subset) {
      if (e.label) out.retained_positive.push_back(e.pair);
    }
  }
  out.train = rebalance(std::move(train_kept), derive_seed(config.seed, 0, "rebalance"));
  out.val = rebalance(std::move(val_kept), derive_seed(config.seed, 1, "rebalance"));
  out.calib = rebalance(std::move(calib_kept), derive_seed(config.seed, 2, "rebalance"));
  if (out.calib.empty()) {
    throw DegenerateCalibrationError("sampling removed every calibration edge of one class (lambda " +
                                     std::to_string(config.lambda) + ")");
  }
  return out;
}

SampledEdges sample_edges(std::span<const LabeledEdge> train, std::span<const LabeledEdge> val,
                          std::span<const LabeledEdge> calib, const Graph& degree_source,
                          const SamplerConfig& config) {
  const DegreeContext context = make_degree_context(degree_source, derive_seed(config.seed, 0, "ideal-sequence"));
  return sample_edges(train, val, calib, context, config);
}

double graph_density(std::size_t num_nodes, std::size_t num_edges) {
  if (num_nodes < 2) return 0.0;
  const double n = static_cast<double>(num_nodes);
  return 2.0 * static_cast<double>(num_edges) / (n * (n - 1.0));
}

}  // namespace clp
