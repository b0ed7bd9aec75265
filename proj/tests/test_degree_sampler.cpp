#include "clp/degree_sampler.hpp"
#include "clp/errors.hpp"
#include "clp/graph.hpp"
#include "clp/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

using namespace clp;

namespace {

SamplerConfig sampler(double lambda, SamplerMode mode, DeviationAggregation agg = DeviationAggregation::Sum,
                      std::uint64_t seed = 0) {
  SamplerConfig c;
  c.lambda = lambda;
  c.mode = mode;
  c.aggregation = agg;
  c.seed = seed;
  return c;
}

LabeledEdges labeled(std::span<const NodePair> pairs, std::uint8_t label) {
  LabeledEdges out;
  for (const auto& p : pairs) out.push_back({p, label});
  return out;
}

struct Fixture {
  Graph graph = generate_powerlaw_graph(600, 2.5, 2, 41);
  DegreeContext context = make_degree_context(graph, 42);
  std::vector<NodePair> negatives = negative_sample(graph, graph.num_edges(), 43);
};

// Context whose ideal sequence is the observed one, so every deviation is 0.
DegreeContext perfect_context(const Graph& g) {
  DegreeContext c = make_degree_context(g, 1);
  c.ideal = degree_sequence(g, true);
  c.ideal_ecdf = Ecdf(c.ideal);
  return c;
}

bool is_subsequence(const LabeledEdges& part, const LabeledEdges& whole) {
  auto it = whole.begin();
  for (const auto& e : part) {
    it = std::find(it, whole.end(), e);
    if (it == whole.end()) return false;
    ++it;
  }
  return true;
}

std::size_t positives(const LabeledEdges& edges) {
  return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [](const auto& e) { return e.label; }));
}

}  // namespace

TEST_CASE("ecdf examples") {
  const DegreeSequence seq{3, 1, 2};
  const Ecdf f(seq);
  CHECK(f(2) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(f(3) == 1.0);
  CHECK(f(100) == 1.0);
  CHECK(f(0.5) == 0.0);
  CHECK_THROWS_AS(Ecdf(DegreeSequence{}), ValidationError);
}

TEST_CASE("ecdf is a non-decreasing step function ending at one") {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    DegreeSequence seq(50 + static_cast<std::size_t>(trial) * 7);
    for (auto& d : seq) d = static_cast<Degree>(1 + gen() % 30);
    const Ecdf f(seq);
    CHECK(f(*std::max_element(seq.begin(), seq.end())) == 1.0);
    double previous = 0.0;
    for (double d = 0.0; d <= 32.0; d += 0.25) {
      const double v = f(d);
      const auto count = std::count_if(seq.begin(), seq.end(), [&](Degree x) { return x <= d; });
      CHECK(v == doctest::Approx(static_cast<double>(count) / static_cast<double>(seq.size())).epsilon(1e-14));
      CHECK(v >= previous);
      previous = v;
    }
  }
}

TEST_CASE("pareto inverse CDF examples") {
  CHECK(pareto_inverse_cdf(0.0, 3.0, 2.5) == 3.0);
  CHECK(pareto_inverse_cdf(0.5, 1.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(pareto_inverse_cdf(1.0, 1.0, 2.0), ValidationError);
  CHECK_THROWS_AS(pareto_inverse_cdf(0.5, 0.0, 2.0), ValidationError);
  CHECK_THROWS_AS(pareto_inverse_cdf(0.5, 1.0, 0.0), ValidationError);
}

TEST_CASE("pareto draws have mean beta/(beta-1)") {
  const auto draws = pareto_draws(1.0, 3.0, 100000, 7);
  double sum = 0.0;
  for (double x : draws) sum += x;
  CHECK(std::abs(sum / 1e5 - 1.5) < 0.02);
  CHECK(*std::min_element(draws.begin(), draws.end()) >= 1.0);
}

TEST_CASE("pareto sequence is discretized and seeded") {
  const auto draws = pareto_draws(2.0, 2.2, 500, 9);
  const auto seq = pareto_sequence(2.0, 2.2, 500, 9);
  REQUIRE(seq.size() == 500);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i] == static_cast<Degree>(std::max(1.0, std::round(draws[i]))));
  }
  CHECK(pareto_sequence(2.0, 2.2, 500, 9) == seq);
  CHECK(pareto_sequence(2.0, 2.2, 500, 10) != seq);
  CHECK_THROWS_AS(pareto_sequence(1.0, 2.0, 0, 1), ValidationError);
  // x_m below 1/2 rounds to 0 before the floor at 1.
  const auto small = pareto_sequence(0.1, 5.0, 100, 3);
  CHECK(*std::min_element(small.begin(), small.end()) == 1);
}

TEST_CASE("deviation examples") {
  const Ecdf original(DegreeSequence{1, 1, 2, 2, 2});          // 0.4 at d = 1
  const Ecdf ideal(DegreeSequence{1, 1, 1, 1, 1, 1, 1, 2, 2, 2});  // 0.7 at d = 1
  CHECK(deviation(1, original, ideal) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(signed_deviation(1, original, ideal) == doctest::Approx(-0.3).epsilon(1e-14));
  for (double d : {0.0, 1.0, 2.0, 5.0}) {
    CHECK(deviation(d, original, ideal) == deviation(d, ideal, original));
    CHECK(deviation(d, original, original) == 0.0);
  }
  CHECK_THROWS_AS(deviation(-1.0, original, ideal), ValidationError);
}

TEST_CASE("keep probability examples") {
  const Ecdf original(DegreeSequence{1, 1, 2, 2, 2});
  const Ecdf ideal(DegreeSequence{1, 1, 1, 1, 1, 1, 1, 2, 2, 2});
  CHECK(edge_keep_probability(1, 2, sampler(0.0, SamplerMode::Literal), original, ideal) == 0.0);
  CHECK(edge_keep_probability(1, 2, sampler(1e9, SamplerMode::Literal), original, ideal) == 1.0);
  CHECK(edge_keep_probability(1, 2, sampler(1.0, SamplerMode::Literal), original, ideal) ==
        doctest::Approx(0.3));
  CHECK(edge_keep_probability(1, 1, sampler(1.0, SamplerMode::Literal), original, ideal) ==
        doctest::Approx(0.6));
  CHECK(edge_keep_probability(1, 1, sampler(1.0, SamplerMode::Literal, DeviationAggregation::Max), original,
                              ideal) == doctest::Approx(0.3));
  // Degree 1 is under-represented in the original (0.4 < 0.7): o = 0.3.
  CHECK(edge_keep_probability(1, 2, sampler(1.0, SamplerMode::Directional), original, ideal) ==
        doctest::Approx(0.7));
  CHECK(edge_keep_probability(1, 1, sampler(1e9, SamplerMode::Directional), original, ideal) == 0.0);
  // Over-representation only: swapping the roles leaves nothing to remove.
  CHECK(edge_keep_probability(1, 1, sampler(5.0, SamplerMode::Directional), ideal, original) == 1.0);
  CHECK_THROWS_AS(edge_keep_probability(1, 1, sampler(-0.1, SamplerMode::Literal), original, ideal),
                  ValidationError);
}

TEST_CASE("keep probabilities stay in [0, 1]") {
  Fixture f;
  for (double lambda : {0.0, 0.15, 0.3, 0.45, 1.0, 3.0, 50.0}) {
    for (auto mode : {SamplerMode::Literal, SamplerMode::Directional}) {
      for (auto agg : {DeviationAggregation::Sum, DeviationAggregation::Max}) {
        for (const auto& e : f.graph.edges()) {
          const double p = edge_keep_probability(e, sampler(lambda, mode, agg), f.context);
          CHECK(p >= 0.0);
          CHECK(p <= 1.0);
        }
      }
    }
  }
}

TEST_CASE("expected retained count moves monotonically with lambda") {
  Fixture f;
  const LabeledEdges edges = labeled(f.graph.edges(), 1);
  double literal_prev = -1.0;
  double directional_prev = 2.0 * static_cast<double>(edges.size());
  for (double lambda : {0.0, 0.05, 0.15, 0.3, 0.45, 0.8, 2.0}) {
    const double literal = expected_retained_count(edges, sampler(lambda, SamplerMode::Literal), f.context);
    const double directional = expected_retained_count(edges, sampler(lambda, SamplerMode::Directional), f.context);
    CHECK(literal >= literal_prev);
    CHECK(directional <= directional_prev);
    literal_prev = literal;
    directional_prev = directional;
  }
}

TEST_CASE("directional mode on a perfectly fitted graph is the identity") {
  const Graph g = generate_powerlaw_graph(300, 2.5, 2, 5);
  const DegreeContext c = perfect_context(g);
  const auto negatives = negative_sample(g, 60, 6);
  LabeledEdges train = labeled(std::span(g.edges()).first(60), 1);
  const LabeledEdges neg = labeled(negatives, 0);
  train.insert(train.end(), neg.begin(), neg.end());
  const LabeledEdges calib = labeled(std::span(g.edges()).subspan(60, 10), 1);
  LabeledEdges calib_mixed = calib;
  calib_mixed.insert(calib_mixed.end(), neg.begin(), neg.begin() + 10);
  for (double lambda : {0.3, 5.0}) {
    const SampledEdges out = sample_edges(train, {}, calib_mixed, c, sampler(lambda, SamplerMode::Directional));
    CHECK(out.train == train);
    CHECK(out.val.empty());
    CHECK(out.calib == calib_mixed);
  }
}

TEST_CASE("keep probability one everywhere is the identity") {
  Fixture f;
  // Literal mode with a huge lambda keeps every edge whose endpoints deviate.
  const SamplerConfig cfg = sampler(1e12, SamplerMode::Literal);
  LabeledEdges certain;
  for (const auto& e : labeled(f.graph.edges(), 1)) {
    if (certain.size() < 40 && edge_keep_probability(e.pair, cfg, f.context) == 1.0) certain.push_back(e);
  }
  for (const auto& e : labeled(f.negatives, 0)) {
    if (certain.size() < 80 && edge_keep_probability(e.pair, cfg, f.context) == 1.0) certain.push_back(e);
  }
  REQUIRE(certain.size() == 80);
  const SampledEdges kept = sample_edges(certain, certain, certain, f.context, cfg);
  CHECK(kept.train == certain);
  CHECK(kept.val == certain);
  CHECK(kept.calib == certain);

  LabeledEdges train = labeled(std::span(f.graph.edges()).first(40), 1);
  const LabeledEdges neg = labeled(std::span(f.negatives).first(40), 0);
  train.insert(train.end(), neg.begin(), neg.end());
  // Directional mode at lambda 0 never removes anything.
  const SampledEdges out = sample_edges(train, train, train, f.context, sampler(0.0, SamplerMode::Directional));
  CHECK(out.train == train);
  CHECK(out.calib == train);
}

TEST_CASE("keep probability zero empties calibration") {
  Fixture f;
  const LabeledEdges edges = labeled(std::span(f.graph.edges()).first(30), 1);
  CHECK_THROWS_AS(sample_edges(edges, edges, edges, f.context, sampler(0.0, SamplerMode::Literal)),
                  DegenerateCalibrationError);
}

TEST_CASE("retained count matches the sum of keep probabilities") {
  Fixture f;
  const LabeledEdges pos = labeled(f.graph.edges(), 1);
  LabeledEdges calib = labeled(std::span(f.graph.edges()).first(200), 1);
  const LabeledEdges neg = labeled(f.negatives, 0);
  calib.insert(calib.end(), neg.begin(), neg.end());
  for (auto mode : {SamplerMode::Literal, SamplerMode::Directional}) {
    const SamplerConfig base = sampler(0.3, mode);
    double expected = 0.0;
    double variance = 0.0;
    for (const auto& e : pos) {
      const double p = edge_keep_probability(e.pair, base, f.context);
      expected += p;
      variance += p * (1.0 - p);
    }
    CHECK(expected == doctest::Approx(expected_retained_count(pos, base, f.context)));
    const double sd = std::sqrt(variance);
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const SamplerConfig cfg = sampler(0.3, mode, DeviationAggregation::Sum, seed);
      const SampledEdges out = sample_edges(pos, {}, calib, f.context, cfg);
      const double kept = static_cast<double>(out.retained_positive.size());
      CHECK(std::abs(kept - expected) <= 4.0 * sd);
      total += kept;
    }
    CHECK(std::abs(total / 20.0 - expected) <= 4.0 * sd / std::sqrt(20.0));
  }
}

TEST_CASE("sampled subsets are balanced ordered subsets of their inputs") {
  Fixture f;
  const EdgeSplit split = split_edges(f.graph.edges(), f.negatives, SplitRatios{}, 3);
  for (auto mode : {SamplerMode::Literal, SamplerMode::Directional}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const SampledEdges out =
          sample_edges(split.train, split.val, split.calib, f.context, sampler(0.45, mode, DeviationAggregation::Sum, seed));
      for (const auto* pair : {&out.train, &out.val, &out.calib}) {
        CHECK(positives(*pair) * 2 == pair->size());
      }
      CHECK(is_subsequence(out.train, split.train));
      CHECK(is_subsequence(out.val, split.val));
      CHECK(is_subsequence(out.calib, split.calib));
      std::set<NodePair> positive_inputs;
      for (const auto* s : {&split.train, &split.val}) {
        for (const auto& e : *s) {
          if (e.label) positive_inputs.insert(e.pair);
        }
      }
      for (const auto& p : out.retained_positive) CHECK(positive_inputs.count(p) == 1);
    }
  }
}

TEST_CASE("sampling is deterministic given the seed and independent of input order") {
  Fixture f;
  const EdgeSplit split = split_edges(f.graph.edges(), f.negatives, SplitRatios{}, 4);
  const SamplerConfig cfg = sampler(0.3, SamplerMode::Directional, DeviationAggregation::Sum, 77);
  const SampledEdges a = sample_edges(split.train, split.val, split.calib, f.context, cfg);
  const SampledEdges b = sample_edges(split.train, split.val, split.calib, f.context, cfg);
  CHECK(a.train == b.train);
  CHECK(a.calib == b.calib);
  CHECK(a.retained_positive == b.retained_positive);

  // Retention draws are keyed by edge, so reversing the input keeps the same
  // pre-rebalance positives.
  LabeledEdges reversed = split.train;
  std::reverse(reversed.begin(), reversed.end());
  const SampledEdges r = sample_edges(reversed, split.val, split.calib, f.context, cfg);
  std::vector<NodePair> x = a.retained_positive;
  std::vector<NodePair> y = r.retained_positive;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  CHECK(x == y);
}

TEST_CASE("degree context uses the non-isolated degrees and x_m = d_min") {
  Fixture f;
  const DegreeSequence observed = degree_sequence(f.graph, true);
  CHECK(f.context.ideal.size() == observed.size());
  CHECK(f.context.node_degrees.size() == f.graph.num_nodes());
  CHECK(*std::min_element(f.context.ideal.begin(), f.context.ideal.end()) >= f.context.fit.d_min);
  const PowerLawFit fit = fit_power_law(observed);
  CHECK(f.context.fit.d_min == fit.d_min);
  CHECK(f.context.fit.beta_hat == fit.beta_hat);
  CHECK_THROWS_AS(make_degree_context(Graph(5, {}), 1), ValidationError);
}

TEST_CASE("graph density") {
  CHECK(graph_density(4, 6) == 1.0);
  CHECK(graph_density(10, 9) == doctest::Approx(0.2));
  CHECK(graph_density(1, 0) == 0.0);
}
