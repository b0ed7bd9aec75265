#include "clp/harness.hpp"

#include "clp/errors.hpp"
#include "clp/io.hpp"
#include "clp/powerlaw.hpp"
#include "clp/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace clp {

namespace {

using Json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ValidationError("setting '" + std::string(key) + "': '" + std::string(value) + "' is not " +
                        std::string(expected));
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || std::isnan(out)) {
    bad_value(key, value, "a real number");
  }
  return out;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "a non-negative integer");
  return out;
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Setting {
  const char* key;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Setting real_setting(const char* key, Member member) {
  return {key, [member](RunConfig& c, std::string_view k, std::string_view v) { member(c) = parse_real(k, v); },
          [member](const RunConfig& c) { return format_real(member(const_cast<RunConfig&>(c))); }};
}

template <typename T, typename Member>
Setting unsigned_setting(const char* key, Member member) {
  return {key,
          [member](RunConfig& c, std::string_view k, std::string_view v) {
            const auto raw = parse_unsigned(k, v);
            if (raw > std::numeric_limits<T>::max()) bad_value(k, v, "in range");
            member(c) = static_cast<T>(raw);
          },
          [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
}

template <typename Member>
Setting text_setting(const char* key, Member member) {
  return {key, [member](RunConfig& c, std::string_view, std::string_view v) { member(c) = std::string(v); },
          [member](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); }};
}

const std::vector<Setting>& settings_table() {
  static const std::vector<Setting> table = [] {
    std::vector<Setting> t;
    t.push_back(real_setting("alpha", [](RunConfig& c) -> double& { return c.alpha; }));
    t.push_back(unsigned_setting<std::uint64_t>("seed", [](RunConfig& c) -> std::uint64_t& { return c.master_seed; }));
    t.push_back(unsigned_setting<std::size_t>("splits", [](RunConfig& c) -> std::size_t& { return c.splits; }));
    t.push_back(
        unsigned_setting<std::size_t>("repetitions", [](RunConfig& c) -> std::size_t& { return c.repetitions; }));
    t.push_back({"arms",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   if (v == "cqr,s-cqr" || v == "s-cqr,cqr" || v == "both") {
                     c.run_cqr = c.run_scqr = true;
                   } else if (v == "cqr") {
                     c.run_cqr = true;
                     c.run_scqr = false;
                   } else if (v == "s-cqr") {
                     c.run_cqr = false;
                     c.run_scqr = true;
                   } else {
                     bad_value(k, v, "one of cqr, s-cqr, cqr,s-cqr");
                   }
                 },
                 [](const RunConfig& c) -> std::string {
                   if (c.run_cqr && c.run_scqr) return "cqr,s-cqr";
                   return c.run_cqr ? "cqr" : "s-cqr";
                 }});
    t.push_back(real_setting("split.train", [](RunConfig& c) -> double& { return c.ratios.train; }));
    t.push_back(real_setting("split.val", [](RunConfig& c) -> double& { return c.ratios.val; }));
    t.push_back(real_setting("split.calib", [](RunConfig& c) -> double& { return c.ratios.calib; }));
    t.push_back(real_setting("split.test", [](RunConfig& c) -> double& { return c.ratios.test; }));
    t.push_back(unsigned_setting<std::size_t>("model.hidden_dim",
                                              [](RunConfig& c) -> std::size_t& { return c.model.hidden_dim; }));
    t.push_back(
        unsigned_setting<std::size_t>("model.layers", [](RunConfig& c) -> std::size_t& { return c.model.num_layers; }));
    t.push_back({"model.aggregation",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   if (v == "gcn") {
                     c.model.aggregation = Aggregation::GcnNormalized;
                   } else if (v == "mean") {
                     c.model.aggregation = Aggregation::MeanNeighbor;
                   } else {
                     bad_value(k, v, "gcn or mean");
                   }
                 },
                 [](const RunConfig& c) -> std::string {
                   return c.model.aggregation == Aggregation::GcnNormalized ? "gcn" : "mean";
                 }});
    t.push_back(
        unsigned_setting<std::size_t>("model.epochs", [](RunConfig& c) -> std::size_t& { return c.model.epochs; }));
    t.push_back(real_setting("model.learning_rate", [](RunConfig& c) -> double& { return c.model.learning_rate; }));
    t.push_back(real_setting("model.momentum", [](RunConfig& c) -> double& { return c.model.momentum; }));
    t.push_back(unsigned_setting<std::size_t>("model.batch_size",
                                              [](RunConfig& c) -> std::size_t& { return c.model.batch_size; }));
    t.push_back(unsigned_setting<std::size_t>("quantile.epochs",
                                              [](RunConfig& c) -> std::size_t& { return c.quantile.epochs; }));
    t.push_back(
        real_setting("quantile.learning_rate", [](RunConfig& c) -> double& { return c.quantile.learning_rate; }));
    t.push_back(unsigned_setting<std::size_t>("quantile.batch_size",
                                              [](RunConfig& c) -> std::size_t& { return c.quantile.batch_size; }));
    t.push_back(unsigned_setting<std::size_t>("quantile.hidden_dim",
                                              [](RunConfig& c) -> std::size_t& { return c.quantile.hidden_dim; }));
    t.push_back(real_setting("sampler.lambda", [](RunConfig& c) -> double& { return c.sampler.lambda; }));
    t.push_back({"sampler.mode",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   if (v == "literal") {
                     c.sampler.mode = SamplerMode::Literal;
                   } else if (v == "directional") {
                     c.sampler.mode = SamplerMode::Directional;
                   } else {
                     bad_value(k, v, "literal or directional");
                   }
                 },
                 [](const RunConfig& c) -> std::string {
                   return c.sampler.mode == SamplerMode::Literal ? "literal" : "directional";
                 }});
    t.push_back({"sampler.agg",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   if (v == "sum") {
                     c.sampler.aggregation = DeviationAggregation::Sum;
                   } else if (v == "max") {
                     c.sampler.aggregation = DeviationAggregation::Max;
                   } else {
                     bad_value(k, v, "sum or max");
                   }
                 },
                 [](const RunConfig& c) -> std::string {
                   return c.sampler.aggregation == DeviationAggregation::Sum ? "sum" : "max";
                 }});
    t.push_back(text_setting("data.edge_list", [](RunConfig& c) -> std::string& { return c.dataset.edge_list; }));
    t.push_back(text_setting("data.features", [](RunConfig& c) -> std::string& { return c.dataset.features; }));
    t.push_back(unsigned_setting<std::size_t>("data.num_nodes",
                                              [](RunConfig& c) -> std::size_t& { return c.dataset.num_nodes; }));
    t.push_back(unsigned_setting<std::size_t>("data.feature_dim",
                                              [](RunConfig& c) -> std::size_t& { return c.dataset.feature_dim; }));
    t.push_back(unsigned_setting<std::uint64_t>("data.graph_seed",
                                                [](RunConfig& c) -> std::uint64_t& { return c.dataset.graph_seed; }));
    t.push_back(unsigned_setting<std::size_t>("synth.nodes",
                                              [](RunConfig& c) -> std::size_t& { return c.dataset.synth_nodes; }));
    t.push_back(real_setting("synth.beta", [](RunConfig& c) -> double& { return c.dataset.synth_beta; }));
    t.push_back(unsigned_setting<Degree>("synth.dmin", [](RunConfig& c) -> Degree& { return c.dataset.synth_dmin; }));
    t.push_back(unsigned_setting<std::size_t>("synth.clique_size",
                                              [](RunConfig& c) -> std::size_t& { return c.dataset.clique_size; }));
    t.push_back(unsigned_setting<std::size_t>("synth.clique_count",
                                              [](RunConfig& c) -> std::size_t& { return c.dataset.clique_count; }));
    t.push_back(unsigned_setting<std::uint64_t>(
        "synth.clique_variant", [](RunConfig& c) -> std::uint64_t& { return c.dataset.clique_variant; }));
    return t;
  }();
  return table;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json config_echo(const RunConfig& config) {
  Json echo = Json::object();
  for (const auto& [key, value] : config_settings(config)) echo[key] = value;
  return echo;
}

Json summary_json(const ArmSummary& s) {
  Json j;
  j["mean_coverage"] = number_or_null(s.mean_coverage);
  j["std_coverage"] = number_or_null(s.std_coverage);
  j["mean_length"] = number_or_null(s.mean_length);
  j["std_length"] = number_or_null(s.std_length);
  j["trials"] = s.trials;
  j["failed"] = s.failed;
  j["mean_ks_before"] = number_or_null(s.mean_ks_before);
  j["mean_ks_after"] = number_or_null(s.mean_ks_after);
  j["mean_density_after"] = number_or_null(s.mean_density_after);
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::vector<double> ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> r(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double average = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = average;
    i = j + 1;
  }
  return r;
}

// 2E / (N (N - 1)) for a possibly fractional expected edge count.
double expected_density(std::size_t num_nodes, double edges) {
  if (num_nodes < 2) return 0.0;
  const double n = static_cast<double>(num_nodes);
  return 2.0 * edges / (n * (n - 1.0));
}

double power_law_ks(const Graph& graph) {
  const DegreeSequence degrees = degree_sequence(graph, /*drop_isolated=*/true);
  if (degrees.empty()) return std::numeric_limits<double>::quiet_NaN();
  return fit_power_law(degrees).ks;
}

LabeledEdges concat(std::span<const LabeledEdge> a, std::span<const LabeledEdge> b) {
  LabeledEdges out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<double> labels_of(std::span<const LabeledEdge> edges) {
  std::vector<double> y;
  y.reserve(edges.size());
  for (const auto& e : edges) y.push_back(static_cast<double>(e.label));
  return y;
}

// Fits the quantile heads on `fit_edges`, calibrates on `calib`, evaluates on
// the untouched test set.
ConformalReport conformal_arm(const RunConfig& config, const TrialBase& base, std::span<const LabeledEdge> fit_edges,
                              std::span<const LabeledEdge> calib) {
  const Matrix fit_x = edge_embeddings(base.embeddings, fit_edges);
  const auto fit_y = labels_of(fit_edges);
  const QuantileModel model =
      fit_quantile_functions(fit_x, fit_y, config.alpha, config.quantile, derive_seed(base.seed, 0, "quantile"));
  const Matrix calib_x = edge_embeddings(base.embeddings, calib);
  const auto calib_y = labels_of(calib);
  const Matrix test_x = edge_embeddings(base.embeddings, base.split.test);
  const auto test_y = labels_of(base.split.test);
  const ConformalResult result = conformalize(model, calib_x, calib_y, test_x, config.alpha);
  ConformalReport report = evaluate(result.intervals, test_y);
  report.q_hat = result.q_hat;
  report.alpha = config.alpha;
  report.calib_size = calib.size();
  return report;
}

}  // namespace

void validate(const RunConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (config.trials() == 0) throw ValidationError("trial count must be >= 1");
  if (!config.run_cqr && !config.run_scqr) throw ValidationError("no arm selected");
  split_quotas(1, config.ratios);
  if (config.ratios.train <= 0.0 || config.ratios.calib <= 0.0 || config.ratios.test <= 0.0) {
    throw ValidationError("train, calib and test ratios must be positive");
  }
  if (!(config.sampler.lambda >= 0.0) || !std::isfinite(config.sampler.lambda)) {
    throw ValidationError("sampler.lambda must be a finite value >= 0");
  }
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const auto& s : settings_table()) {
    if (key == s.key) {
      s.set(config, key, value);
      return;
    }
  }
  throw ValidationError("unknown setting '" + std::string(key) + "'");
}

void apply_config_text(RunConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    try {
      apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig config;
  apply_config_text(config, read_text_file(path));
  return config;
}

std::vector<std::pair<std::string, std::string>> config_settings(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : settings_table()) out.emplace_back(s.key, s.get(config));
  return out;
}

Dataset load_dataset(const DatasetConfig& config) {
  const std::optional<std::size_t> hint =
      config.num_nodes > 0 ? std::optional<std::size_t>(config.num_nodes) : std::nullopt;
  Graph graph = config.edge_list.empty()
                    ? generate_powerlaw_graph(config.synth_nodes, config.synth_beta, config.synth_dmin,
                                              derive_seed(config.graph_seed, 0, "graph"))
                    : load_edge_list_file(config.edge_list, hint);
  if (config.clique_count > 0) {
    graph = inject_cliques(graph, config.clique_size, config.clique_count,
                           derive_seed(config.graph_seed, config.clique_variant, "cliques"));
  }
  if (!config.features.empty()) {
    graph = graph.with_features(load_features_file(config.features, graph.num_nodes()));
  } else {
    if (config.feature_dim == 0) throw ValidationError("data.feature_dim must be positive");
    graph = graph.with_features(
        random_features(graph.num_nodes(), config.feature_dim, derive_seed(config.graph_seed, 0, "features")));
  }
  Dataset ds;
  ds.negatives = negative_sample(graph, graph.num_edges(), derive_seed(config.graph_seed, 0, "negatives"));
  ds.ks = power_law_ks(graph);
  ds.graph = std::move(graph);
  return ds;
}

std::optional<ArmSummary> ExperimentReport::summary(std::string_view arm) const {
  std::vector<double> coverage;
  std::vector<double> length;
  std::vector<double> ks_before;
  std::vector<double> ks_after;
  std::vector<double> density;
  ArmSummary s;
  for (const auto& t : trials) {
    if (t.arm != arm) continue;
    ++s.trials;
    if (!t.ok()) {
      ++s.failed;
      continue;
    }
    coverage.push_back(t.report.empirical_coverage);
    length.push_back(t.report.avg_interval_length);
    ks_before.push_back(t.ks_before);
    ks_after.push_back(t.ks_after);
    density.push_back(t.density_after);
  }
  if (coverage.empty()) {
    if (s.trials == 0) return std::nullopt;
    constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
    s.mean_coverage = s.std_coverage = s.mean_length = s.std_length = kNaN;
    s.mean_ks_before = s.mean_ks_after = s.mean_density_after = kNaN;
    return s;
  }
  s.mean_coverage = mean(coverage);
  s.std_coverage = sample_std(coverage);
  s.mean_length = mean(length);
  s.std_length = sample_std(length);
  s.mean_ks_before = mean(ks_before);
  s.mean_ks_after = mean(ks_after);
  s.mean_density_after = mean(density);
  return s;
}

std::optional<double> ExperimentReport::improvement_pct() const {
  const auto cqr = summary(kArmCqr);
  const auto scqr = summary(kArmScqr);
  if (!cqr || !scqr || cqr->failed == cqr->trials || scqr->failed == scqr->trials) return std::nullopt;
  return 100.0 * (cqr->mean_length - scqr->mean_length) / cqr->mean_length;
}

TrialBase prepare_trial(const RunConfig& config, const Dataset& dataset, std::size_t trial) {
  TrialBase base;
  base.trial = trial;
  base.split_index = trial / config.repetitions;
  base.seed = derive_seed(config.master_seed, trial, "trial");
  const auto positives = dataset.graph.edges();
  base.split = split_edges(positives, dataset.negatives, config.ratios,
                           derive_seed(config.master_seed, base.split_index, "split"));
  base.subgraph = training_subgraph(dataset.graph, base.split);
  base.params = train_link_predictor(base.subgraph, base.split.train, base.split.val, config.model,
                                     derive_seed(base.seed, 0, "model"));
  base.embeddings =
      encode_nodes(base.params, Propagation(base.subgraph, base.params.aggregation), base.subgraph.features());
  return base;
}

DegreeContext trial_degree_context(const TrialBase& base) {
  return make_degree_context(base.subgraph, derive_seed(base.seed, 0, "ideal-sequence"));
}

TrialRecord run_cqr_arm(const RunConfig& config, const TrialBase& base) {
  TrialRecord r;
  r.arm = kArmCqr;
  r.trial = base.trial;
  r.split = base.split_index;
  r.seed = base.seed;
  r.ks_before = r.ks_after = power_law_ks(base.subgraph);
  r.density_before = r.density_after = graph_density(base.subgraph.num_nodes(), base.subgraph.num_edges());
  const LabeledEdges fit_edges = concat(base.split.train, base.split.val);
  r.report = conformal_arm(config, base, fit_edges, base.split.calib);
  return r;
}

TrialRecord run_scqr_arm(const RunConfig& config, const TrialBase& base, const SamplerConfig& sampler) {
  TrialRecord r;
  r.arm = kArmScqr;
  r.trial = base.trial;
  r.split = base.split_index;
  r.seed = base.seed;
  r.density_before = graph_density(base.subgraph.num_nodes(), base.subgraph.num_edges());
  const DegreeContext context = trial_degree_context(base);
  r.ks_before = context.fit.ks;

  SamplerConfig cfg = sampler;
  cfg.seed = derive_seed(base.seed, 0, "sampler");
  SampledEdges sampled;
  try {
    sampled = sample_edges(base.split.train, base.split.val, base.split.calib, context, cfg);
  } catch (const DegenerateCalibrationError& e) {
    r.failure = std::string("degenerate-calibration: ") + e.what();
    return r;
  }
  const Graph retained(base.subgraph.num_nodes(), sampled.retained_positive);
  r.density_after = graph_density(retained.num_nodes(), retained.num_edges());
  r.ks_after = power_law_ks(retained);
  const LabeledEdges fit_edges = concat(sampled.train, sampled.val);
  if (fit_edges.empty()) {
    r.failure = "empty-training: sampling removed every train and val edge of one class";
    return r;
  }
  r.report = conformal_arm(config, base, fit_edges, sampled.calib);
  return r;
}

ExperimentReport run_pipeline(const RunConfig& config) {
  validate(config);
  return run_pipeline(config, load_dataset(config.dataset));
}

ExperimentReport run_pipeline(const RunConfig& config, const Dataset& dataset) {
  validate(config);
  ExperimentReport report;
  report.config = config;
  for (std::size_t i = 0; i < config.trials(); ++i) {
    const TrialBase base = prepare_trial(config, dataset, i);
    if (config.run_cqr) report.trials.push_back(run_cqr_arm(config, base));
    if (config.run_scqr) report.trials.push_back(run_scqr_arm(config, base, config.sampler));
  }
  return report;
}

LambdaSweep sweep_lambda(const RunConfig& config, std::span<const double> lambdas) {
  validate(config);
  if (lambdas.empty()) throw ValidationError("sweep_lambda: no lambda values");
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("sweep_lambda: lambda must be finite and >= 0");
  }
  const Dataset dataset = load_dataset(config.dataset);
  std::vector<std::vector<TrialRecord>> per_lambda(lambdas.size());
  std::vector<std::vector<double>> expected(lambdas.size());
  for (std::size_t i = 0; i < config.trials(); ++i) {
    const TrialBase base = prepare_trial(config, dataset, i);
    const DegreeContext context = trial_degree_context(base);
    const LabeledEdges fit_edges = concat(base.split.train, base.split.val);
    LabeledEdges positives;
    for (const auto& e : fit_edges) {
      if (e.label) positives.push_back(e);
    }
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      SamplerConfig sampler = config.sampler;
      sampler.lambda = lambdas[k];
      per_lambda[k].push_back(run_scqr_arm(config, base, sampler));
      expected[k].push_back(expected_density(base.subgraph.num_nodes(), expected_retained_count(positives, sampler, context)));
    }
  }

  LambdaSweep sweep;
  sweep.config = config;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    ExperimentReport r;
    r.trials = per_lambda[k];
    const ArmSummary s = *r.summary(kArmScqr);
    LambdaRow row;
    row.lambda = lambdas[k];
    row.density = s.mean_density_after;
    row.ks = s.mean_ks_after;
    row.coverage = s.mean_coverage;
    row.avg_length = s.mean_length;
    row.expected_density = mean(expected[k]);
    row.failed = s.failed;
    sweep.rows.push_back(row);
  }
  return sweep;
}

CliqueSweep sweep_cliques(const RunConfig& config, std::span<const std::pair<std::size_t, std::size_t>> grid,
                          std::size_t variants) {
  validate(config);
  if (grid.empty()) throw ValidationError("sweep_cliques: empty grid");
  if (variants == 0) throw ValidationError("sweep_cliques: need at least one variant");
  CliqueSweep sweep;
  sweep.config = config;
  sweep.variants = variants;
  for (const auto& [m, n] : grid) {
    CliqueRow row;
    row.clique_size = m;
    row.clique_count = n;
    std::vector<double> coverage;
    for (std::size_t v = 0; v < variants; ++v) {
      RunConfig cfg = config;
      cfg.dataset.clique_size = m;
      cfg.dataset.clique_count = n;
      cfg.dataset.clique_variant = v;
      cfg.master_seed = derive_seed(config.master_seed, v, "clique-variant");
      cfg.run_cqr = true;
      cfg.run_scqr = false;
      const Dataset dataset = load_dataset(cfg.dataset);
      const ExperimentReport report = run_pipeline(cfg, dataset);
      const ArmSummary s = *report.summary(kArmCqr);
      row.variant_ks.push_back(dataset.ks);
      row.variant_length.push_back(s.mean_length);
      coverage.push_back(s.mean_coverage);
    }
    row.mean_ks = mean(row.variant_ks);
    row.mean_length = mean(row.variant_length);
    row.mean_coverage = mean(coverage);
    sweep.rows.push_back(std::move(row));
  }
  return sweep;
}

double mean(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
  if (x.size() < 2) throw ValidationError("spearman: need at least two points");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = mean(rx);
  const double my = mean(ry);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

std::string report_json(const ExperimentReport& report) {
  Json j;
  j["config_echo"] = config_echo(report.config);
  j["trials"] = Json::array();
  for (const auto& t : report.trials) {
    Json tj;
    tj["arm"] = t.arm;
    const bool ok = t.ok();
    tj["coverage"] = ok ? number_or_null(t.report.empirical_coverage) : Json(nullptr);
    tj["avg_length"] = ok ? number_or_null(t.report.avg_interval_length) : Json(nullptr);
    tj["q_hat"] = ok ? number_or_null(t.report.q_hat) : Json(nullptr);
    tj["ks_before"] = number_or_null(t.ks_before);
    tj["ks_after"] = ok ? number_or_null(t.ks_after) : Json(nullptr);
    tj["seed"] = t.seed;
    tj["trial"] = t.trial;
    tj["split"] = t.split;
    tj["status"] = ok ? std::string("ok") : t.failure;
    tj["calib_size"] = t.report.calib_size;
    tj["test_size"] = t.report.test_size;
    tj["density_before"] = number_or_null(t.density_before);
    tj["density_after"] = ok ? number_or_null(t.density_after) : Json(nullptr);
    j["trials"].push_back(std::move(tj));
  }
  Json summary = Json::object();
  for (const auto arm : {kArmCqr, kArmScqr}) {
    if (const auto s = report.summary(arm)) summary[std::string(arm)] = summary_json(*s);
  }
  const auto improvement = report.improvement_pct();
  summary["improvement_pct"] = improvement ? number_or_null(*improvement) : Json(nullptr);
  j["summary"] = std::move(summary);
  return dump(j);
}

std::string sweep_json(const LambdaSweep& sweep) {
  Json j;
  j["config_echo"] = config_echo(sweep.config);
  j["rows"] = Json::array();
  for (const auto& r : sweep.rows) {
    Json rj;
    rj["lambda"] = r.lambda;
    rj["density"] = number_or_null(r.density);
    rj["ks"] = number_or_null(r.ks);
    rj["coverage"] = number_or_null(r.coverage);
    rj["avg_length"] = number_or_null(r.avg_length);
    rj["expected_density"] = number_or_null(r.expected_density);
    rj["failed"] = r.failed;
    j["rows"].push_back(std::move(rj));
  }
  return dump(j);
}

std::string sweep_json(const CliqueSweep& sweep) {
  Json j;
  j["config_echo"] = config_echo(sweep.config);
  j["variants"] = sweep.variants;
  j["rows"] = Json::array();
  std::vector<double> ks;
  std::vector<double> length;
  for (const auto& r : sweep.rows) {
    Json rj;
    rj["clique_size"] = r.clique_size;
    rj["clique_count"] = r.clique_count;
    rj["mean_ks"] = number_or_null(r.mean_ks);
    rj["mean_length"] = number_or_null(r.mean_length);
    rj["mean_coverage"] = number_or_null(r.mean_coverage);
    rj["variant_ks"] = r.variant_ks;
    rj["variant_length"] = r.variant_length;
    j["rows"].push_back(std::move(rj));
    ks.push_back(r.mean_ks);
    length.push_back(r.mean_length);
  }
  j["spearman_ks_length"] = ks.size() >= 2 ? number_or_null(spearman(ks, length)) : Json(nullptr);
  return dump(j);
}

std::string sweep_csv(const LambdaSweep& sweep) {
  std::ostringstream out;
  out << "lambda,density,ks,coverage,avg_length,expected_density,failed\n";
  for (const auto& r : sweep.rows) {
    out << format_real(r.lambda) << ',' << format_real(r.density) << ',' << format_real(r.ks) << ','
        << format_real(r.coverage) << ',' << format_real(r.avg_length) << ',' << format_real(r.expected_density)
        << ',' << r.failed << '\n';
  }
  return out.str();
}

std::string sweep_csv(const CliqueSweep& sweep) {
  std::ostringstream out;
  out << "clique_size,clique_count,mean_ks,mean_length,mean_coverage\n";
  for (const auto& r : sweep.rows) {
    out << r.clique_size << ',' << r.clique_count << ',' << format_real(r.mean_ks) << ','
        << format_real(r.mean_length) << ',' << format_real(r.mean_coverage) << '\n';
  }
  return out.str();
}

void write_report(const ExperimentReport& report, const std::filesystem::path& path) {
  write_text_file(path, report_json(report));
}

}  // namespace clp
