#include "clp/graph.hpp"

#include "clp/errors.hpp"
#include "clp/io.hpp"
#include "clp/powerlaw.hpp"
#include "clp/rng.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <charconv>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

namespace clp {

namespace {

std::mutex& warning_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& warning_handler() {
  static WarningHandler handler = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}

// Splits a line into whitespace-separated tokens.
std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    ++line_no;
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line_no, line);
    if (end == text.size()) break;
    pos = end + 1;
  }
}

bool is_blank_or_comment(std::string_view line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

long long parse_integer(std::string_view token, std::size_t line_no) {
  long long value = 0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(line_no, "invalid integer token '" + std::string(token) + "'");
  }
  return value;
}

double parse_real(std::string_view token, std::size_t line_no) {
  double value = 0.0;
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(line_no, "invalid real token '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(warning_mutex());
  std::swap(warning_handler(), handler);
  return handler;
}

void warn(std::string_view message) {
  std::lock_guard lock(warning_mutex());
  if (warning_handler()) warning_handler()(message);
}

Graph::Graph(std::size_t num_nodes, std::vector<NodePair> edges, std::optional<Matrix> features)
    : num_nodes_(num_nodes), edges_(std::move(edges)), features_(std::move(features)) {
  for (const auto& e : edges_) {
    if (e.u == e.v) throw ValidationError("self-loop on node " + std::to_string(e.u));
    if (e.v >= num_nodes_) {
      throw ValidationError("edge endpoint " + std::to_string(e.v) + " >= num_nodes " +
                            std::to_string(num_nodes_));
    }
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  if (features_ && static_cast<std::size_t>(features_->rows()) != num_nodes_) {
    throw ValidationError("feature matrix has " + std::to_string(features_->rows()) +
                          " rows, expected " + std::to_string(num_nodes_));
  }
}

bool Graph::has_edge(NodeId a, NodeId b) const {
  if (a == b) return false;
  return std::binary_search(edges_.begin(), edges_.end(), NodePair(a, b));
}

const Matrix& Graph::features() const {
  if (!features_) throw ValidationError("graph has no node features");
  return *features_;
}

Graph Graph::with_features(Matrix features) const {
  Graph g = *this;
  if (static_cast<std::size_t>(features.rows()) != num_nodes_) {
    throw ValidationError("feature matrix row count does not match num_nodes");
  }
  g.features_ = std::move(features);
  return g;
}

Graph Graph::with_edges(std::vector<NodePair> edges) const {
  return Graph(num_nodes_, std::move(edges), features_);
}

std::vector<Degree> Graph::degrees() const {
  std::vector<Degree> deg(num_nodes_, 0);
  for (const auto& e : edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  return deg;
}

Graph load_edge_list(std::string_view text, std::optional<std::size_t> num_nodes_hint) {
  std::vector<NodePair> edges;
  std::unordered_set<std::uint64_t> seen_directed;
  std::size_t max_index_plus_one = 0;
  std::size_t reversed = 0;
  std::size_t self_loops = 0;

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (is_blank_or_comment(line)) return;
    const auto tokens = tokenize(line);
    if (tokens.size() < 2) throw ParseError(line_no, "expected two node ids");
    const long long a = parse_integer(tokens[0], line_no);
    const long long b = parse_integer(tokens[1], line_no);
    if (a < 0 || b < 0) {
      throw ValidationError("line " + std::to_string(line_no) + ": negative node id");
    }
    if (a > std::numeric_limits<NodeId>::max() - 1 || b > std::numeric_limits<NodeId>::max() - 1) {
      throw ValidationError("line " + std::to_string(line_no) + ": node id out of range");
    }
    max_index_plus_one = std::max<std::size_t>(max_index_plus_one, std::max(a, b) + 1);
    if (a == b) {
      ++self_loops;
      return;
    }
    const auto ua = static_cast<NodeId>(a);
    const auto ub = static_cast<NodeId>(b);
    const std::uint64_t forward = (static_cast<std::uint64_t>(ua) << 32) | ub;
    const std::uint64_t backward = (static_cast<std::uint64_t>(ub) << 32) | ua;
    if (seen_directed.contains(backward) && !seen_directed.contains(forward)) ++reversed;
    seen_directed.insert(forward);
    edges.emplace_back(ua, ub);
  });

  if (reversed > 0) {
    warn("edge list contains " + std::to_string(reversed) +
         " reverse-direction duplicates; collapsed to undirected edges");
  }
  if (self_loops > 0) warn("dropped " + std::to_string(self_loops) + " self-loop lines");

  const std::size_t num_nodes = std::max(max_index_plus_one, num_nodes_hint.value_or(0));
  return Graph(num_nodes, std::move(edges));
}

Graph load_edge_list_file(const std::filesystem::path& path, std::optional<std::size_t> num_nodes_hint) {
  return load_edge_list(read_text_file(path), num_nodes_hint);
}

Matrix load_features(std::string_view text, std::size_t num_nodes) {
  std::vector<std::pair<std::size_t, std::vector<double>>> rows;
  std::optional<std::size_t> dim;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (is_blank_or_comment(line)) return;
    const auto tokens = tokenize(line);
    if (tokens.size() < 2) throw ParseError(line_no, "expected node id followed by features");
    const long long id = parse_integer(tokens[0], line_no);
    if (id < 0 || static_cast<std::size_t>(id) >= num_nodes) {
      throw ValidationError("line " + std::to_string(line_no) + ": node id out of range");
    }
    if (dim && *dim != tokens.size() - 1) {
      throw ParseError(line_no, "inconsistent feature dimension");
    }
    dim = tokens.size() - 1;
    std::vector<double> values;
    values.reserve(*dim);
    for (std::size_t i = 1; i < tokens.size(); ++i) values.push_back(parse_real(tokens[i], line_no));
    rows.emplace_back(static_cast<std::size_t>(id), std::move(values));
  });
  if (!dim) throw ValidationError("feature file contains no rows");
  Matrix features = Matrix::Zero(static_cast<Eigen::Index>(num_nodes), static_cast<Eigen::Index>(*dim));
  for (const auto& [id, values] : rows) {
    for (std::size_t j = 0; j < values.size(); ++j) {
      features(static_cast<Eigen::Index>(id), static_cast<Eigen::Index>(j)) = values[j];
    }
  }
  return features;
}

Matrix load_features_file(const std::filesystem::path& path, std::size_t num_nodes) {
  return load_features(read_text_file(path), num_nodes);
}

void write_edge_list(std::ostream& out, const Graph& graph) {
  out << "# nodes " << graph.num_nodes() << " edges " << graph.num_edges() << '\n';
  for (const auto& e : graph.edges()) out << e.u << ' ' << e.v << '\n';
}

Matrix random_features(std::size_t num_nodes, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(static_cast<Eigen::Index>(num_nodes), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = normal(rng);
  }
  return x;
}

std::vector<NodePair> negative_sample(const Graph& graph, std::size_t count, std::uint64_t seed) {
  const std::size_t m = graph.num_nodes();
  const std::size_t all_pairs = m < 2 ? 0 : m * (m - 1) / 2;
  const std::size_t available = all_pairs - graph.num_edges();
  if (count > available) {
    throw CapacityError("requested " + std::to_string(count) + " negative pairs but only " +
                        std::to_string(available) + " non-edges exist");
  }
  std::vector<NodePair> out;
  out.reserve(count);
  if (count == 0) return out;
  Rng rng(seed);

  if (count * 2 > available) {
    // Dense request: enumerate all non-edges and take a uniform subset.
    std::vector<NodePair> pool;
    pool.reserve(available);
    for (NodeId u = 0; u < m; ++u) {
      for (NodeId v = u + 1; v < m; ++v) {
        if (!graph.has_edge(u, v)) pool.emplace_back(u, v);
      }
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(count);
    return pool;
  }

  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(count * 2);
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(m - 1));
  while (out.size() < count) {
    const NodeId a = pick(rng);
    const NodeId b = pick(rng);
    if (a == b || graph.has_edge(a, b)) continue;
    const NodePair p(a, b);
    if (chosen.insert(p.key()).second) out.push_back(p);
  }
  return out;
}

std::vector<std::size_t> split_quotas(std::size_t n, const SplitRatios& ratios) {
  const std::array<double, 4> r = {ratios.train, ratios.val, ratios.calib, ratios.test};
  double sum = 0.0;
  for (double x : r) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("split ratios must be non-negative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("split ratios must sum to 1 (got " + std::to_string(sum) + ")");
  }
  std::vector<std::size_t> quota(4);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    quota[i] = static_cast<std::size_t>(std::floor(r[i] * static_cast<double>(n) + 1e-9));
    assigned += quota[i];
  }
  // Leftovers go round-robin starting at train, skipping empty subsets.
  for (std::size_t i = 0; assigned < n; i = (i + 1) % 4) {
    if (r[i] > 0.0) {
      ++quota[i];
      ++assigned;
    }
  }
  while (assigned > n) {
    // Only reachable through the epsilon above; trim from the back.
    for (std::size_t i = 4; i-- > 0 && assigned > n;) {
      if (quota[i] > 0) {
        --quota[i];
        --assigned;
      }
    }
  }
  return quota;
}

EdgeSplit split_edges(std::span<const NodePair> positives, std::span<const NodePair> negatives,
                      const SplitRatios& ratios, std::uint64_t seed) {
  if (positives.size() != negatives.size()) {
    throw ValidationError("split_edges requires as many negatives as positives");
  }
  const auto quota = split_quotas(positives.size(), ratios);

  Rng rng(seed);
  std::vector<NodePair> pos(positives.begin(), positives.end());
  std::vector<NodePair> neg(negatives.begin(), negatives.end());
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  EdgeSplit split;
  std::array<LabeledEdges*, 4> parts = {&split.train, &split.val, &split.calib, &split.test};
  std::size_t offset = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    auto& part = *parts[i];
    part.reserve(2 * quota[i]);
    for (std::size_t k = 0; k < quota[i]; ++k) part.push_back({pos[offset + k], 1});
    for (std::size_t k = 0; k < quota[i]; ++k) part.push_back({neg[offset + k], 0});
    offset += quota[i];
  }
  return split;
}

Graph training_subgraph(const Graph& graph, const EdgeSplit& split) {
  std::vector<NodePair> edges;
  for (const auto* part : {&split.train, &split.val}) {
    for (const auto& e : *part) {
      if (e.label == 1) edges.push_back(e.pair);
    }
  }
  if (edges.empty()) warn("training subgraph is edgeless: train and val hold no positive edges");
  return graph.with_edges(std::move(edges));
}

DegreeSequence degree_sequence(const Graph& graph, bool drop_isolated) {
  auto deg = graph.degrees();
  if (drop_isolated) std::erase(deg, Degree{0});
  return deg;
}

Graph inject_cliques(const Graph& graph, std::size_t clique_size, std::size_t clique_count,
                     std::uint64_t seed) {
  if (clique_size < 2) throw ValidationError("clique size must be at least 2");
  if (clique_size > graph.num_nodes()) throw ValidationError("clique size exceeds node count");
  if (clique_count == 0) return graph;

  Rng rng(seed);
  std::vector<NodePair> edges(graph.edges().begin(), graph.edges().end());
  std::vector<NodeId> nodes(graph.num_nodes());
  std::iota(nodes.begin(), nodes.end(), NodeId{0});
  for (std::size_t c = 0; c < clique_count; ++c) {
    // Partial Fisher-Yates: the first clique_size slots become a uniform subset.
    for (std::size_t i = 0; i < clique_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, nodes.size() - 1);
      std::swap(nodes[i], nodes[pick(rng)]);
    }
    for (std::size_t i = 0; i < clique_size; ++i) {
      for (std::size_t j = i + 1; j < clique_size; ++j) edges.emplace_back(nodes[i], nodes[j]);
    }
  }
  return graph.with_edges(std::move(edges));
}

Graph generate_powerlaw_graph(std::size_t num_nodes, double beta, Degree d_min, std::uint64_t seed) {
  if (num_nodes < 10) throw ValidationError("generate_powerlaw_graph needs at least 10 nodes");
  if (d_min < 1) throw ValidationError("d_min must be >= 1");
  if (!(beta > 1.0)) throw ValidationError("beta must exceed 1");

  Rng rng(seed);
  const auto max_degree = static_cast<Degree>(num_nodes - 1);
  auto degrees = sample_powerlaw_degrees(num_nodes, beta, std::min(d_min, max_degree), rng, max_degree);

  const std::uint64_t total = std::accumulate(degrees.begin(), degrees.end(), std::uint64_t{0});
  if (total % 2 == 1) {
    std::uniform_int_distribution<std::size_t> pick(0, num_nodes - 1);
    auto& d = degrees[pick(rng)];
    if (d < max_degree) {
      ++d;
    } else {
      --d;
    }
  }

  std::vector<NodeId> stubs;
  stubs.reserve(total + 1);
  for (NodeId v = 0; v < num_nodes; ++v) stubs.insert(stubs.end(), degrees[v], v);
  std::shuffle(stubs.begin(), stubs.end(), rng);

  std::vector<NodePair> edges;
  edges.reserve(stubs.size() / 2);
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    if (stubs[i] != stubs[i + 1]) edges.emplace_back(stubs[i], stubs[i + 1]);
  }
  return Graph(num_nodes, std::move(edges));
}

}  // namespace clp
