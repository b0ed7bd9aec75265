#pragma once

#include "clp/types.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace clp {

/// Undirected simple graph. Immutable after construction; every constructor
/// path canonicalizes pairs, removes duplicates and rejects self-loops and
/// out-of-range endpoints.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t num_nodes, std::vector<NodePair> edges,
        std::optional<Matrix> features = std::nullopt);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  /// Sorted ascending by (u, v).
  std::span<const NodePair> edges() const noexcept { return edges_; }

  bool has_edge(NodeId a, NodeId b) const;

  bool has_features() const noexcept { return features_.has_value(); }
  const Matrix& features() const;
  std::size_t feature_dim() const noexcept {
    return features_ ? static_cast<std::size_t>(features_->cols()) : 0;
  }

  /// Same topology with a replaced feature matrix (must have num_nodes rows).
  Graph with_features(Matrix features) const;

  /// Same nodes and features, different edge set.
  Graph with_edges(std::vector<NodePair> edges) const;

  /// Degree of every node, indexed by node id.
  std::vector<Degree> degrees() const;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<NodePair> edges_;
  std::optional<Matrix> features_;
};

struct EdgeSplit {
  LabeledEdges train;
  LabeledEdges val;
  LabeledEdges calib;
  LabeledEdges test;
};

struct SplitRatios {
  double train = 0.5;
  double val = 0.1;
  double calib = 0.2;
  double test = 0.2;
};

/// Parses a whitespace-separated edge list; '#' starts a comment line.
Graph load_edge_list(std::string_view text, std::optional<std::size_t> num_nodes_hint = std::nullopt);
Graph load_edge_list_file(const std::filesystem::path& path,
                          std::optional<std::size_t> num_nodes_hint = std::nullopt);

/// Parses "node_id x_1 ... x_d" lines into a num_nodes x d matrix. Nodes with
/// no line keep zero features.
Matrix load_features(std::string_view text, std::size_t num_nodes);
Matrix load_features_file(const std::filesystem::path& path, std::size_t num_nodes);

void write_edge_list(std::ostream& out, const Graph& graph);

/// Standard-normal node features, deterministic in seed.
Matrix random_features(std::size_t num_nodes, std::size_t dim, std::uint64_t seed);

/// `count` distinct non-edges drawn uniformly without replacement.
std::vector<NodePair> negative_sample(const Graph& graph, std::size_t count, std::uint64_t seed);

/// Shuffles positives and negatives independently and partitions both with
/// the same quotas, so every subset is class balanced.
EdgeSplit split_edges(std::span<const NodePair> positives, std::span<const NodePair> negatives,
                      const SplitRatios& ratios, std::uint64_t seed);

/// Subset sizes used by split_edges for n items per class.
std::vector<std::size_t> split_quotas(std::size_t n, const SplitRatios& ratios);

/// Graph holding only the positive train and val edges.
Graph training_subgraph(const Graph& graph, const EdgeSplit& split);

DegreeSequence degree_sequence(const Graph& graph, bool drop_isolated);

/// Adds n cliques over m nodes each. Nodes are distinct within a clique and
/// drawn independently across cliques.
Graph inject_cliques(const Graph& graph, std::size_t clique_size, std::size_t clique_count,
                     std::uint64_t seed);

/// Configuration-model graph whose degree sequence is drawn from the discrete
/// power law with exponent beta starting at d_min. beta = +inf puts every
/// draw at d_min. Self-loops and multi-edges produced by the pairing are
/// discarded.
Graph generate_powerlaw_graph(std::size_t num_nodes, double beta, Degree d_min, std::uint64_t seed);

}  // namespace clp
