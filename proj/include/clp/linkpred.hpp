#pragma once

#include "clp/graph.hpp"
#include "clp/types.hpp"

#include <Eigen/SparseCore>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace clp {

enum class Aggregation {
  GcnNormalized,  // D^-1/2 (A + I) D^-1/2 H W
  MeanNeighbor,   // H W_self + mean_{N(v)} H W_neighbor
};

struct LinkPredConfig {
  std::size_t hidden_dim = 128;
  std::size_t num_layers = 3;
  Aggregation aggregation = Aggregation::GcnNormalized;
  std::size_t epochs = 500;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  std::size_t batch_size = 2048;
};

/// Encoder f, Hadamard combiner g and one-hidden-layer scorer h.
struct ModelParams {
  Aggregation aggregation = Aggregation::GcnNormalized;
  std::vector<Matrix> encoder;           // W^(l), d_l x d_(l+1)
  std::vector<Matrix> encoder_neighbor;  // MeanNeighbor only
  Matrix scorer_hidden;                  // h x h
  Vector scorer_hidden_bias;             // h
  Vector scorer_out;                     // h
  double scorer_out_bias = 0.0;

  std::size_t input_dim() const;
  std::size_t hidden_dim() const;
  std::size_t num_layers() const { return encoder.size(); }

  /// Zero-valued parameters with the same shapes.
  ModelParams zeros_like() const;

  std::size_t num_parameters() const;
  Vector flatten() const;
  void assign(const Vector& flat);

  bool all_finite() const;
};

ModelParams init_model_params(std::size_t input_dim, const LinkPredConfig& config, std::uint64_t seed);

/// Sparse message-passing operator for one graph. Build once, reuse across
/// forward passes.
class Propagation {
 public:
  using Sparse = Eigen::SparseMatrix<double>;

  Propagation(const Graph& graph, Aggregation aggregation);

  Aggregation aggregation() const noexcept { return aggregation_; }
  std::size_t num_nodes() const noexcept { return static_cast<std::size_t>(op_.rows()); }
  const Sparse& op() const noexcept { return op_; }
  const Sparse& op_transpose() const noexcept { return op_t_; }

 private:
  Aggregation aggregation_;
  Sparse op_;
  Sparse op_t_;
};

/// Node embeddings H (num_nodes x hidden). ReLU between layers, linear last layer.
Matrix encode_nodes(const ModelParams& params, const Graph& graph);
Matrix encode_nodes(const ModelParams& params, const Propagation& prop, const Matrix& features);

Vector edge_embedding(const Eigen::Ref<const Vector>& h_u, const Eigen::Ref<const Vector>& h_v);

/// One embedding row per pair.
Matrix edge_embeddings(const Matrix& node_embeddings, std::span<const NodePair> pairs);
Matrix edge_embeddings(const Matrix& node_embeddings, std::span<const LabeledEdge> edges);

double edge_logit(const ModelParams& params, const Eigen::Ref<const Vector>& z);
/// sigmoid(edge_logit), strictly inside (0, 1).
double edge_score(const ModelParams& params, const Eigen::Ref<const Vector>& z);

/// Mean binary cross-entropy of the scorer over a batch of labeled edges.
double batch_loss(const ModelParams& params, const Propagation& prop, const Matrix& features,
                  std::span<const LabeledEdge> batch);

/// Analytic gradient of batch_loss, same layout as the parameters.
ModelParams loss_gradient(const ModelParams& params, const Propagation& prop, const Matrix& features,
                          std::span<const LabeledEdge> batch, double* loss = nullptr);

/// Mini-batch momentum SGD on BCE; returns the snapshot with the lowest
/// validation loss (training loss when val is empty).
ModelParams train_link_predictor(const Graph& subgraph, std::span<const LabeledEdge> train,
                                 std::span<const LabeledEdge> val, const LinkPredConfig& config,
                                 std::uint64_t seed);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

/// Compares the analytic gradient with central differences on a random
/// subsample of coordinates. Relative errors use max(|a|, |n|, abs_floor) as
/// the denominator.
GradientCheckResult gradient_check(const ModelParams& params, std::span<const LabeledEdge> batch,
                                   const Graph& graph, double step, std::size_t coordinates = 100,
                                   std::uint64_t seed = 0, double abs_floor = 1e-6);

}  // namespace clp
