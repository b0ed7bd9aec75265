#include "clp/linkpred.hpp"

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

template <typename Params, typename Fn>
void visit_blocks(Params& p, Fn&& fn) {
  for (auto& m : p.encoder) fn(m.data(), m.size());
  for (auto& m : p.encoder_neighbor) fn(m.data(), m.size());
  fn(p.scorer_hidden.data(), p.scorer_hidden.size());
  fn(p.scorer_hidden_bias.data(), p.scorer_hidden_bias.size());
  fn(p.scorer_out.data(), p.scorer_out.size());
  fn(&p.scorer_out_bias, Eigen::Index{1});
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

Matrix relu_mask(const Matrix& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

struct EncoderCache {
  std::vector<Matrix> inputs;      // H_l
  std::vector<Matrix> aggregated;  // P H_l
  std::vector<Matrix> pre;         // Z_l
  Matrix output;
};

EncoderCache encode_with_cache(const ModelParams& params, const Propagation& prop, const Matrix& features) {
  if (params.aggregation != prop.aggregation()) {
    throw ValidationError("propagation operator built for a different aggregation");
  }
  if (static_cast<std::size_t>(features.rows()) != prop.num_nodes()) {
    throw ValidationError("feature rows do not match the graph");
  }
  if (static_cast<std::size_t>(features.cols()) != params.input_dim()) {
    throw ValidationError("feature dimension " + std::to_string(features.cols()) +
                          " does not match model input dimension " + std::to_string(params.input_dim()));
  }
  EncoderCache cache;
  const std::size_t layers = params.num_layers();
  Matrix h = features;
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix agg = prop.op() * h;
    Matrix z;
    if (params.aggregation == Aggregation::GcnNormalized) {
      z = agg * params.encoder[l];
    } else {
      z = h * params.encoder[l] + agg * params.encoder_neighbor[l];
    }
    Matrix next = (l + 1 < layers) ? relu(z) : z;
    cache.inputs.push_back(std::move(h));
    cache.aggregated.push_back(std::move(agg));
    cache.pre.push_back(std::move(z));
    h = std::move(next);
  }
  cache.output = std::move(h);
  return cache;
}

struct ScorerCache {
  Matrix z;       // B x h edge embeddings
  Matrix hidden;  // pre-activation
  Vector logits;
};

ScorerCache score_batch(const ModelParams& params, const Matrix& node_emb, std::span<const LabeledEdge> batch) {
  ScorerCache c;
  c.z = edge_embeddings(node_emb, batch);
  c.hidden = c.z * params.scorer_hidden;
  c.hidden.rowwise() += params.scorer_hidden_bias.transpose();
  c.logits = relu(c.hidden) * params.scorer_out;
  c.logits.array() += params.scorer_out_bias;
  return c;
}

double mean_bce(const Vector& logits, std::span<const LabeledEdge> batch) {
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double x = logits(static_cast<Eigen::Index>(i));
    total += softplus(x) - static_cast<double>(batch[i].label) * x;
  }
  return total / static_cast<double>(batch.size());
}

// softplus(a) - softplus(b) = log1p(expm1(a - b) * sigmoid(b)); avoids the
// cancellation of subtracting two values near log 2.
double softplus_difference(double a, double b) { return std::log1p(std::expm1(a - b) * sigmoid(b)); }

// Mean BCE difference between two logit vectors of the same batch.
double bce_difference(const Vector& up, const Vector& down, std::span<const LabeledEdge> batch) {
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    total += softplus_difference(up(k), down(k)) - static_cast<double>(batch[i].label) * (up(k) - down(k));
  }
  return total / static_cast<double>(batch.size());
}

void require_labels(std::span<const LabeledEdge> edges) {
  for (const auto& e : edges) {
    if (e.label > 1) throw ValidationError("edge labels must be 0 or 1");
  }
}

}  // namespace

std::size_t ModelParams::input_dim() const {
  return encoder.empty() ? 0 : static_cast<std::size_t>(encoder.front().rows());
}

std::size_t ModelParams::hidden_dim() const {
  return encoder.empty() ? 0 : static_cast<std::size_t>(encoder.back().cols());
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  visit_blocks(z, [](double* data, Eigen::Index n) { std::fill(data, data + n, 0.0); });
  return z;
}

std::size_t ModelParams::num_parameters() const {
  std::size_t n = 0;
  visit_blocks(*this, [&](const double*, Eigen::Index size) { n += static_cast<std::size_t>(size); });
  return n;
}

Vector ModelParams::flatten() const {
  Vector flat(static_cast<Eigen::Index>(num_parameters()));
  Eigen::Index offset = 0;
  visit_blocks(*this, [&](const double* data, Eigen::Index size) {
    flat.segment(offset, size) = Eigen::Map<const Vector>(data, size);
    offset += size;
  });
  return flat;
}

void ModelParams::assign(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != num_parameters()) {
    throw ValidationError("parameter vector has the wrong length");
  }
  Eigen::Index offset = 0;
  visit_blocks(*this, [&](double* data, Eigen::Index size) {
    Eigen::Map<Vector>(data, size) = flat.segment(offset, size);
    offset += size;
  });
}

bool ModelParams::all_finite() const {
  bool ok = true;
  visit_blocks(*this, [&](const double* data, Eigen::Index size) {
    ok = ok && Eigen::Map<const Vector>(data, size).allFinite();
  });
  return ok;
}

ModelParams init_model_params(std::size_t input_dim, const LinkPredConfig& config, std::uint64_t seed) {
  if (input_dim == 0 || config.hidden_dim == 0) throw ValidationError("model dimensions must be positive");
  if (config.num_layers == 0) throw ValidationError("encoder needs at least one layer");

  Rng rng(seed);
  auto uniform_matrix = [&](std::size_t rows, std::size_t cols, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
    }
    return m;
  };

  ModelParams p;
  p.aggregation = config.aggregation;
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    p.encoder.push_back(uniform_matrix(in, config.hidden_dim, in));
    if (config.aggregation == Aggregation::MeanNeighbor) {
      p.encoder_neighbor.push_back(uniform_matrix(in, config.hidden_dim, in));
    }
    in = config.hidden_dim;
  }
  const std::size_t h = config.hidden_dim;
  p.scorer_hidden = uniform_matrix(h, h, h);
  p.scorer_hidden_bias = uniform_matrix(h, 1, h);
  p.scorer_out = uniform_matrix(h, 1, h);
  p.scorer_out_bias = uniform_matrix(1, 1, h)(0, 0);
  return p;
}

Propagation::Propagation(const Graph& graph, Aggregation aggregation) : aggregation_(aggregation) {
  const auto n = static_cast<Eigen::Index>(graph.num_nodes());
  const auto deg = graph.degrees();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * graph.num_edges() + graph.num_nodes());

  if (aggregation == Aggregation::GcnNormalized) {
    std::vector<double> inv_sqrt(deg.size());
    for (std::size_t i = 0; i < deg.size(); ++i) inv_sqrt[i] = 1.0 / std::sqrt(deg[i] + 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      triplets.emplace_back(i, i, inv_sqrt[i] * inv_sqrt[i]);
    }
    for (const auto& e : graph.edges()) {
      const double w = inv_sqrt[e.u] * inv_sqrt[e.v];
      triplets.emplace_back(e.u, e.v, w);
      triplets.emplace_back(e.v, e.u, w);
    }
  } else {
    for (const auto& e : graph.edges()) {
      triplets.emplace_back(e.u, e.v, 1.0 / deg[e.u]);
      triplets.emplace_back(e.v, e.u, 1.0 / deg[e.v]);
    }
  }
  op_.resize(n, n);
  op_.setFromTriplets(triplets.begin(), triplets.end());
  op_t_ = op_.transpose();
}

Matrix encode_nodes(const ModelParams& params, const Propagation& prop, const Matrix& features) {
  return encode_with_cache(params, prop, features).output;
}

Matrix encode_nodes(const ModelParams& params, const Graph& graph) {
  return encode_nodes(params, Propagation(graph, params.aggregation), graph.features());
}

Vector edge_embedding(const Eigen::Ref<const Vector>& h_u, const Eigen::Ref<const Vector>& h_v) {
  if (h_u.size() != h_v.size()) throw ValidationError("edge_embedding: dimension mismatch");
  return h_u.cwiseProduct(h_v);
}

Matrix edge_embeddings(const Matrix& node_embeddings, std::span<const NodePair> pairs) {
  Matrix z(static_cast<Eigen::Index>(pairs.size()), node_embeddings.cols());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    z.row(static_cast<Eigen::Index>(i)) =
        node_embeddings.row(pairs[i].u).cwiseProduct(node_embeddings.row(pairs[i].v));
  }
  return z;
}

Matrix edge_embeddings(const Matrix& node_embeddings, std::span<const LabeledEdge> edges) {
  Matrix z(static_cast<Eigen::Index>(edges.size()), node_embeddings.cols());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& p = edges[i].pair;
    z.row(static_cast<Eigen::Index>(i)) = node_embeddings.row(p.u).cwiseProduct(node_embeddings.row(p.v));
  }
  return z;
}

double edge_logit(const ModelParams& params, const Eigen::Ref<const Vector>& z) {
  if (z.size() != params.scorer_hidden.rows()) throw ValidationError("edge_score: dimension mismatch");
  const Vector hidden = (params.scorer_hidden.transpose() * z + params.scorer_hidden_bias).cwiseMax(0.0);
  return hidden.dot(params.scorer_out) + params.scorer_out_bias;
}

double edge_score(const ModelParams& params, const Eigen::Ref<const Vector>& z) {
  const double s = sigmoid(edge_logit(params, z));
  return std::clamp(s, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

double batch_loss(const ModelParams& params, const Propagation& prop, const Matrix& features,
                  std::span<const LabeledEdge> batch) {
  if (batch.empty()) throw ValidationError("batch_loss: empty batch");
  const Matrix h = encode_nodes(params, prop, features);
  return mean_bce(score_batch(params, h, batch).logits, batch);
}

ModelParams loss_gradient(const ModelParams& params, const Propagation& prop, const Matrix& features,
                          std::span<const LabeledEdge> batch, double* loss) {
  if (batch.empty()) throw ValidationError("loss_gradient: empty batch");
  const EncoderCache enc = encode_with_cache(params, prop, features);
  const ScorerCache sc = score_batch(params, enc.output, batch);
  if (loss) *loss = mean_bce(sc.logits, batch);

  ModelParams grad = params.zeros_like();
  const auto b = static_cast<Eigen::Index>(batch.size());
  Vector d_logit(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    d_logit(i) = (sigmoid(sc.logits(i)) - batch[static_cast<std::size_t>(i)].label) / static_cast<double>(b);
  }

  const Matrix act = relu(sc.hidden);
  grad.scorer_out = act.transpose() * d_logit;
  grad.scorer_out_bias = d_logit.sum();
  const Matrix d_hidden = (d_logit * params.scorer_out.transpose()).cwiseProduct(relu_mask(sc.hidden));
  grad.scorer_hidden = sc.z.transpose() * d_hidden;
  grad.scorer_hidden_bias = d_hidden.colwise().sum().transpose();
  const Matrix d_z = d_hidden * params.scorer_hidden.transpose();

  Matrix d_h = Matrix::Zero(enc.output.rows(), enc.output.cols());
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& p = batch[static_cast<std::size_t>(i)].pair;
    d_h.row(p.u) += d_z.row(i).cwiseProduct(enc.output.row(p.v));
    d_h.row(p.v) += d_z.row(i).cwiseProduct(enc.output.row(p.u));
  }

  for (std::size_t l = params.num_layers(); l-- > 0;) {
    const Matrix d_pre = (l + 1 < params.num_layers()) ? Matrix(d_h.cwiseProduct(relu_mask(enc.pre[l]))) : d_h;
    if (params.aggregation == Aggregation::GcnNormalized) {
      grad.encoder[l] = enc.aggregated[l].transpose() * d_pre;
      if (l > 0) d_h = prop.op_transpose() * (d_pre * params.encoder[l].transpose());
    } else {
      grad.encoder[l] = enc.inputs[l].transpose() * d_pre;
      grad.encoder_neighbor[l] = enc.aggregated[l].transpose() * d_pre;
      if (l > 0) {
        d_h = d_pre * params.encoder[l].transpose() +
              prop.op_transpose() * (d_pre * params.encoder_neighbor[l].transpose());
      }
    }
  }
  return grad;
}

ModelParams train_link_predictor(const Graph& subgraph, std::span<const LabeledEdge> train,
                                 std::span<const LabeledEdge> val, const LinkPredConfig& config,
                                 std::uint64_t seed) {
  require_labels(train);
  require_labels(val);
  const bool has_pos = std::any_of(train.begin(), train.end(), [](const auto& e) { return e.label == 1; });
  const bool has_neg = std::any_of(train.begin(), train.end(), [](const auto& e) { return e.label == 0; });
  if (!has_pos || !has_neg) throw ValidationError("training set must contain both labels");
  if (config.batch_size == 0) throw ValidationError("batch size must be positive");

  const Matrix& features = subgraph.features();
  const Propagation prop(subgraph, config.aggregation);
  Rng rng(seed);
  ModelParams params = init_model_params(static_cast<std::size_t>(features.cols()), config, rng());
  Vector theta = params.flatten();
  Vector velocity = Vector::Zero(theta.size());

  auto validation_loss = [&](const ModelParams& p) {
    return batch_loss(p, prop, features, val.empty() ? train : val);
  };
  ModelParams best = params;
  double best_loss = validation_loss(params);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  LabeledEdges batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(train[order[k]]);
      const Vector g = loss_gradient(params, prop, features, batch).flatten();
      velocity = config.momentum * velocity + g;
      theta -= config.learning_rate * velocity;
      params.assign(theta);
    }
    if (!params.all_finite()) throw ValidationError("training diverged (non-finite parameters)");
    const double loss = validation_loss(params);
    if (loss < best_loss) {
      best_loss = loss;
      best = params;
    }
  }
  return best;
}

GradientCheckResult gradient_check(const ModelParams& params, std::span<const LabeledEdge> batch,
                                   const Graph& graph, double step, std::size_t coordinates,
                                   std::uint64_t seed, double abs_floor) {
  if (!(step > 0.0)) throw ValidationError("gradient_check: step must be positive");
  const Propagation prop(graph, params.aggregation);
  const Matrix& features = graph.features();
  const Vector analytic = loss_gradient(params, prop, features, batch).flatten();
  const Vector theta = params.flatten();

  std::vector<std::size_t> index(static_cast<std::size_t>(theta.size()));
  std::iota(index.begin(), index.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(index.begin(), index.end(), rng);
  index.resize(std::min(coordinates, index.size()));

  GradientCheckResult result;
  ModelParams probe = params;
  for (std::size_t i : index) {
    const auto k = static_cast<Eigen::Index>(i);
    auto logits_at = [&](double value) {
      Vector shifted = theta;
      shifted(k) = value;
      probe.assign(shifted);
      return score_batch(probe, encode_nodes(probe, prop, features), batch).logits;
    };
    const Vector up = logits_at(theta(k) + step);
    const Vector down = logits_at(theta(k) - step);
    const double numeric = bce_difference(up, down, batch) / (2.0 * step);
    const double denom = std::max({std::abs(analytic(k)), std::abs(numeric), abs_floor});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic(k) - numeric) / denom);
    ++result.coordinates;
  }
  return result;
}

}  // namespace clp
