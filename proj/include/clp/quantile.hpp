#pragma once

#include "clp/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace clp {

struct QuantileConfig {
  std::size_t epochs = 200;
  double learning_rate = 5e-4;
  std::size_t batch_size = 64;
  std::size_t hidden_dim = 64;
};

/// Three fully connected layers, ReLU between them, two output heads
/// (lower level, upper level) sharing the trunk. Inputs are standardized
/// with the training mean and scale before the first layer.
struct QuantileModel {
  double lower_level = 0.05;
  double upper_level = 0.95;
  Vector input_mean;
  Vector input_scale;
  Matrix w1;  // d x h
  Vector b1;
  Matrix w2;  // h x h
  Vector b2;
  Matrix w3;  // h x 2
  Vector b3;  // 2

  std::size_t input_dim() const { return static_cast<std::size_t>(w1.rows()); }
  std::size_t num_parameters() const;
  Vector flatten() const;
  void assign(const Vector& flat);
  bool all_finite() const;
};

/// gamma (t - p) when t >= p, (1 - gamma)(p - t) otherwise.
double pinball_loss(double prediction, double target, double gamma);

/// d pinball / d prediction, taking the gamma branch at the kink.
double pinball_derivative(double prediction, double target, double gamma);

QuantileModel init_quantile_model(std::size_t input_dim, double alpha, const QuantileConfig& config,
                                  std::uint64_t seed);

/// Fits heads at levels alpha/2 and 1 - alpha/2 by minimizing the summed
/// pinball loss with Adam. One embedding per row.
QuantileModel fit_quantile_functions(const Matrix& embeddings, std::span<const double> labels, double alpha,
                                     const QuantileConfig& config, std::uint64_t seed);

/// Unsorted head outputs (lower head, upper head).
std::pair<double, double> raw_heads(const QuantileModel& model, const Eigen::Ref<const Vector>& z);

/// Head outputs with crossing repaired: first <= second.
std::pair<double, double> predict_quantiles(const QuantileModel& model, const Eigen::Ref<const Vector>& z);

/// Row-wise predict_quantiles; column 0 lower, column 1 upper.
Matrix predict_bands(const QuantileModel& model, const Matrix& embeddings);

/// Mean over rows of pinball(lower head) + pinball(upper head).
double quantile_loss(const QuantileModel& model, const Matrix& embeddings, std::span<const double> labels);

/// Analytic gradient of quantile_loss in flatten() order.
Vector quantile_loss_gradient(const QuantileModel& model, const Matrix& embeddings,
                              std::span<const double> labels);

struct QuantileGradientCheck {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  /// Coordinates skipped because a head output sat within `step` of its target.
  std::size_t skipped_at_kink = 0;
};

/// Central-difference check of quantile_loss_gradient on a random subsample
/// of coordinates. Coordinates whose perturbation moves any head output
/// across its target are skipped, since the loss is not differentiable there.
QuantileGradientCheck quantile_gradient_check(const QuantileModel& model, const Matrix& embeddings,
                                              std::span<const double> labels, double step,
                                              std::size_t coordinates = 100, std::uint64_t seed = 0,
                                              double abs_floor = 1e-6);

}  // namespace clp
