#include "clp/quantile.hpp"

#include "clp/errors.hpp"
#include "clp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace clp {

namespace {

template <typename Model, typename Fn>
void visit_blocks(Model& m, Fn&& fn) {
  fn(m.w1.data(), m.w1.size());
  fn(m.b1.data(), m.b1.size());
  fn(m.w2.data(), m.w2.size());
  fn(m.b2.data(), m.b2.size());
  fn(m.w3.data(), m.w3.size());
  fn(m.b3.data(), m.b3.size());
}

void require_level(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("quantile level must lie in (0, 1)");
}

struct Forward {
  Matrix x;   // standardized inputs
  Matrix z1;  // pre-activations
  Matrix z2;
  Matrix out;  // n x 2
};

Forward forward(const QuantileModel& m, const Matrix& embeddings) {
  if (static_cast<std::size_t>(embeddings.cols()) != m.input_dim()) {
    throw ValidationError("embedding dimension " + std::to_string(embeddings.cols()) +
                          " does not match quantile model input " + std::to_string(m.input_dim()));
  }
  Forward f;
  f.x = (embeddings.rowwise() - m.input_mean.transpose()).array().rowwise() / m.input_scale.transpose().array();
  f.z1 = f.x * m.w1;
  f.z1.rowwise() += m.b1.transpose();
  f.z2 = f.z1.cwiseMax(0.0) * m.w2;
  f.z2.rowwise() += m.b2.transpose();
  f.out = f.z2.cwiseMax(0.0) * m.w3;
  f.out.rowwise() += m.b3.transpose();
  return f;
}

double mean_loss(const QuantileModel& m, const Matrix& out, std::span<const double> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    total += pinball_loss(out(r, 0), labels[i], m.lower_level) + pinball_loss(out(r, 1), labels[i], m.upper_level);
  }
  return total / static_cast<double>(labels.size());
}

void require_data(const Matrix& embeddings, std::span<const double> labels) {
  if (embeddings.rows() == 0 || labels.empty()) throw ValidationError("quantile regression needs data");
  if (static_cast<std::size_t>(embeddings.rows()) != labels.size()) {
    throw ValidationError("embedding rows and labels differ in length");
  }
}

Vector gradient(const QuantileModel& m, const Forward& f, std::span<const double> labels) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  Matrix d_out(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = labels[static_cast<std::size_t>(i)];
    d_out(i, 0) = pinball_derivative(f.out(i, 0), y, m.lower_level) / static_cast<double>(n);
    d_out(i, 1) = pinball_derivative(f.out(i, 1), y, m.upper_level) / static_cast<double>(n);
  }
  QuantileModel g = m;
  g.w3 = f.z2.cwiseMax(0.0).transpose() * d_out;
  g.b3 = d_out.colwise().sum().transpose();
  const Matrix d_z2 = (d_out * m.w3.transpose()).cwiseProduct((f.z2.array() > 0.0).cast<double>().matrix());
  g.w2 = f.z1.cwiseMax(0.0).transpose() * d_z2;
  g.b2 = d_z2.colwise().sum().transpose();
  const Matrix d_z1 = (d_z2 * m.w2.transpose()).cwiseProduct((f.z1.array() > 0.0).cast<double>().matrix());
  g.w1 = f.x.transpose() * d_z1;
  g.b1 = d_z1.colwise().sum().transpose();
  return g.flatten();
}

// Signs of every ReLU pre-activation and pinball residual; the loss is smooth
// in a neighborhood where this pattern is constant.
std::vector<bool> kink_pattern(const QuantileModel& m, const Matrix& embeddings, std::span<const double> labels) {
  const Forward f = forward(m, embeddings);
  std::vector<bool> pattern;
  pattern.reserve(static_cast<std::size_t>(f.z1.size() + f.z2.size() + f.out.size()));
  for (Eigen::Index i = 0; i < f.z1.size(); ++i) pattern.push_back(f.z1.data()[i] > 0.0);
  for (Eigen::Index i = 0; i < f.z2.size(); ++i) pattern.push_back(f.z2.data()[i] > 0.0);
  for (Eigen::Index i = 0; i < f.out.rows(); ++i) {
    const double y = labels[static_cast<std::size_t>(i)];
    pattern.push_back(y >= f.out(i, 0));
    pattern.push_back(y >= f.out(i, 1));
  }
  return pattern;
}

}  // namespace

std::size_t QuantileModel::num_parameters() const {
  std::size_t n = 0;
  visit_blocks(*this, [&](const double*, Eigen::Index size) { n += static_cast<std::size_t>(size); });
  return n;
}

Vector QuantileModel::flatten() const {
  Vector flat(static_cast<Eigen::Index>(num_parameters()));
  Eigen::Index offset = 0;
  visit_blocks(*this, [&](const double* data, Eigen::Index size) {
    flat.segment(offset, size) = Eigen::Map<const Vector>(data, size);
    offset += size;
  });
  return flat;
}

void QuantileModel::assign(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != num_parameters()) {
    throw ValidationError("parameter vector has the wrong length");
  }
  Eigen::Index offset = 0;
  visit_blocks(*this, [&](double* data, Eigen::Index size) {
    Eigen::Map<Vector>(data, size) = flat.segment(offset, size);
    offset += size;
  });
}

bool QuantileModel::all_finite() const {
  return flatten().allFinite() && input_mean.allFinite() && input_scale.allFinite();
}

double pinball_loss(double prediction, double target, double gamma) {
  require_level(gamma);
  return target >= prediction ? gamma * (target - prediction) : (1.0 - gamma) * (prediction - target);
}

double pinball_derivative(double prediction, double target, double gamma) {
  require_level(gamma);
  return target >= prediction ? -gamma : 1.0 - gamma;
}

QuantileModel init_quantile_model(std::size_t input_dim, double alpha, const QuantileConfig& config,
                                  std::uint64_t seed) {
  require_level(alpha);
  if (input_dim == 0 || config.hidden_dim == 0) throw ValidationError("quantile model dimensions must be positive");
  Rng rng(seed);
  auto uniform = [&](Eigen::Index rows, Eigen::Index cols, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
    }
    return m;
  };
  const auto d = static_cast<Eigen::Index>(input_dim);
  const auto h = static_cast<Eigen::Index>(config.hidden_dim);
  QuantileModel m;
  m.lower_level = alpha / 2.0;
  m.upper_level = 1.0 - alpha / 2.0;
  m.input_mean = Vector::Zero(d);
  m.input_scale = Vector::Ones(d);
  m.w1 = uniform(d, h, input_dim);
  m.b1 = uniform(h, 1, input_dim);
  m.w2 = uniform(h, h, config.hidden_dim);
  m.b2 = uniform(h, 1, config.hidden_dim);
  m.w3 = uniform(h, 2, config.hidden_dim);
  m.b3 = uniform(2, 1, config.hidden_dim);
  return m;
}

QuantileModel fit_quantile_functions(const Matrix& embeddings, std::span<const double> labels, double alpha,
                                     const QuantileConfig& config, std::uint64_t seed) {
  require_data(embeddings, labels);
  if (config.batch_size == 0) throw ValidationError("batch size must be positive");
  Rng rng(seed);
  QuantileModel model = init_quantile_model(static_cast<std::size_t>(embeddings.cols()), alpha, config, rng());

  const double n = static_cast<double>(embeddings.rows());
  model.input_mean = embeddings.colwise().mean().transpose();
  const Matrix centered = embeddings.rowwise() - model.input_mean.transpose();
  model.input_scale = (centered.colwise().squaredNorm() / n).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < model.input_scale.size(); ++j) {
    if (!(model.input_scale(j) > 1e-12)) model.input_scale(j) = 1.0;
  }

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  Vector theta = model.flatten();
  Vector m1 = Vector::Zero(theta.size());
  Vector m2 = Vector::Zero(theta.size());
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(embeddings.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<double> batch_labels;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const Eigen::Index> rows(order.data() + start, end - start);
      const Matrix batch = embeddings(rows, Eigen::all);
      batch_labels.clear();
      for (Eigen::Index r : rows) batch_labels.push_back(labels[static_cast<std::size_t>(r)]);

      const Vector g = gradient(model, forward(model, batch), batch_labels);
      beta1_pow *= kBeta1;
      beta2_pow *= kBeta2;
      m1 = kBeta1 * m1 + (1.0 - kBeta1) * g;
      m2 = kBeta2 * m2 + (1.0 - kBeta2) * g.cwiseAbs2();
      const Vector m1_hat = m1 / (1.0 - beta1_pow);
      const Vector m2_hat = m2 / (1.0 - beta2_pow);
      theta.array() -= config.learning_rate * m1_hat.array() / (m2_hat.array().sqrt() + kEps);
      model.assign(theta);
    }
  }
  if (!model.all_finite()) throw ValidationError("quantile regression diverged (non-finite weights)");
  return model;
}

std::pair<double, double> raw_heads(const QuantileModel& model, const Eigen::Ref<const Vector>& z) {
  const Matrix out = forward(model, z.transpose()).out;
  return {out(0, 0), out(0, 1)};
}

std::pair<double, double> predict_quantiles(const QuantileModel& model, const Eigen::Ref<const Vector>& z) {
  const auto [a, b] = raw_heads(model, z);
  return {std::min(a, b), std::max(a, b)};
}

Matrix predict_bands(const QuantileModel& model, const Matrix& embeddings) {
  Matrix out = forward(model, embeddings).out;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (out(i, 0) > out(i, 1)) std::swap(out(i, 0), out(i, 1));
  }
  return out;
}

double quantile_loss(const QuantileModel& model, const Matrix& embeddings, std::span<const double> labels) {
  require_data(embeddings, labels);
  return mean_loss(model, forward(model, embeddings).out, labels);
}

Vector quantile_loss_gradient(const QuantileModel& model, const Matrix& embeddings,
                              std::span<const double> labels) {
  require_data(embeddings, labels);
  return gradient(model, forward(model, embeddings), labels);
}

QuantileGradientCheck quantile_gradient_check(const QuantileModel& model, const Matrix& embeddings,
                                              std::span<const double> labels, double step,
                                              std::size_t coordinates, std::uint64_t seed, double abs_floor) {
  if (!(step > 0.0)) throw ValidationError("gradient check step must be positive");
  const Vector analytic = quantile_loss_gradient(model, embeddings, labels);
  const Vector theta = model.flatten();
  const auto base_pattern = kink_pattern(model, embeddings, labels);

  std::vector<std::size_t> index(static_cast<std::size_t>(theta.size()));
  std::iota(index.begin(), index.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(index.begin(), index.end(), rng);

  QuantileGradientCheck result;
  QuantileModel probe = model;
  for (std::size_t i : index) {
    if (result.coordinates >= coordinates) break;
    const auto k = static_cast<Eigen::Index>(i);
    Vector shifted = theta;
    shifted(k) = theta(k) + step;
    probe.assign(shifted);
    const bool smooth_up = kink_pattern(probe, embeddings, labels) == base_pattern;
    const double up = quantile_loss(probe, embeddings, labels);
    shifted(k) = theta(k) - step;
    probe.assign(shifted);
    const bool smooth_down = kink_pattern(probe, embeddings, labels) == base_pattern;
    const double down = quantile_loss(probe, embeddings, labels);
    if (!smooth_up || !smooth_down) {
      ++result.skipped_at_kink;
      continue;
    }
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic(k)), std::abs(numeric), abs_floor});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic(k) - numeric) / denom);
    ++result.coordinates;
  }
  return result;
}

}  // namespace clp
