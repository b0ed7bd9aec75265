#include "clp/conformal.hpp"

#include "clp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace clp {

double nonconformity(double lower, double upper, double y) {
  if (lower > upper) throw ValidationError("nonconformity: lower > upper");
  return std::max(lower - y, y - upper);
}

std::size_t conformal_rank(std::size_t num_scores, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  const double target = static_cast<double>(num_scores + 1) * (1.0 - alpha);
  // Products such as 10 * 0.9 land a few ulps above the integer they denote.
  const double nearest = std::round(target);
  const double k = std::abs(target - nearest) <= 1e-9 * std::max(1.0, nearest) ? nearest : std::ceil(target);
  return static_cast<std::size_t>(std::max(k, 1.0));
}

double conformal_quantile(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw ValidationError("conformal_quantile: no calibration scores");
  const std::size_t k = conformal_rank(scores.size(), alpha);
  if (k > scores.size()) return std::numeric_limits<double>::infinity();
  std::vector<double> sorted(scores.begin(), scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  return sorted[k - 1];
}

PredictionInterval prediction_interval(double lower, double upper, double q_hat) {
  if (lower > upper) throw ValidationError("prediction_interval: lower > upper");
  const double lo = lower - q_hat;
  const double hi = upper + q_hat;
  if (lo > hi) {
    const double mid = 0.5 * (lower + upper);
    return {mid, mid};
  }
  return {lo, hi};
}

ConformalReport evaluate(std::span<const PredictionInterval> intervals, std::span<const double> labels) {
  if (intervals.size() != labels.size()) throw ValidationError("evaluate: intervals and labels differ in length");
  if (intervals.empty()) throw ValidationError("evaluate: no test points");
  std::size_t covered = 0;
  double total_length = 0.0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].contains(labels[i])) ++covered;
    total_length += intervals[i].length();
  }
  ConformalReport report;
  report.test_size = intervals.size();
  report.empirical_coverage = static_cast<double>(covered) / static_cast<double>(intervals.size());
  report.avg_interval_length = total_length / static_cast<double>(intervals.size());
  return report;
}

ConformalResult conformalize(const QuantileModel& model, const Matrix& calib_embeddings,
                             std::span<const double> calib_labels, const Matrix& test_embeddings, double alpha) {
  if (calib_embeddings.rows() == 0) throw ValidationError("conformalize: empty calibration set");
  if (static_cast<std::size_t>(calib_embeddings.rows()) != calib_labels.size()) {
    throw ValidationError("conformalize: calibration rows and labels differ in length");
  }
  ConformalResult result;
  const Matrix calib_bands = predict_bands(model, calib_embeddings);
  result.calib_scores.reserve(calib_labels.size());
  for (Eigen::Index i = 0; i < calib_bands.rows(); ++i) {
    result.calib_scores.push_back(
        nonconformity(calib_bands(i, 0), calib_bands(i, 1), calib_labels[static_cast<std::size_t>(i)]));
  }
  result.q_hat = conformal_quantile(result.calib_scores, alpha);

  if (test_embeddings.rows() > 0) {
    const Matrix test_bands = predict_bands(model, test_embeddings);
    result.intervals.reserve(static_cast<std::size_t>(test_bands.rows()));
    for (Eigen::Index i = 0; i < test_bands.rows(); ++i) {
      result.intervals.push_back(prediction_interval(test_bands(i, 0), test_bands(i, 1), result.q_hat));
    }
  }
  return result;
}

}  // namespace clp
