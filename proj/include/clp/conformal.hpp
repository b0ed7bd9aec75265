#pragma once

#include "clp/quantile.hpp"
#include "clp/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace clp {

/// max(lower - y, y - upper). Negative iff y lies strictly inside the band.
double nonconformity(double lower, double upper, double y);

/// k-th smallest score with k = ceil((K + 1)(1 - alpha)); +inf when k > K.
double conformal_quantile(std::span<const double> scores, double alpha);

/// Index k (1-based) used by conformal_quantile for K scores.
std::size_t conformal_rank(std::size_t num_scores, double alpha);

/// Closed interval; upper may be +inf.
struct PredictionInterval {
  double lower = 0.0;
  double upper = 0.0;

  double length() const { return upper - lower; }
  bool contains(double y) const { return lower <= y && y <= upper; }
  friend bool operator==(const PredictionInterval&, const PredictionInterval&) = default;
};

/// [lower - q_hat, upper + q_hat]; collapses to the midpoint when a negative
/// q_hat would invert the interval.
PredictionInterval prediction_interval(double lower, double upper, double q_hat);

struct ConformalReport {
  double empirical_coverage = 0.0;
  double avg_interval_length = 0.0;
  double q_hat = 0.0;
  double alpha = 0.0;
  std::size_t calib_size = 0;
  std::size_t test_size = 0;
};

/// Coverage and mean length over paired intervals and labels. q_hat, alpha
/// and calib_size are left for the caller to fill.
ConformalReport evaluate(std::span<const PredictionInterval> intervals, std::span<const double> labels);

struct ConformalResult {
  double q_hat = 0.0;
  std::vector<double> calib_scores;
  std::vector<PredictionInterval> intervals;
};

/// Scores the calibration rows, takes the conformal quantile and widens the
/// quantile band of every test row by it.
ConformalResult conformalize(const QuantileModel& model, const Matrix& calib_embeddings,
                             std::span<const double> calib_labels, const Matrix& test_embeddings, double alpha);

}  // namespace clp
