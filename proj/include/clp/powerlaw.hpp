#pragma once

#include "clp/errors.hpp"
#include "clp/rng.hpp"
#include "clp/types.hpp"

#include <cstddef>
#include <span>

namespace clp {

/// Raised when the zeta series does not converge (beta <= 1).
class DivergenceError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Best-fit discrete power law for the tail d >= d_min of a degree sequence.
struct PowerLawFit {
  double beta_hat = 0.0;
  Degree d_min = 1;
  double ks = 0.0;
  std::size_t tail_size = 0;
};

struct PowerLawFitOptions {
  /// Candidate d_min values must leave at least this many degrees in the tail.
  std::size_t min_tail = 10;
};

/// Hurwitz zeta sum_{i>=0} (i + a)^(-beta), absolute error well below 1e-10.
double hurwitz_zeta(double beta, double a);

/// d^(-beta) / zeta(beta, d_min). Requires d >= d_min.
double powerlaw_pmf(Degree d, double beta, Degree d_min);

/// P(D <= d) for the discrete power law; 0 below d_min.
double powerlaw_cdf(Degree d, double beta, Degree d_min);

/// Continuous-approximation MLE 1 + n / sum log(d_i / (d_min - 1/2)) over the
/// degrees that are >= d_min.
double estimate_beta(std::span<const Degree> degrees, Degree d_min);

/// max over the observed tail degrees of |eCDF(d) - CDF(d)|, both restricted
/// to d >= d_min.
double ks_statistic(std::span<const Degree> degrees, double beta, Degree d_min);

/// Scans candidate d_min values and keeps the one with the smallest KS
/// statistic (ties go to the smaller d_min). Zero degrees are ignored.
PowerLawFit fit_power_law(std::span<const Degree> degrees, const PowerLawFitOptions& options = {});

/// Inverse-CDF draws from the discrete power law. A max_degree of 0 means
/// unbounded; otherwise draws above it are clamped. beta = +inf yields d_min.
DegreeSequence sample_powerlaw_degrees(std::size_t count, double beta, Degree d_min, Rng& rng,
                                       Degree max_degree = 0);

}  // namespace clp
