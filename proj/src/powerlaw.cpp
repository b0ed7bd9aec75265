#include "clp/powerlaw.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

namespace clp {

namespace {

// B_{2j} / (2j)! for j = 1..8.
constexpr std::array<double, 8> kBernoulliOverFactorial = {
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
    -3617.0 / 510.0 / 20922789888000.0,
};

constexpr int kDirectTerms = 20;

std::vector<Degree> sorted_tail(std::span<const Degree> degrees, Degree d_min) {
  std::vector<Degree> tail;
  tail.reserve(degrees.size());
  for (Degree d : degrees) {
    if (d >= d_min) tail.push_back(d);
  }
  std::sort(tail.begin(), tail.end());
  return tail;
}

void require_beta(double beta) {
  if (!(beta > 1.0)) throw DivergenceError("zeta(beta, a) diverges for beta <= 1");
}

// KS distance of a sorted tail against the power law (beta, d_min).
double ks_sorted_tail(std::span<const Degree> tail, double beta, Degree d_min) {
  const double norm = hurwitz_zeta(beta, d_min);
  const double n = static_cast<double>(tail.size());
  double partial = 0.0;  // sum_{k = d_min}^{current} k^-beta
  Degree current = d_min - 1;
  double worst = 0.0;
  std::size_t i = 0;
  while (i < tail.size()) {
    const Degree d = tail[i];
    std::size_t j = i;
    while (j < tail.size() && tail[j] == d) ++j;
    if (d - current > 64) {
      partial = norm - hurwitz_zeta(beta, static_cast<double>(d) + 1.0);
    } else {
      for (Degree k = current + 1; k <= d; ++k) partial += std::pow(static_cast<double>(k), -beta);
    }
    current = d;
    const double model = std::min(1.0, partial / norm);
    const double empirical = static_cast<double>(j) / n;
    worst = std::max(worst, std::abs(empirical - model));
    i = j;
  }
  return std::min(worst, 1.0);
}

}  // namespace

double hurwitz_zeta(double beta, double a) {
  require_beta(beta);
  if (!(a > 0.0)) throw DomainError("hurwitz_zeta requires a > 0");

  double sum = 0.0;
  for (int k = 0; k < kDirectTerms; ++k) sum += std::pow(a + k, -beta);

  // Euler-Maclaurin remainder for sum_{k >= N} (a + k)^-beta.
  const double x = a + kDirectTerms;
  const double x_pow = std::pow(x, -beta);
  sum += x * x_pow / (beta - 1.0);
  sum += 0.5 * x_pow;
  double rising = beta;       // beta (beta+1) ... (beta + 2j - 2)
  double x_term = x_pow / x;  // x^(-beta - 2j + 1)
  for (std::size_t j = 0; j < kBernoulliOverFactorial.size(); ++j) {
    const double term = kBernoulliOverFactorial[j] * rising * x_term;
    sum += term;
    if (std::abs(term) < 1e-17 * sum) break;
    const double order = 2.0 * static_cast<double>(j + 1);
    rising *= (beta + order - 1.0) * (beta + order);
    x_term /= x * x;
  }
  return sum;
}

double powerlaw_pmf(Degree d, double beta, Degree d_min) {
  if (d_min < 1) throw DomainError("d_min must be >= 1");
  if (d < d_min) throw DomainError("powerlaw_pmf: d < d_min");
  return std::pow(static_cast<double>(d), -beta) / hurwitz_zeta(beta, d_min);
}

double powerlaw_cdf(Degree d, double beta, Degree d_min) {
  if (d_min < 1) throw DomainError("d_min must be >= 1");
  if (d < d_min) return 0.0;
  const double norm = hurwitz_zeta(beta, d_min);
  return std::clamp(1.0 - hurwitz_zeta(beta, static_cast<double>(d) + 1.0) / norm, 0.0, 1.0);
}

double estimate_beta(std::span<const Degree> degrees, Degree d_min) {
  if (d_min < 1) throw ValidationError("estimate_beta: d_min must be >= 1");
  const double shift = static_cast<double>(d_min) - 0.5;
  std::size_t n = 0;
  double log_sum = 0.0;
  for (Degree d : degrees) {
    if (d < d_min) continue;
    ++n;
    log_sum += std::log(static_cast<double>(d) / shift);
  }
  if (n == 0) throw ValidationError("estimate_beta: no degree >= d_min");
  return 1.0 + static_cast<double>(n) / log_sum;
}

double ks_statistic(std::span<const Degree> degrees, double beta, Degree d_min) {
  if (d_min < 1) throw ValidationError("ks_statistic: d_min must be >= 1");
  const auto tail = sorted_tail(degrees, d_min);
  if (tail.empty()) throw ValidationError("ks_statistic: no degree >= d_min");
  return ks_sorted_tail(tail, beta, d_min);
}

PowerLawFit fit_power_law(std::span<const Degree> degrees, const PowerLawFitOptions& options) {
  const auto sorted = sorted_tail(degrees, 1);
  if (sorted.empty()) throw ValidationError("fit_power_law: no degree >= 1");

  // suffix_log[i] = sum_{k >= i} log(sorted[k])
  std::vector<double> suffix_log(sorted.size() + 1, 0.0);
  for (std::size_t i = sorted.size(); i-- > 0;) {
    suffix_log[i] = suffix_log[i + 1] + std::log(static_cast<double>(sorted[i]));
  }

  auto evaluate = [&](std::size_t first) {
    PowerLawFit fit;
    fit.d_min = sorted[first];
    fit.tail_size = sorted.size() - first;
    const double n = static_cast<double>(fit.tail_size);
    const double log_sum = suffix_log[first] - n * std::log(static_cast<double>(fit.d_min) - 0.5);
    fit.beta_hat = 1.0 + n / log_sum;
    fit.ks = ks_sorted_tail(std::span(sorted).subspan(first), fit.beta_hat, fit.d_min);
    return fit;
  };

  std::optional<PowerLawFit> best;
  for (std::size_t first = 0; first < sorted.size();) {
    if (sorted.size() - first < options.min_tail) break;
    const PowerLawFit candidate = evaluate(first);
    if (!best || candidate.ks < best->ks) best = candidate;
    const Degree d = sorted[first];
    while (first < sorted.size() && sorted[first] == d) ++first;
  }
  if (!best) best = evaluate(0);
  return *best;
}

DegreeSequence sample_powerlaw_degrees(std::size_t count, double beta, Degree d_min, Rng& rng,
                                       Degree max_degree) {
  if (d_min < 1) throw ValidationError("sample_powerlaw_degrees: d_min must be >= 1");
  if (max_degree != 0 && max_degree < d_min) {
    throw ValidationError("sample_powerlaw_degrees: max_degree < d_min");
  }
  DegreeSequence out(count, d_min);
  if (std::isinf(beta) && beta > 0) return out;
  require_beta(beta);

  const double norm = hurwitz_zeta(beta, d_min);
  constexpr std::size_t kTableSize = 100000;
  const std::size_t table_size =
      max_degree == 0 ? kTableSize : std::min<std::size_t>(kTableSize, max_degree - d_min + 1);
  std::vector<double> cdf(table_size);
  double acc = 0.0;
  for (std::size_t i = 0; i < table_size; ++i) {
    acc += std::pow(static_cast<double>(d_min + i), -beta) / norm;
    cdf[i] = acc;
  }

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (auto& d : out) {
    const double u = uniform(rng);
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    if (it != cdf.end()) {
      d = d_min + static_cast<Degree>(it - cdf.begin());
      continue;
    }
    const Degree table_max = d_min + static_cast<Degree>(table_size - 1);
    if (max_degree != 0 && table_max >= max_degree) {
      d = max_degree;
      continue;
    }
    // Beyond the table: invert zeta(beta, d) ~ (d - 1/2)^(1 - beta) / (beta - 1).
    const double tail_mass = std::max(1.0 - u, std::numeric_limits<double>::min());
    const double x = 0.5 + std::pow((beta - 1.0) * tail_mass * norm, -1.0 / (beta - 1.0));
    double value = std::max(std::floor(x), static_cast<double>(table_max) + 1.0);
    if (max_degree != 0) value = std::min(value, static_cast<double>(max_degree));
    value = std::min(value, static_cast<double>(std::numeric_limits<Degree>::max()));
    d = static_cast<Degree>(value);
  }
  return out;
}

}  // namespace clp
