#include "clp/graph.hpp"
#include "clp/powerlaw.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace clp;

namespace {

// Direct summation of the first n terms (smallest first) plus the midpoint
// integral of the remainder.
double zeta_oracle(double beta, double a, std::size_t n = 1'000'000) {
  double sum = 0.0;
  for (std::size_t i = n; i-- > 0;) sum += std::pow(a + static_cast<double>(i), -beta);
  const double x = a + static_cast<double>(n) - 0.5;
  return sum + std::pow(x, 1.0 - beta) / (beta - 1.0);
}

// Large-sample limit of the tail MLE: 1 + 1 / E[log(d / (d_min - 1/2))]
// under the discrete power law, by direct summation.
double mle_limit(double beta, Degree d_min) {
  const double norm = zeta_oracle(beta, d_min, 200'000);
  double expected_log = 0.0;
  for (double d = d_min; d < 2e6; d += 1.0) {
    expected_log += std::pow(d, -beta) / norm * std::log(d / (d_min - 0.5));
  }
  return 1.0 + 1.0 / expected_log;
}

}  // namespace

TEST_CASE("hurwitz_zeta closed forms") {
  const double pi2_6 = std::numbers::pi * std::numbers::pi / 6.0;
  CHECK(std::abs(hurwitz_zeta(2.0, 1.0) - pi2_6) < 1e-8);
  CHECK(std::abs(hurwitz_zeta(2.0, 2.0) - (pi2_6 - 1.0)) < 1e-8);
  CHECK(std::abs(hurwitz_zeta(3.0, 1.0) - 1.2020569031595942) < 1e-8);
  CHECK(std::abs(hurwitz_zeta(4.0, 1.0) - std::pow(std::numbers::pi, 4) / 90.0) < 1e-12);
  // zeta(2, 1/2) = pi^2 / 2
  CHECK(std::abs(hurwitz_zeta(2.0, 0.5) - std::numbers::pi * std::numbers::pi / 2.0) < 1e-12);
}

TEST_CASE("hurwitz_zeta matches direct summation") {
  for (double beta : {1.05, 1.5, 2.0, 2.5, 3.0, 6.0}) {
    for (double a : {0.5, 1.0, 2.0, 7.5, 40.0}) {
      CAPTURE(beta);
      CAPTURE(a);
      CHECK(std::abs(hurwitz_zeta(beta, a) - zeta_oracle(beta, a)) < 1e-10 * std::max(1.0, zeta_oracle(beta, a)));
    }
  }
}

TEST_CASE("hurwitz_zeta shift identity") {
  for (double beta : {1.5, 2.0, 3.0}) {
    for (int a = 1; a <= 10; ++a) {
      const double lhs = hurwitz_zeta(beta, a + 1);
      const double rhs = hurwitz_zeta(beta, a) - std::pow(a, -beta);
      CHECK(std::abs(lhs - rhs) < 1e-9);
    }
  }
}

TEST_CASE("hurwitz_zeta diverges for beta <= 1") {
  CHECK_THROWS_AS(hurwitz_zeta(1.0, 1.0), DivergenceError);
  CHECK_THROWS_AS(hurwitz_zeta(0.5, 2.0), DivergenceError);
  CHECK_THROWS_AS(hurwitz_zeta(2.0, 0.0), DomainError);
}

TEST_CASE("powerlaw_pmf") {
  CHECK(std::abs(powerlaw_pmf(1, 2.0, 1) - 6.0 / (std::numbers::pi * std::numbers::pi)) < 1e-12);
  CHECK_THROWS_AS(powerlaw_pmf(1, 2.5, 2), DomainError);
  for (Degree d_min : {1u, 3u}) {
    double total = 0.0;
    for (Degree d = d_min; d < 100000; ++d) total += powerlaw_pmf(d, 2.5, d_min);
    // Remainder sum_{d >= 1e5} d^-2.5 / zeta, bounded by the oracle.
    total += zeta_oracle(2.5, 100000.0, 1000) / hurwitz_zeta(2.5, d_min);
    CHECK(std::abs(total - 1.0) < 1e-8);
    for (Degree d = d_min; d < d_min + 50; ++d) CHECK(powerlaw_pmf(d + 1, 2.5, d_min) < powerlaw_pmf(d, 2.5, d_min));
  }
}

TEST_CASE("powerlaw_cdf") {
  CHECK(powerlaw_cdf(0, 2.5, 1) == 0.0);
  CHECK(std::abs(powerlaw_cdf(1, 2.5, 1) - powerlaw_pmf(1, 2.5, 1)) < 1e-14);
  double partial = 0.0;
  for (Degree d = 3; d <= 40; ++d) {
    partial += powerlaw_pmf(d, 2.2, 3);
    CHECK(std::abs(powerlaw_cdf(d, 2.2, 3) - partial) < 1e-12);
  }
}

TEST_CASE("estimate_beta hand values") {
  const DegreeSequence ones(17, 1);
  CHECK(std::abs(estimate_beta(ones, 1) - (1.0 + 1.0 / std::log(2.0))) < 1e-12);
  CHECK(std::abs(estimate_beta(DegreeSequence{2, 2}, 2) - (1.0 + 1.0 / std::log(4.0 / 3.0))) < 1e-12);
  // Degrees below d_min are ignored.
  CHECK(estimate_beta(DegreeSequence{1, 1, 2, 2}, 2) == estimate_beta(DegreeSequence{2, 2}, 2));
  CHECK_THROWS_AS(estimate_beta(DegreeSequence{1, 1}, 2), ValidationError);
}

TEST_CASE("estimate_beta is invariant to duplicating the tail") {
  const DegreeSequence d = {1, 2, 2, 3, 5, 8, 13, 40};
  DegreeSequence twice = d;
  twice.insert(twice.end(), d.begin(), d.end());
  for (Degree d_min : {1u, 2u, 5u}) CHECK(std::abs(estimate_beta(d, d_min) - estimate_beta(twice, d_min)) < 1e-12);
}

TEST_CASE("estimate_beta converges to its large-sample limit") {
  // The continuous approximation is biased at small d_min; the oracle is the
  // limit value itself, not the generating exponent.
  Rng rng(2024);
  const auto sample = sample_powerlaw_degrees(10'000, 2.5, 1, rng);
  const double limit_1 = mle_limit(2.5, 1);
  CHECK(limit_1 == doctest::Approx(2.0185).epsilon(1e-3));
  CHECK(std::abs(estimate_beta(sample, 1) - limit_1) < 0.03);

  Rng rng6(7);
  const auto tail6 = sample_powerlaw_degrees(10'000, 2.5, 6, rng6);
  const double limit_6 = mle_limit(2.5, 6);
  CHECK(std::abs(estimate_beta(tail6, 6) - limit_6) < 0.05);
  CHECK(std::abs(limit_6 - 2.5) < 0.02);
}

TEST_CASE("ks_statistic") {
  const DegreeSequence atom = {1, 1, 1, 1};
  CHECK(std::abs(ks_statistic(atom, 2.5, 1) - (1.0 - powerlaw_pmf(1, 2.5, 1))) < 1e-12);
  // A very steep model puts all its mass on d_min.
  CHECK(ks_statistic(DegreeSequence{3, 3, 3}, 200.0, 3) < 1e-12);
  CHECK_THROWS_AS(ks_statistic(atom, 2.5, 2), ValidationError);

  Rng rng(99);
  const auto sample = sample_powerlaw_degrees(10'000, 2.5, 1, rng);
  const double ks = ks_statistic(sample, 2.5, 1);
  CHECK(ks >= 0.0);
  CHECK(ks < 0.03);

  // Brute-force oracle over every observed value.
  const DegreeSequence small = {2, 3, 3, 4, 9, 9, 9, 30, 200};
  double worst = 0.0;
  for (Degree d : small) {
    double below = 0.0;
    for (Degree x : small) below += x <= d ? 1.0 : 0.0;
    worst = std::max(worst, std::abs(below / small.size() - powerlaw_cdf(d, 2.1, 2)));
  }
  CHECK(std::abs(ks_statistic(small, 2.1, 2) - worst) < 1e-12);
}

TEST_CASE("fit_power_law") {
  Rng rng(5);
  const auto sample = sample_powerlaw_degrees(10'000, 2.5, 1, rng);
  const PowerLawFit fit = fit_power_law(sample);
  CHECK(fit.beta_hat >= 2.3);
  CHECK(fit.beta_hat <= 2.7);
  CHECK(fit.ks < 0.03);
  CHECK(fit.tail_size >= 10);
  CHECK(fit.d_min >= 1);

  // Deterministic and equal to the brute-force scan.
  const PowerLawFit again = fit_power_law(sample);
  CHECK(again.beta_hat == fit.beta_hat);
  CHECK(again.d_min == fit.d_min);

  DegreeSequence sorted = sample;
  std::sort(sorted.begin(), sorted.end());
  double best = 2.0;
  Degree best_dmin = 0;
  for (Degree d_min = 1; d_min <= sorted.back(); ++d_min) {
    const auto tail = std::count_if(sorted.begin(), sorted.end(), [&](Degree d) { return d >= d_min; });
    if (tail < 10 || !std::binary_search(sorted.begin(), sorted.end(), d_min)) continue;
    const double ks = ks_statistic(sample, estimate_beta(sample, d_min), d_min);
    if (ks < best) {
      best = ks;
      best_dmin = d_min;
    }
  }
  CHECK(fit.d_min == best_dmin);
  CHECK(fit.ks == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("fit_power_law edge cases") {
  const PowerLawFit single = fit_power_law(DegreeSequence{4, 4, 4});
  CHECK(single.d_min == 4);
  CHECK(single.tail_size == 3);
  CHECK(std::abs(single.ks - (1.0 - powerlaw_pmf(4, single.beta_hat, 4))) < 1e-12);
  CHECK_THROWS_AS(fit_power_law(DegreeSequence{0, 0}), ValidationError);
}

TEST_CASE("clique injection raises the KS statistic") {
  int raised = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Graph base = generate_powerlaw_graph(2000, 2.5, 2, 100 + seed);
    const Graph injected = inject_cliques(base, 25, 5, 200 + seed);
    const double before = fit_power_law(degree_sequence(base, true)).ks;
    const double after = fit_power_law(degree_sequence(injected, true)).ks;
    if (after > before) ++raised;
  }
  CHECK(raised >= 4);
}

TEST_CASE("sample_powerlaw_degrees") {
  Rng rng(1);
  const auto capped = sample_powerlaw_degrees(5000, 1.8, 2, rng, 50);
  CHECK(*std::min_element(capped.begin(), capped.end()) >= 2);
  CHECK(*std::max_element(capped.begin(), capped.end()) <= 50);

  Rng rng2(1);
  const auto flat = sample_powerlaw_degrees(10, std::numeric_limits<double>::infinity(), 3, rng2);
  CHECK(std::all_of(flat.begin(), flat.end(), [](Degree d) { return d == 3; }));

  // Empirical frequency of d_min against the pmf.
  Rng rng3(3);
  const auto s = sample_powerlaw_degrees(100'000, 2.5, 1, rng3);
  const double ones = static_cast<double>(std::count(s.begin(), s.end(), 1u)) / s.size();
  const double p = powerlaw_pmf(1, 2.5, 1);
  CHECK(std::abs(ones - p) < 4.0 * std::sqrt(p * (1 - p) / s.size()));
}
