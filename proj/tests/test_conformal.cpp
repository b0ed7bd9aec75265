#include "clp/conformal.hpp"
#include "clp/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

using namespace clp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Zero trunk: every row gets the band (lower, upper).
QuantileModel band_model(std::size_t dim, double lower, double upper) {
  QuantileConfig cfg;
  cfg.hidden_dim = 3;
  QuantileModel m = init_quantile_model(dim, 0.1, cfg, 0);
  m.w1.setZero();
  m.b1.setZero();
  m.w2.setZero();
  m.b2.setZero();
  m.w3.setZero();
  m.b3 << lower, upper;
  return m;
}

// alpha = percent / 100; k = ceil((K + 1)(100 - percent) / 100) in integers.
double integer_oracle(std::vector<double> scores, int percent) {
  const long K = static_cast<long>(scores.size());
  const long num = (K + 1) * (100 - percent);
  const long k = (num + 99) / 100;
  if (k > K) return kInf;
  std::sort(scores.begin(), scores.end());
  return scores[static_cast<std::size_t>(k - 1)];
}

}  // namespace

TEST_CASE("nonconformity examples") {
  CHECK(nonconformity(0.0, 1.0, 0.5) == -0.5);
  CHECK(nonconformity(0.2, 0.8, 0.8) == 0.0);
  CHECK(nonconformity(0.2, 0.8, 0.9) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK_THROWS_AS(nonconformity(0.8, 0.2, 0.5), ValidationError);
}

TEST_CASE("nonconformity is negative exactly inside the open band") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  for (int i = 0; i < 2000; ++i) {
    double a = u(gen);
    double b = u(gen);
    if (a > b) std::swap(a, b);
    const double y = u(gen);
    CHECK((nonconformity(a, b, y) < 0.0) == (a < y && y < b));
  }
}

TEST_CASE("conformal quantile examples") {
  const std::vector<double> nine{5, 3, 9, 1, 7, 2, 8, 4, 6};
  CHECK(conformal_rank(9, 0.1) == 9);
  CHECK(conformal_quantile(nine, 0.1) == 9.0);
  const std::vector<double> one{0.37};
  CHECK(conformal_quantile(one, 0.5) == 0.37);
  const std::vector<double> four{1, 2, 3, 4};
  CHECK(conformal_rank(4, 0.1) == 5);
  CHECK(conformal_quantile(four, 0.1) == kInf);
  CHECK_THROWS_AS(conformal_quantile(std::vector<double>{}, 0.1), ValidationError);
  CHECK_THROWS_AS(conformal_quantile(four, 0.0), ValidationError);
  CHECK_THROWS_AS(conformal_quantile(four, 1.0), ValidationError);
}

TEST_CASE("conformal quantile agrees with an integer-arithmetic oracle") {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<int> size(1, 300);
  std::uniform_int_distribution<int> percent(1, 99);
  std::uniform_int_distribution<int> value(-20, 20);  // ties on purpose
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<double> scores(static_cast<std::size_t>(size(gen)));
    for (auto& s : scores) s = value(gen) / 4.0;
    const int p = percent(gen);
    CHECK(conformal_quantile(scores, p / 100.0) == integer_oracle(scores, p));
  }
}

TEST_CASE("conformal quantile is non-increasing in alpha") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> scores(37);
    for (auto& s : scores) s = normal(gen);
    double previous = kInf;
    for (int p = 1; p < 100; ++p) {
      const double q = conformal_quantile(scores, p / 100.0);
      CHECK(q <= previous);
      previous = q;
    }
  }
}

TEST_CASE("an infinite calibration score never lowers q_hat") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> scores(static_cast<std::size_t>(1 + trial % 40));
    for (auto& s : scores) s = normal(gen);
    const double alpha = 0.05 + 0.9 * (trial % 17) / 16.0;
    const double before = conformal_quantile(scores, alpha);
    scores.push_back(kInf);
    CHECK(conformal_quantile(scores, alpha) >= before);
  }
}

TEST_CASE("prediction interval examples") {
  const PredictionInterval widened = prediction_interval(0.2, 0.8, 0.05);
  CHECK(widened.lower == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(widened.upper == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(prediction_interval(0.2, 0.8, 0.0) == PredictionInterval{0.2, 0.8});
  const PredictionInterval point = prediction_interval(0.4, 0.6, -0.2);
  CHECK(point.lower == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(point.upper == point.lower);
  CHECK(point.length() == 0.0);
  CHECK(prediction_interval(0.2, 0.8, kInf).upper == kInf);
  CHECK_THROWS_AS(prediction_interval(0.8, 0.2, 0.1), ValidationError);
}

TEST_CASE("intervals are closed") {
  const PredictionInterval c{0.0, 1.0};
  CHECK(c.contains(0.0));
  CHECK(c.contains(1.0));
  CHECK_FALSE(c.contains(1.0 + 1e-12));
}

TEST_CASE("evaluate examples") {
  const std::vector<PredictionInterval> unit(4, PredictionInterval{0.0, 1.0});
  const std::vector<double> binary{0, 1, 1, 0};
  const ConformalReport r = evaluate(unit, binary);
  CHECK(r.empirical_coverage == 1.0);
  CHECK(r.avg_interval_length == 1.0);
  CHECK(r.test_size == 4);

  const std::vector<PredictionInterval> mixed{{0.0, 0.5}, {0.6, 0.6}, {0.0, kInf}};
  const std::vector<double> labels{1.0, 0.6, 7.0};
  const ConformalReport m = evaluate(mixed, labels);
  CHECK(m.empirical_coverage == doctest::Approx(2.0 / 3.0));
  CHECK(m.avg_interval_length == kInf);

  CHECK_THROWS_AS(evaluate(unit, std::vector<double>{0, 1}), ValidationError);
  CHECK_THROWS_AS(evaluate(std::vector<PredictionInterval>{}, std::vector<double>{}), ValidationError);
}

TEST_CASE("evaluate is invariant to reordering interval-label pairs") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<PredictionInterval> iv(101);
  std::vector<double> y(101);
  for (std::size_t i = 0; i < iv.size(); ++i) {
    const double a = u(gen);
    iv[i] = {a, a + u(gen)};
    y[i] = std::round(u(gen));
  }
  const ConformalReport base = evaluate(iv, y);
  std::vector<std::size_t> order(iv.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), gen);
  std::vector<PredictionInterval> iv2;
  std::vector<double> y2;
  for (std::size_t i : order) {
    iv2.push_back(iv[i]);
    y2.push_back(y[i]);
  }
  const ConformalReport shuffled = evaluate(iv2, y2);
  CHECK(shuffled.empirical_coverage == base.empirical_coverage);
  CHECK(shuffled.avg_interval_length == doctest::Approx(base.avg_interval_length).epsilon(1e-14));
}

TEST_CASE("zero calibration scores leave the raw bands unchanged") {
  const QuantileModel m = band_model(2, 0.0, 1.0);
  const Matrix calib = Matrix::Random(100, 2);
  std::vector<double> labels(100);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<double>(i % 2);
  const Matrix test = Matrix::Random(7, 2);
  const ConformalResult r = conformalize(m, calib, labels, test, 0.1);
  CHECK(r.q_hat == 0.0);
  REQUIRE(r.intervals.size() == 7);
  for (const auto& iv : r.intervals) CHECK(iv == PredictionInterval{0.0, 1.0});
  CHECK_THROWS_AS(conformalize(m, Matrix(0, 2), std::vector<double>{}, test, 0.1), ValidationError);
}

TEST_CASE("conformalize is invariant to calibration order") {
  QuantileConfig cfg;
  cfg.hidden_dim = 6;
  const QuantileModel m = init_quantile_model(3, 0.1, cfg, 17);
  std::mt19937_64 gen(6);
  const Matrix calib = Matrix::Random(80, 3);
  std::vector<double> labels(80);
  for (auto& y : labels) y = static_cast<double>(gen() % 2);
  const Matrix test = Matrix::Random(20, 3);
  const ConformalResult base = conformalize(m, calib, labels, test, 0.1);

  std::vector<Eigen::Index> order(80);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), gen);
  Matrix calib2(80, 3);
  std::vector<double> labels2(80);
  for (std::size_t i = 0; i < order.size(); ++i) {
    calib2.row(static_cast<Eigen::Index>(i)) = calib.row(order[i]);
    labels2[i] = labels[static_cast<std::size_t>(order[i])];
  }
  const ConformalResult shuffled = conformalize(m, calib2, labels2, test, 0.1);
  CHECK(shuffled.q_hat == base.q_hat);
  CHECK(shuffled.intervals == base.intervals);

  std::vector<double> a = base.calib_scores;
  std::vector<double> b = shuffled.calib_scores;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("marginal coverage over exchangeable scores") {
  // K = 25, alpha = 0.1: the guarantee band is [0.9, 0.9 + 1/26].
  constexpr std::size_t K = 25;
  constexpr double alpha = 0.1;
  constexpr int resamples = 10000;
  const QuantileModel m = band_model(1, -0.5, 0.5);
  const Matrix calib = Matrix::Zero(K, 1);
  const Matrix test = Matrix::Zero(1, 1);
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal;
  std::vector<double> labels(K);
  int covered = 0;
  for (int r = 0; r < resamples; ++r) {
    for (auto& y : labels) y = normal(gen);
    const ConformalResult res = conformalize(m, calib, labels, test, alpha);
    covered += res.intervals.front().contains(normal(gen));
  }
  const double coverage = covered / static_cast<double>(resamples);
  const double lo = 1.0 - alpha;
  const double hi = 1.0 - alpha + 1.0 / (K + 1.0);
  const double se = std::sqrt(hi * (1.0 - hi) / resamples);
  CHECK(coverage >= lo - 3.0 * se);
  CHECK(coverage <= hi + 3.0 * se);
}
