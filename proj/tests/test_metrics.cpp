#include <stdexcept>
#include <cmath>

#include "doctest.h"
#include "exprl/metrics.hpp"
#include "exprl/rng.hpp"

using namespace exprl;

namespace {

metrics::LearningCurve make_curve(int first_epoch, const std::vector<double>& scores) {
  metrics::LearningCurve c;
  for (std::size_t i = 0; i < scores.size(); ++i)
    c.points.push_back({first_epoch + static_cast<int>(i), scores[i]});
  return c;
}

// Piecewise-linear curve sampled at integer epochs between random breakpoints.
metrics::LearningCurve random_piecewise_linear(Rng& rng, int epochs) {
  std::vector<double> scores(static_cast<std::size_t>(epochs));
  int at = 0;
  double value = rng.next_double();
  while (at < epochs - 1) {
    const int next = std::min(epochs - 1, at + 1 + rng.next_index(20));
    const double target = 2.0 * rng.next_double() - 0.5;
    for (int e = at; e <= next; ++e)
      scores[static_cast<std::size_t>(e)] =
          value + (target - value) * (e - at) / static_cast<double>(next - at);
    at = next;
    value = target;
  }
  return make_curve(1, scores);
}

}  // namespace

TEST_CASE("auc100: constant curve at ref_max over epochs 1..101 is exactly 1.0") {
  metrics::LearningCurve c = make_curve(1, std::vector<double>(101, 3.0));
  const metrics::Auc100Result r = metrics::auc100(c, 3.0);
  CHECK(std::abs(r.value - 1.0) < 1e-12);
  CHECK(std::abs(r.raw_area - 300.0) < 1e-12);
}

TEST_CASE("auc100: linear ramp 0 to ref_max over epochs 1..101 is exactly 0.5") {
  std::vector<double> scores(101);
  for (int i = 0; i <= 100; ++i) scores[static_cast<std::size_t>(i)] = 2.0 * i / 100.0;
  const metrics::Auc100Result r = metrics::auc100(make_curve(1, scores), 2.0);
  CHECK(std::abs(r.value - 0.5) < 1e-12);
}

TEST_CASE("auc100: hand trapezoid (1,0) (51,2) (101,1) with ref_max 2 gives 0.625") {
  // Not contiguous points, so sample the two linear segments densely.
  std::vector<double> scores;
  for (int e = 1; e <= 101; ++e) {
    if (e <= 51)
      scores.push_back(2.0 * (e - 1) / 50.0);
    else
      scores.push_back(2.0 - (e - 51) / 50.0);
  }
  const metrics::Auc100Result r = metrics::auc100(make_curve(1, scores), 2.0);
  CHECK(std::abs(r.raw_area - 125.0) < 1e-12);
  CHECK(std::abs(r.value - 0.625) < 1e-12);
}

TEST_CASE("auc100: fewer than 2 points is an insufficient-data error") {
  CHECK_THROWS_AS(metrics::auc100(make_curve(1, {1.0}), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(metrics::auc100(make_curve(1, {1.0, 2.0}), 0.0), std::invalid_argument);
}

TEST_CASE("auc100: exact on random piecewise-linear curves vs a fine Riemann oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const metrics::LearningCurve c = random_piecewise_linear(rng, 60);
    const metrics::Auc100Result r = metrics::auc100(c, 1.5);
    // Midpoint-rule oracle on a fine grid; exact on linear pieces except the
    // vanishing cells straddling breakpoints.
    const int fine = 200000;
    double oracle = 0.0;
    const double h = (c.last_epoch() - c.first_epoch()) / static_cast<double>(fine);
    for (int i = 0; i < fine; ++i) {
      const double x = 1.0 + (i + 0.5) * h;
      const int left = std::min(static_cast<int>(x), c.last_epoch() - 1);
      const double frac = x - left;
      const double y = c.points[static_cast<std::size_t>(left - 1)].score * (1.0 - frac) +
                       c.points[static_cast<std::size_t>(left)].score * frac;
      oracle += y * h;
    }
    CHECK(r.raw_area == doctest::Approx(oracle).epsilon(1e-7));
  }
}

TEST_CASE("auc100: scaling scores and ref_max by the same factor is invariant") {
  Rng rng(9);
  const metrics::LearningCurve c = random_piecewise_linear(rng, 40);
  metrics::LearningCurve scaled = c;
  for (auto& p : scaled.points) p.score *= 7.0;
  const double a = metrics::auc100(c, 1.3).value;
  const double b = metrics::auc100(scaled, 1.3 * 7.0).value;
  CHECK(std::abs(a - b) < 1e-12);
}

TEST_CASE("aggregate_trials commutes with auc100") {
  Rng rng(13);
  std::vector<metrics::LearningCurve> curves;
  for (int i = 0; i < 3; ++i) curves.push_back(random_piecewise_linear(rng, 50));
  const metrics::LearningCurve mean = metrics::aggregate_trials(curves);
  double mean_of_aucs = 0.0;
  for (const auto& c : curves) mean_of_aucs += metrics::auc100(c, 2.0).value;
  mean_of_aucs /= 3.0;
  CHECK(std::abs(metrics::auc100(mean, 2.0).value - mean_of_aucs) < 1e-12);
}

TEST_CASE("aggregate_trials: single curve is itself; {0,1} curves average to 0.5") {
  const metrics::LearningCurve c = make_curve(1, {0.25, 0.5, 0.75});
  const metrics::LearningCurve same = metrics::aggregate_trials({c});
  CHECK(same.points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(same.points[i].score == c.points[i].score);

  const metrics::LearningCurve zeros = make_curve(1, {0.0, 0.0});
  const metrics::LearningCurve ones = make_curve(1, {1.0, 1.0});
  const metrics::LearningCurve mean = metrics::aggregate_trials({zeros, ones});
  for (const auto& p : mean.points) CHECK(p.score == 0.5);

  CHECK_THROWS_AS(metrics::aggregate_trials({zeros, make_curve(1, {1.0, 1.0, 1.0})}),
                  std::invalid_argument);
}

TEST_CASE("aggregate_trials: three fixture curves match a loop oracle") {
  const std::vector<metrics::LearningCurve> curves = {make_curve(1, {0.1, 0.4, 0.9}),
                                                      make_curve(1, {0.3, 0.3, 0.3}),
                                                      make_curve(1, {0.8, 0.2, 0.6})};
  const metrics::LearningCurve mean = metrics::aggregate_trials(curves);
  for (std::size_t i = 0; i < 3; ++i) {
    double sum = 0.0;
    for (const auto& c : curves) sum += c.points[i].score;
    CHECK(mean.points[i].score == doctest::Approx(sum / 3.0).epsilon(1e-15));
  }
}

TEST_CASE("residual_summary cases") {
  using metrics::EpochResidual;
  SUBCASE("monotone decreasing means peak at epoch 1") {
    const std::vector<EpochResidual> r = {{1.0, 0}, {0.7, 0}, {0.4, 0}};
    const metrics::ResidualSummary s = metrics::residual_summary(r);
    CHECK(s.peak_epoch == 1);
    CHECK(s.final_over_peak == doctest::Approx(0.4));
  }
  SUBCASE("means [0.2, 1.0, 0.5, 0.4]") {
    const std::vector<EpochResidual> r = {{0.2, 0}, {1.0, 0}, {0.5, 0}, {0.4, 0}};
    const metrics::ResidualSummary s = metrics::residual_summary(r);
    CHECK(s.peak_epoch == 2);
    CHECK(s.peak_mean == 1.0);
    CHECK(s.final_mean == 0.4);
    CHECK(s.final_over_peak == doctest::Approx(0.4));
  }
  SUBCASE("constant means give ratio 1.0") {
    const std::vector<EpochResidual> r = {{0.3, 0}, {0.3, 0}, {0.3, 0}};
    CHECK(metrics::residual_summary(r).final_over_peak == 1.0);
  }
}

TEST_CASE("median: odd, even, and singleton samples") {
  CHECK(metrics::median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(metrics::median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(metrics::median({7.0}) == 7.0);
}

TEST_CASE("curve validation rejects gaps and non-finite scores") {
  metrics::LearningCurve gap;
  gap.points = {{1, 0.0}, {3, 1.0}};
  CHECK_THROWS_AS(gap.validate(), std::invalid_argument);
  metrics::LearningCurve nan_curve;
  nan_curve.points = {{1, 0.0}, {2, std::nan("")}};
  CHECK_THROWS_AS(nan_curve.validate(), std::invalid_argument);
}
