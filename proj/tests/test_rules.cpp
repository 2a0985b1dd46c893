#include <cmath>

#include <stdexcept>

#include "doctest.h"

#include "l2d/rng.hpp"
#include "l2d/rules.hpp"

using namespace l2d;

TEST_SUITE_BEGIN("rules");

TEST_CASE("chow deferral") {
  const ProbVector eta({0.2, 0.3, 0.5});
  SUBCASE("boundary is inclusive") {
    const std::vector<double> same{0.4, 0.1, 0.9};
    CHECK(chow_defer(eta, same, same, 0.0));
  }
  SUBCASE("strictly worse expert keeps") {
    const std::vector<double> model{0.1, 0.1, 0.1};
    const std::vector<double> expert{0.5, 0.5, 0.5};
    CHECK_FALSE(chow_defer(eta, model, expert, 0.0));
  }
  SUBCASE("hand enumeration") {
    const std::vector<double> model{1.0, 1.0, 0.0};
    const std::vector<double> expert{0.0, 1.0, 1.0};
    // Expected difference: (0-1)*0.2 + 0 + (1-0)*0.5 = 0.3 > 0.1 -> keep.
    CHECK(chow_statistic(eta, model, expert) == doctest::Approx(0.3));
    CHECK_FALSE(chow_defer(eta, model, expert, 0.1));
    CHECK(chow_defer(eta, model, expert, 0.3));
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(chow_defer(eta, std::vector<double>{1.0}, std::vector<double>{1.0, 2.0, 3.0}, 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("tilted posterior") {
  const ProbVector eta({0.5, 0.5});
  SUBCASE("constant losses cancel") {
    const TiltedPosterior t = tilt_posterior(eta, std::vector<double>{2.0, 2.0}, 0.7);
    CHECK(t.entries[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t.entries[1] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("huge temperature is the identity") {
    const TiltedPosterior t = tilt_posterior(eta, std::vector<double>{0.0, 1.0}, 1e9);
    CHECK(t.entries[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(t.entries[1] == doctest::Approx(0.5).epsilon(1e-8));
  }
  SUBCASE("hand arithmetic at gamma 1") {
    const TiltedPosterior t = tilt_posterior(eta, std::vector<double>{0.0, 1.0}, 1.0);
    // (0.5, 0.5 e^-1) normalized = logistic(1) against its complement.
    CHECK(t.entries[0] == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(t.entries[1] == doctest::Approx(0.2689).epsilon(1e-4));
  }
  SUBCASE("extreme losses do not underflow to zero mass") {
    const TiltedPosterior t =
        tilt_posterior(eta, std::vector<double>{5000.0, 5100.0}, 1.0);
    CHECK(t.entries[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("density-ratio deferral from weights") {
  CHECK(dr_defer_from_weights(0.5, 0.5, 1.0));       // boundary inclusive
  CHECK(dr_defer_from_weights(0.2, 0.5, 1.0));
  CHECK_FALSE(dr_defer_from_weights(0.8, 0.5, 1.0));
  CHECK_FALSE(dr_defer_from_weights(0.5, 0.0, 1.0));  // vanished expert mass
  CHECK_THROWS_AS(dr_defer_from_weights(0.5, 0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(dr_defer_from_weights(-0.1, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("threshold from rate") {
  const std::vector<double> scores{3.0, 1.0, 4.0, 2.0};
  SUBCASE("zero target") {
    const ThresholdResult r = threshold_from_rate(scores, 0.0);
    CHECK(r.tau < 1.0);
    CHECK(r.realized_rate == 0.0);
  }
  SUBCASE("full target") {
    const ThresholdResult r = threshold_from_rate(scores, 1.0);
    CHECK(r.tau >= 4.0);
    CHECK(r.realized_rate == 1.0);
  }
  SUBCASE("half target picks the second smallest") {
    const ThresholdResult r = threshold_from_rate(scores, 0.5);
    CHECK(r.tau == 2.0);
    CHECK(r.realized_rate == 0.5);
  }
  SUBCASE("ties at tau all defer") {
    const std::vector<double> tied{1.0, 1.0, 1.0, 5.0};
    const ThresholdResult r = threshold_from_rate(tied, 0.25);
    CHECK(r.tau == 1.0);
    CHECK(r.realized_rate == 0.75);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(threshold_from_rate(std::vector<double>{}, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(threshold_from_rate(scores, 1.5), std::invalid_argument);
  }
}

TEST_CASE("scorer threshold equivalence examples") {
  SUBCASE("logistic, balanced, tau 1") {
    const EquivPair pair =
        scorer_threshold_equiv(DrLossSpec::logistic(), -0.1, 0.5, 1.0);
    CHECK(pair.by_ratio);
    CHECK(pair.by_score);
  }
  SUBCASE("boundary score maps to agreement") {
    const DrLossSpec spec = DrLossSpec::logistic();
    const double pi = 0.3;
    const double tau = 2.0;
    const double mapped = spec.link(pi * tau / (1.0 - pi + pi * tau));
    const EquivPair pair = scorer_threshold_equiv(spec, mapped, pi, tau);
    CHECK(pair.by_ratio == pair.by_score);
    CHECK(pair.by_score);  // inclusive on both sides
  }
  SUBCASE("logistic, pi 0.25, tau 3 at s = 0") {
    // Mapped threshold: link(0.75/1.5) = link(0.5) = 0, so s = 0 defers.
    const EquivPair pair = scorer_threshold_equiv(DrLossSpec::logistic(), 0.0, 0.25, 3.0);
    CHECK(pair.by_ratio);
    CHECK(pair.by_score);
  }
}

TEST_CASE("equivalence sweep across all families") {
  Rng rng(29);
  for (int trial = 0; trial < 2000; ++trial) {
    const DrKind kinds[] = {DrKind::kSquared, DrKind::kLogistic, DrKind::kLsif,
                            DrKind::kKliep};
    const DrLossSpec spec = DrLossSpec::make(kinds[trial % 4]);
    double s = 0.0;
    switch (spec.kind) {
      case DrKind::kSquared: s = rng.uniform(-0.99, 0.99); break;
      case DrKind::kLogistic: s = 2.0 * rng.normal(); break;
      default: s = std::exp(rng.normal());
    }
    const double pi = rng.uniform(0.05, 0.95);
    const double tau = std::exp(rng.normal());
    const EquivPair pair = scorer_threshold_equiv(spec, s, pi, tau);
    REQUIRE(pair.by_ratio == pair.by_score);
  }
}

TEST_SUITE_END();
