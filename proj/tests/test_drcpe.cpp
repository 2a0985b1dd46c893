#include <cmath>

#include <stdexcept>

#include "doctest.h"

#include "l2d/drcpe.hpp"
#include "l2d/ideal.hpp"
#include "l2d/rng.hpp"

using namespace l2d;

TEST_SUITE_BEGIN("drcpe");

TEST_CASE("partial loss values") {
  CHECK(dr_partial(DrLossSpec::squared(), 1, 1.0) == 0.0);
  CHECK(dr_partial(DrLossSpec::logistic(), -1, 0.0) == doctest::Approx(std::log(2.0)));
  CHECK(dr_partial(DrLossSpec::kliep(), 1, 1.0) == doctest::Approx(0.0));
  CHECK(dr_partial(DrLossSpec::lsif(), 1, 2.0) == doctest::Approx(-2.0));
  CHECK(dr_partial(DrLossSpec::lsif(), -1, 2.0) == doctest::Approx(2.0));
}

TEST_CASE("score domain rejection") {
  CHECK_THROWS_AS(dr_partial(DrLossSpec::kliep(), 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(dr_partial(DrLossSpec::kliep(), 1, -0.5), std::invalid_argument);
  CHECK_THROWS_AS(dr_partial(DrLossSpec::lsif(), -1, -1.0), std::invalid_argument);
  CHECK_NOTHROW(dr_partial(DrLossSpec::logistic(), 1, -50.0));
}

TEST_CASE("links and the positive-score parameterization") {
  for (DrKind kind : {DrKind::kSquared, DrKind::kLogistic, DrKind::kLsif, DrKind::kKliep}) {
    const DrLossSpec spec = DrLossSpec::make(kind);
    for (double p = 0.01; p < 1.0; p += 0.07) {
      CHECK(spec.link_inverse(spec.link(p)) == doctest::Approx(p).epsilon(1e-9));
    }
    for (double u : {-3.0, -0.5, 0.0, 0.5, 3.0}) {
      CHECK(spec.in_score_domain(spec.to_score(u)));
    }
  }
  // Positive families map through a softplus; symmetric ones are identity.
  CHECK(DrLossSpec::lsif().to_score(-40.0) > 0.0);
  CHECK(DrLossSpec::squared().to_score(-40.0) == -40.0);
}

TEST_CASE("empirical joint loss") {
  const DrLossSpec spec = DrLossSpec::squared();
  SUBCASE("all-zero weights give zero") {
    const std::vector<double> scores{0.3, -0.2};
    const std::vector<double> zeros{0.0, 0.0};
    CHECK(joint_drcpe_loss(spec, scores, zeros, zeros) == 0.0);
  }
  SUBCASE("single example hand arithmetic") {
    const std::vector<double> scores{0.0};
    const std::vector<double> ones{1.0};
    CHECK(joint_drcpe_loss(spec, scores, ones, ones) == doctest::Approx(2.0));
  }
  SUBCASE("length mismatch rejected") {
    CHECK_THROWS_AS(joint_drcpe_loss(spec, std::vector<double>{0.0},
                                     std::vector<double>{1.0, 2.0},
                                     std::vector<double>{1.0, 2.0}),
                    std::invalid_argument);
  }
}

// Enumeration oracle: a 4-atom instance with rational masses is expanded
// into an explicit finite sample whose empirical mean must equal the exact
// expectation.
TEST_CASE("empirical mean over a full enumeration equals the exact joint loss") {
  DiscreteInstance inst;
  inst.atom_probs = {0.25, 0.25, 0.25, 0.25};
  inst.posteriors = {ProbVector({0.25, 0.75}), ProbVector({0.5, 0.5}),
                     ProbVector({1.0, 0.0}), ProbVector({0.75, 0.25})};
  inst.model_losses = {{0.0, 1.0}, {0.5, 0.25}, {0.0, 2.0}, {1.0, 0.0}};
  inst.expert_losses = {{1.0, 0.0}, {0.25, 0.5}, {0.5, 0.5}, {0.0, 1.0}};
  inst.validate();

  const DrLossSpec spec = DrLossSpec::squared();
  const std::vector<double> scores{0.4, -0.3, 0.1, 0.9};
  const double gamma = 0.5;
  const double gamma_e = 0.8;

  // Each (atom, label) pair occurs with probability k/16; replicate
  // accordingly: sample weights exp(-loss/gamma) per drawn label.
  std::vector<double> sample_scores, sample_w, sample_we;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t y = 0; y < 2; ++y) {
      const int copies = static_cast<int>(std::lround(16.0 * 0.25 * inst.posteriors[i][y]));
      for (int rep = 0; rep < copies; ++rep) {
        sample_scores.push_back(scores[i]);
        sample_w.push_back(kl_joint_weight(inst.model_losses[i][y], gamma));
        sample_we.push_back(kl_joint_weight(inst.expert_losses[i][y], gamma_e));
      }
    }
  }
  REQUIRE(sample_scores.size() == 16);
  const double empirical = joint_drcpe_loss(spec, sample_scores, sample_w, sample_we);
  const double exact = joint_drcpe_loss_exact(spec, scores, inst, gamma, gamma_e);
  CHECK(empirical == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("marginal loss equals joint under degenerate uncertainty") {
  const DrLossSpec spec = DrLossSpec::squared();
  SUBCASE("one-hot posteriors") {
    DiscreteInstance inst;
    inst.atom_probs = {0.5, 0.5};
    inst.posteriors = {ProbVector::one_hot(3, 0), ProbVector::one_hot(3, 2)};
    inst.model_losses = {{0.3, 1.0, 0.7}, {0.9, 0.1, 0.4}};
    inst.expert_losses = {{0.2, 0.8, 0.5}, {0.6, 0.3, 0.2}};
    const std::vector<double> scores{0.2, -0.4};
    CHECK(marginal_drcpe_loss(spec, scores, inst, 0.5, 0.5) ==
          doctest::Approx(joint_drcpe_loss_exact(spec, scores, inst, 0.5, 0.5)));
  }
  SUBCASE("constant conditional losses") {
    DiscreteInstance inst;
    inst.atom_probs = {0.4, 0.6};
    inst.posteriors = {ProbVector({0.3, 0.7}), ProbVector({0.8, 0.2})};
    inst.model_losses = {{0.5, 0.5}, {1.2, 1.2}};
    inst.expert_losses = {{0.1, 0.1}, {0.9, 0.9}};
    const std::vector<double> scores{1.0, -1.0};
    CHECK(marginal_drcpe_loss(spec, scores, inst, 0.7, 0.3) ==
          doctest::Approx(joint_drcpe_loss_exact(spec, scores, inst, 0.7, 0.3)));
  }
}

TEST_CASE("jensen ordering on random instances") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const DiscreteInstance inst = random_instance(rng, 8, 4, 1.5);
    const DrLossSpec spec = DrLossSpec::logistic();
    std::vector<double> scores(inst.num_atoms());
    for (double& s : scores) s = rng.normal();
    const double marginal = marginal_drcpe_loss(spec, scores, inst, 0.5, 0.8);
    const double joint = joint_drcpe_loss_exact(spec, scores, inst, 0.5, 0.8);
    CHECK(marginal <= joint + 1e-9);
  }
}

TEST_CASE("pointwise optimal scores") {
  CHECK(pointwise_optimal_score(DrLossSpec::squared(), 0.4, 0.4) == 0.0);
  CHECK(pointwise_optimal_score(DrLossSpec::lsif(), 0.9, 0.3) == doctest::Approx(3.0));
  CHECK(pointwise_optimal_score(DrLossSpec::kliep(), 0.9, 0.3) == doctest::Approx(3.0));
  CHECK(pointwise_optimal_score(DrLossSpec::logistic(), 0.9, 0.3) ==
        doctest::Approx(std::log(3.0)));

  // Independent route for the lsif value: dense grid minimization of
  // 0.9 * (-s) + 0.3 * s^2/2.
  double best_s = 0.0;
  double best = 1e300;
  for (double s = 0.01; s < 10.0; s += 1e-4) {
    const double risk = 0.9 * (-s) + 0.3 * 0.5 * s * s;
    if (risk < best) {
      best = risk;
      best_s = s;
    }
  }
  CHECK(best_s == doctest::Approx(3.0).epsilon(1e-3));

  CHECK_THROWS_AS(pointwise_optimal_score(DrLossSpec::squared(), 0.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(pointwise_optimal_score(DrLossSpec::lsif(), 0.5, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(pointwise_optimal_score(DrLossSpec::logistic(), 0.0, 0.5),
                  std::invalid_argument);
}

TEST_CASE("squared scorer in the small-temperature limit") {
  // With zero-one losses and a tiny temperature, the weights are the
  // conditional correctness probabilities and the optimal squared score is
  // their normalized difference.
  const double p_h = 0.55;
  const double p_e = 0.85;
  double w = 0.0, we = 0.0;
  for (int correct : {1, 0}) {
    const double mass_h = correct ? p_h : 1.0 - p_h;
    const double mass_e = correct ? p_e : 1.0 - p_e;
    w += mass_h * kl_joint_weight(correct ? 0.0 : 1.0, 1e-6);
    we += mass_e * kl_joint_weight(correct ? 0.0 : 1.0, 1e-6);
  }
  const double s = pointwise_optimal_score(DrLossSpec::squared(), w, we);
  CHECK(s == doctest::Approx((p_h - p_e) / (p_h + p_e)).epsilon(1e-4));
}

TEST_CASE("gap bounds") {
  SUBCASE("one-hot posterior collapses the sandwich") {
    DiscreteInstance inst;
    inst.atom_probs = {1.0};
    inst.posteriors = {ProbVector::one_hot(2, 0)};
    inst.model_losses = {{0.4, 0.9}};
    inst.expert_losses = {{0.2, 0.7}};
    const std::vector<double> scores{0.3};
    const GapBounds b = gap_bounds(DrLossSpec::squared(), scores, inst, 0.5, 0.5, 1.0);
    CHECK(b.lower == doctest::Approx(0.0));
    CHECK(b.upper == doctest::Approx(0.0));
    CHECK(b.actual == doctest::Approx(0.0));
  }
  SUBCASE("constant conditional losses collapse the sandwich") {
    DiscreteInstance inst;
    inst.atom_probs = {0.6, 0.4};
    inst.posteriors = {ProbVector({0.5, 0.5}), ProbVector({0.2, 0.8})};
    inst.model_losses = {{0.7, 0.7}, {0.2, 0.2}};
    inst.expert_losses = {{0.4, 0.4}, {0.9, 0.9}};
    const std::vector<double> scores{-0.2, 0.5};
    const GapBounds b = gap_bounds(DrLossSpec::squared(), scores, inst, 0.5, 0.5, 1.0);
    CHECK(b.lower == doctest::Approx(0.0));
    CHECK(b.upper == doctest::Approx(0.0));
    CHECK(std::abs(b.actual) < 1e-15);
  }
  SUBCASE("strict sandwich on a random 3-class 6-point instance") {
    Rng rng(13);
    DiscreteInstance inst = random_instance(rng, 6, 3, 1.0);
    while (inst.num_atoms() != 6 || inst.num_classes() != 3) {
      inst = random_instance(rng, 6, 3, 1.0);
    }
    std::vector<double> scores(6);
    for (double& s : scores) s = rng.normal();
    const GapBounds b = gap_bounds(DrLossSpec::squared(), scores, inst, 0.5, 0.5, 1.0);
    CHECK(b.lower > 0.0);
    CHECK(b.lower < b.actual);
    CHECK(b.actual < b.upper);
  }
  SUBCASE("lsif rejected outright") {
    DiscreteInstance inst;
    inst.atom_probs = {1.0};
    inst.posteriors = {ProbVector({0.5, 0.5})};
    inst.model_losses = {{0.0, 1.0}};
    inst.expert_losses = {{1.0, 0.0}};
    CHECK_THROWS_AS(
        gap_bounds(DrLossSpec::lsif(), std::vector<double>{1.0}, inst, 0.5, 0.5, 1.0),
        std::invalid_argument);
  }
  SUBCASE("negative partial at the evaluated score rejected") {
    DiscreteInstance inst;
    inst.atom_probs = {1.0};
    inst.posteriors = {ProbVector({0.5, 0.5})};
    inst.model_losses = {{0.0, 1.0}};
    inst.expert_losses = {{1.0, 0.0}};
    // kliep's positive partial -log(v) is negative for v > 1.
    CHECK_THROWS_AS(
        gap_bounds(DrLossSpec::kliep(), std::vector<double>{2.0}, inst, 0.5, 0.5, 1.0),
        std::invalid_argument);
  }
}

TEST_CASE("ratio from score") {
  CHECK(ratio_from_score(DrLossSpec::logistic(), 0.0, 0.5) == doctest::Approx(1.0));
  CHECK(ratio_from_score(DrLossSpec::squared(), 0.5, 0.5) == doctest::Approx(3.0));
  for (DrKind kind : {DrKind::kSquared, DrKind::kLogistic, DrKind::kLsif, DrKind::kKliep}) {
    const DrLossSpec spec = DrLossSpec::make(kind);
    for (double pi : {0.2, 0.5, 0.8}) {
      CHECK(ratio_from_score(spec, spec.link(pi), pi) == doctest::Approx(1.0));
    }
  }
  CHECK_THROWS_AS(ratio_from_score(DrLossSpec::squared(), 1.0, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(ratio_from_score(DrLossSpec::squared(), 0.5, 0.0),
                  std::invalid_argument);
}

TEST_SUITE_END();
