#include <cmath>

#include <stdexcept>

#include "doctest.h"

#include "l2d/discrete.hpp"
#include "l2d/ideal.hpp"
#include "l2d/rng.hpp"

using namespace l2d;

TEST_SUITE_BEGIN("ideal");

TEST_CASE("kl joint weight values") {
  CHECK(kl_joint_weight(0.0, 0.3) == 1.0);
  CHECK(kl_joint_weight(0.7, 0.7) == doctest::Approx(std::exp(-1.0)));
  CHECK(kl_joint_weight(1.0, 0.5) == doctest::Approx(std::exp(-2.0)));
  // Deep underflow is allowed to hit exactly zero.
  CHECK(kl_joint_weight(1000.0, 1.0) == 0.0);
}

TEST_CASE("kl weight error paths") {
  CHECK_THROWS_AS(kl_joint_weight(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(kl_joint_weight(1.0, -0.5), std::invalid_argument);
  CHECK_THROWS_AS(kl_joint_weight(-0.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(kl_marginal_weight(-0.1, 0.5), std::invalid_argument);
}

TEST_CASE("marginal weight and the Jensen direction") {
  CHECK(kl_marginal_weight(0.0, 0.5) == 1.0);

  // Degenerate posterior: the marginal weight of a single atom equals the
  // joint weight of its one loss.
  CHECK(kl_marginal_weight(0.37, 0.5) == kl_joint_weight(0.37, 0.5));

  // Two-class posterior (0.5, 0.5) with losses (0, 2) at gamma 1: the
  // marginal weight sits strictly below the joint average.
  const double marginal = kl_marginal_weight(0.5 * 0.0 + 0.5 * 2.0, 1.0);
  const double joint = 0.5 * kl_joint_weight(0.0, 1.0) + 0.5 * kl_joint_weight(2.0, 1.0);
  CHECK(marginal == doctest::Approx(std::exp(-1.0)));
  CHECK(joint == doctest::Approx(0.5 * (1.0 + std::exp(-2.0))));
  CHECK(marginal < joint);
}

TEST_CASE("normalize weights") {
  SUBCASE("all ones") {
    const auto result = normalize_weights(std::vector<double>{1.0, 1.0, 1.0},
                                          std::vector<double>{0.2, 0.3, 0.5});
    CHECK(result.z == doctest::Approx(1.0));
    for (double w : result.normalized) CHECK(w == doctest::Approx(1.0));
  }
  SUBCASE("hand arithmetic") {
    const auto result = normalize_weights(std::vector<double>{2.0, 0.0},
                                          std::vector<double>{0.5, 0.5});
    CHECK(result.z == doctest::Approx(1.0));
    CHECK(result.normalized[0] == doctest::Approx(2.0));
    CHECK(result.normalized[1] == doctest::Approx(0.0));
  }
  SUBCASE("random instance averages to one") {
    Rng rng(3);
    const DiscreteInstance inst = random_instance(rng, 5, 3, 2.0);
    std::vector<double> raw(inst.num_atoms());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      raw[i] = inst.joint_model_weight(i, 0.5);
    }
    const auto result = normalize_weights(raw, inst.atom_probs);
    double mean = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      mean += inst.atom_probs[i] * result.normalized[i];
    }
    CHECK(mean == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("all-zero rejected") {
    CHECK_THROWS_AS(normalize_weights(std::vector<double>{0.0, 0.0},
                                      std::vector<double>{0.5, 0.5}),
                    std::invalid_argument);
  }
}

TEST_CASE("phi ideal ratio: constant losses give the uniform reweighting") {
  for (const PhiGenerator& gen : {kl_generator(), chi_squared_generator()}) {
    const std::vector<double> losses{0.7, 0.7, 0.7, 0.7};
    const std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
    const PhiRatioResult result = phi_ideal_ratio(losses, probs, 0.5, gen);
    for (double r : result.ratios) CHECK(r == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("phi ideal ratio: kl generator reproduces the closed form") {
  // Frozen small instance; the closed form is the exponential weight divided
  // by its probability-weighted mean.
  const std::vector<double> losses{0.0, 0.4, 1.1, 0.8};
  const std::vector<double> probs{0.3, 0.3, 0.2, 0.2};
  const double gamma = 1.0;
  const PhiRatioResult result = phi_ideal_ratio(losses, probs, gamma, kl_generator());

  std::vector<double> raw(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) {
    raw[i] = std::exp(-losses[i] / gamma);
  }
  const auto closed = normalize_weights(raw, probs);
  for (std::size_t i = 0; i < losses.size(); ++i) {
    CHECK(std::abs(result.ratios[i] - closed.normalized[i]) < 1e-10);
  }
}

TEST_CASE("phi ideal ratio: chi-squared matches a brute-force constraint solver") {
  const std::vector<double> losses{0.1, 0.9, 0.5, 1.4, 0.2};
  const std::vector<double> probs{0.25, 0.2, 0.25, 0.15, 0.15};
  const double gamma = 0.5;
  const PhiRatioResult result =
      phi_ideal_ratio(losses, probs, gamma, chi_squared_generator());

  // Independent route: coarse grid search over b minimizing the constraint
  // residual, then local refinement, using the closed ratio formula
  // max{0, 1 + (b - L_i)/(2 gamma)}.
  const auto residual = [&](double b) {
    double total = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
      total += probs[i] * std::max(0.0, 1.0 + (b - losses[i]) / (2.0 * gamma));
    }
    return std::abs(total - 1.0);
  };
  double best_b = -5.0;
  double best = residual(best_b);
  for (double b = -5.0; b <= 5.0; b += 1e-4) {
    const double r = residual(b);
    if (r < best) {
      best = r;
      best_b = b;
    }
  }
  for (double b = best_b - 1e-4; b <= best_b + 1e-4; b += 1e-8) {
    const double r = residual(b);
    if (r < best) {
      best = r;
      best_b = b;
    }
  }
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const double expected = std::max(0.0, 1.0 + (best_b - losses[i]) / (2.0 * gamma));
    CHECK(result.ratios[i] == doctest::Approx(expected).epsilon(1e-5));
  }
  CHECK(result.b == doctest::Approx(best_b).epsilon(1e-5));
}

TEST_CASE("phi ideal ratio: saturating generator reports failure") {
  PhiGenerator flat;
  flat.name = "saturating";
  flat.conj = [](double) { return 0.4; };
  flat.conj_right_deriv = [](double) { return 0.4; };  // never reaches 1
  const std::vector<double> losses{0.1, 0.2};
  const std::vector<double> probs{0.5, 0.5};
  CHECK_THROWS_AS(phi_ideal_ratio(losses, probs, 0.5, flat), std::runtime_error);
}

TEST_CASE("phi ideal ratio error paths") {
  const std::vector<double> losses{0.1, 0.2};
  CHECK_THROWS_AS(
      phi_ideal_ratio(losses, std::vector<double>{0.5, 0.6}, 0.5, kl_generator()),
      std::invalid_argument);
  CHECK_THROWS_AS(
      phi_ideal_ratio(losses, std::vector<double>{0.5, 0.5}, -1.0, kl_generator()),
      std::invalid_argument);
}

TEST_CASE("ideal weight set validation") {
  IdealWeightSet set;
  set.model_weights = {0.5, 1.0};
  set.expert_weights = {0.25, 0.75};
  set.gamma = 0.5;
  set.gamma_expert = 0.5;
  const std::vector<double> probs{0.5, 0.5};
  CHECK_NOTHROW(set.validate(probs));
  set.z_model = 0.75;  // (0.5 + 1.0)/2
  CHECK_NOTHROW(set.validate(probs));
  set.z_model = 0.9;
  CHECK_THROWS_AS(set.validate(probs), std::invalid_argument);
}

TEST_SUITE_END();
