#include <algorithm>
#include <cmath>
#include <map>

#include <stdexcept>

#include "doctest.h"

#include "l2d/synth.hpp"

using namespace l2d;

TEST_SUITE_BEGIN("synth");

TEST_CASE("posterior symmetry and separation") {
  MixtureSpec spec;
  spec.num_classes = 2;
  spec.dim = 2;
  spec.sigma = 1.0;
  spec.means = {{-1.0, 0.0}, {1.0, 0.0}};
  spec.priors = {0.5, 0.5};
  spec.seed = 1;
  const PosteriorFn posterior = mixture_posterior(spec);

  const ProbVector mid = posterior({0.0, 0.7});
  CHECK(mid[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mid[1] == doctest::Approx(0.5).epsilon(1e-12));

  MixtureSpec far = spec;
  far.means = {{-30.0, 0.0}, {30.0, 0.0}};
  const ProbVector at_mean = mixture_posterior(far)({-30.0, 0.0});
  CHECK(at_mean[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sampled class frequencies concentrate around the priors") {
  MixtureSpec spec = MixtureSpec::axis_layout(5, 4, 2.0, 1.0, 99);
  spec.priors = {0.1, 0.2, 0.3, 0.25, 0.15};
  const std::size_t n = 100000;
  const Dataset data = gen_mixture(spec, n);
  std::vector<std::size_t> counts(5, 0);
  for (const auto& ex : data.examples) counts[static_cast<std::size_t>(ex.label)]++;
  for (int y = 0; y < 5; ++y) {
    const double p = spec.priors[static_cast<std::size_t>(y)];
    const double freq = static_cast<double>(counts[static_cast<std::size_t>(y)]) / n;
    const double slack = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    CHECK(std::abs(freq - p) <= slack);
  }
}

TEST_CASE("label noise") {
  const MixtureSpec spec = MixtureSpec::axis_layout(6, 4, 2.0, 1.0, 5);
  const Dataset data = gen_mixture(spec, 600);
  SUBCASE("zero noisy classes is the identity") {
    const Dataset out = apply_corruption(data, CorruptionSpec::label_noise(0), 3);
    REQUIRE(out.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(out.examples[i].label == data.examples[i].label);
    }
  }
  SUBCASE("noisy labels stay in range and features are untouched") {
    const Dataset out = apply_corruption(data, CorruptionSpec::label_noise(3), 3);
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(out.examples[i].features == data.examples[i].features);
      CHECK(out.examples[i].label >= 0);
      CHECK(out.examples[i].label < 6);
      if (data.examples[i].label >= 3) {
        CHECK(out.examples[i].label == data.examples[i].label);
      }
    }
  }
}

TEST_CASE("specialist keep-all semantics") {
  const MixtureSpec spec = MixtureSpec::axis_layout(4, 4, 2.0, 1.0, 6);
  const Dataset data = gen_mixture(spec, 400);
  SUBCASE("p = 1 is the identity") {
    const Dataset out = apply_corruption(data, CorruptionSpec::specialist({0}, 1.0), 9);
    CHECK(out.size() == data.size());
  }
  SUBCASE("specialist classes survive in full") {
    const Dataset out =
        apply_corruption(data, CorruptionSpec::specialist({1, 2}, 0.2), 9);
    std::size_t original_specialist = 0;
    std::size_t kept_specialist = 0;
    for (const auto& ex : data.examples) {
      if (ex.label == 1 || ex.label == 2) ++original_specialist;
    }
    for (const auto& ex : out.examples) {
      if (ex.label == 1 || ex.label == 2) ++kept_specialist;
    }
    CHECK(kept_specialist == original_specialist);
    CHECK(out.size() < data.size());
  }
}

TEST_CASE("long tail per-class caps") {
  // Balanced 4-class set of 400 with head count 2: caps (50, 50, 5, 5).
  MixtureSpec spec = MixtureSpec::axis_layout(4, 4, 2.0, 1.0, 7);
  Dataset data = gen_mixture(spec, 4000);
  // Trim to exactly 100 per class so the caps are the binding constraint.
  Dataset balanced;
  balanced.num_classes = 4;
  balanced.split = data.split;
  std::map<int, int> taken;
  for (const auto& ex : data.examples) {
    if (taken[ex.label] < 100) {
      balanced.examples.push_back(ex);
      ++taken[ex.label];
    }
  }
  REQUIRE(balanced.size() == 400);

  const Dataset out =
      apply_corruption(balanced, CorruptionSpec::long_tail(2, 50, 5), 11);
  std::map<int, int> counts;
  for (const auto& ex : out.examples) ++counts[ex.label];
  CHECK(counts[0] == 50);
  CHECK(counts[1] == 50);
  CHECK(counts[2] == 5);
  CHECK(counts[3] == 5);
}

TEST_CASE("corruption that empties the dataset is an error") {
  const MixtureSpec spec = MixtureSpec::axis_layout(4, 4, 2.0, 1.0, 8);
  const Dataset data = gen_mixture(spec, 50);
  CHECK_THROWS_AS(apply_corruption(data, CorruptionSpec::long_tail(4, 0, 0), 2),
                  std::runtime_error);
}

TEST_CASE("three way split") {
  const MixtureSpec spec = MixtureSpec::axis_layout(4, 4, 2.0, 1.0, 12);
  const Dataset data = gen_mixture(spec, 400);
  SUBCASE("sizes and tags") {
    const auto parts = three_way_split(data, {0.5, 0.25, 0.25}, 21);
    CHECK(parts[0].size() == 200);
    CHECK(parts[1].size() == 100);
    CHECK(parts[2].size() == 100);
    CHECK(parts[0].split == Split::kBaseTrain);
    CHECK(parts[1].split == Split::kDeferralTrain);
    CHECK(parts[2].split == Split::kTest);
  }
  SUBCASE("same seed twice gives identical partitions") {
    const auto a = three_way_split(data, {0.5, 0.25, 0.25}, 21);
    const auto b = three_way_split(data, {0.5, 0.25, 0.25}, 21);
    for (int p = 0; p < 3; ++p) {
      REQUIRE(a[p].size() == b[p].size());
      for (std::size_t i = 0; i < a[p].size(); ++i) {
        CHECK(a[p].examples[i].features == b[p].examples[i].features);
      }
    }
  }
  SUBCASE("union is the original multiset") {
    const auto parts = three_way_split(data, {0.5, 0.25, 0.25}, 21);
    std::vector<std::vector<double>> all;
    for (const auto& part : parts) {
      for (const auto& ex : part.examples) all.push_back(ex.features);
    }
    std::vector<std::vector<double>> original;
    for (const auto& ex : data.examples) original.push_back(ex.features);
    std::sort(all.begin(), all.end());
    std::sort(original.begin(), original.end());
    CHECK(all == original);
  }
  SUBCASE("degenerate fractions rejected") {
    Dataset tiny;
    tiny.num_classes = 2;
    tiny.examples = {{{0.0}, 0}, {{1.0}, 1}};
    CHECK_THROWS_AS(three_way_split(tiny, {0.5, 0.25, 0.25}, 1), std::invalid_argument);
    CHECK_THROWS_AS(three_way_split(data, {0.5, 0.2, 0.2}, 1), std::invalid_argument);
  }
}

TEST_CASE("mixture spec validation") {
  MixtureSpec spec = MixtureSpec::axis_layout(4, 4, 2.0, 1.0, 1);
  spec.means[1] = spec.means[0];
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  CHECK_THROWS_AS(MixtureSpec::axis_layout(20, 4, 2.0, 1.0, 1), std::invalid_argument);
}

TEST_SUITE_END();
