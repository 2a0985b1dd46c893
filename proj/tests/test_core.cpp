#include <cmath>
#include <cstdio>
#include <filesystem>

#include <stdexcept>

#include "doctest.h"

#include "l2d/dataset.hpp"
#include "l2d/point_loss.hpp"
#include "l2d/prob.hpp"
#include "l2d/rng.hpp"

using namespace l2d;

TEST_SUITE_BEGIN("core");

TEST_CASE("prob vector validation") {
  CHECK_NOTHROW(ProbVector({0.2, 0.8}));
  CHECK_THROWS_AS(ProbVector({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(ProbVector({-0.1, 1.1}), std::invalid_argument);
  CHECK_THROWS_AS(ProbVector({}), std::invalid_argument);
  CHECK_THROWS_AS(ProbVector::from_unnormalized({0.0, 0.0}), std::invalid_argument);

  const ProbVector u = ProbVector::uniform(4);
  CHECK(u[0] == doctest::Approx(0.25));
  const ProbVector h = ProbVector::one_hot(5, 3);
  CHECK(h[3] == 1.0);
}

TEST_CASE("argmax ties break to the lowest index") {
  CHECK(argmax_predict(ProbVector({0.1, 0.7, 0.2})) == 1);
  CHECK(argmax_predict(ProbVector({0.5, 0.5})) == 0);
  CHECK(argmax_predict(ProbVector::one_hot(4, 3)) == 3);
}

TEST_CASE("point loss values") {
  const ProbVector one_hot = ProbVector::one_hot(3, 1);
  CHECK(point_loss(PointLossKind::zero_one(), one_hot, 1) == 0.0);

  CHECK(point_loss(PointLossKind::prob01(), ProbVector({0.5, 0.5}), 0) ==
        doctest::Approx(1.0));

  const ProbVector confident = ProbVector::one_hot(4, 2);
  CHECK(point_loss(PointLossKind::gce(0.7), confident, 2) == doctest::Approx(0.0));

  // q = 1 reduces the generalized loss to 1 - p; cross-checked against an
  // independent evaluation of (1 - p^q)/q.
  const ProbVector quarter({0.25, 0.25, 0.25, 0.25});
  const double direct = (1.0 - std::pow(0.25, 1.0)) / 1.0;
  CHECK(point_loss(PointLossKind::gce(1.0), quarter, 0) == doctest::Approx(direct));
  CHECK(point_loss(PointLossKind::gce(1.0), quarter, 0) == doctest::Approx(0.75));

  // Cross-entropy is clamped, never infinite.
  const double ce = point_loss(PointLossKind::cross_entropy(), ProbVector({1.0, 0.0}), 1);
  CHECK(std::isfinite(ce));
  CHECK(ce == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("topk membership") {
  const ProbVector p({0.4, 0.3, 0.2, 0.1});
  CHECK(point_loss(PointLossKind::topk(2), p, 1) == 0.0);
  CHECK(point_loss(PointLossKind::topk(2), p, 2) == 1.0);
  CHECK(point_loss(PointLossKind::topk(4), p, 3) == 0.0);
  // Ties resolve toward lower indices, matching argmax_predict.
  const ProbVector tied({0.25, 0.25, 0.25, 0.25});
  CHECK(point_loss(PointLossKind::topk(1), tied, 0) == 0.0);
  CHECK(point_loss(PointLossKind::topk(1), tied, 3) == 1.0);
}

TEST_CASE("point loss error paths") {
  const ProbVector p = ProbVector::uniform(3);
  CHECK_THROWS_AS(point_loss(PointLossKind::zero_one(), p, 3), std::invalid_argument);
  CHECK_THROWS_AS(point_loss(PointLossKind::zero_one(), p, -1), std::invalid_argument);
  CHECK_THROWS_AS(point_loss(PointLossKind::gce(1.5), p, 0), std::invalid_argument);
  CHECK_THROWS_AS(point_loss(PointLossKind::topk(4), p, 0), std::invalid_argument);
}

TEST_CASE("loss bounds hold on random inputs") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> raw(5);
    for (double& v : raw) v = rng.uniform() + 1e-6;
    const ProbVector p = ProbVector::from_unnormalized(std::move(raw));
    const int label = rng.uniform_int(0, 4);
    for (const auto& kind :
         {PointLossKind::zero_one(), PointLossKind::prob01(), PointLossKind::gce(0.7),
          PointLossKind::cross_entropy(), PointLossKind::topk(2)}) {
      const double loss = point_loss(kind, p, label);
      CHECK(loss >= 0.0);
      CHECK(loss <= point_loss_bound(kind) + 1e-12);
    }
  }
}

TEST_CASE("per label losses match pointwise calls") {
  const ProbVector p({0.6, 0.3, 0.1});
  const auto row = per_label_losses(PointLossKind::gce(0.7), p);
  REQUIRE(row.size() == 3);
  for (int y = 0; y < 3; ++y) {
    CHECK(row[static_cast<std::size_t>(y)] ==
          point_loss(PointLossKind::gce(0.7), p, y));
  }
}

TEST_CASE("jsonl round trip") {
  Dataset data;
  data.num_classes = 3;
  data.split = Split::kDeferralTrain;
  data.examples = {{{0.25, -1.5}, 0}, {{1.0 / 3.0, 2.125}, 2}, {{0.0, 1e-9}, 1}};

  const auto path = std::filesystem::temp_directory_path() / "l2d_test_data.jsonl";
  write_jsonl(data, path.string());
  const Dataset back = read_jsonl(path.string(), Split::kDeferralTrain, 3);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back.examples[i].features == data.examples[i].features);
    CHECK(back.examples[i].label == data.examples[i].label);
  }
  std::filesystem::remove(path);
}

TEST_CASE("dataset validation") {
  Dataset data;
  data.num_classes = 2;
  CHECK_THROWS_AS(data.validate(), std::invalid_argument);
  data.examples = {{{1.0, 2.0}, 0}, {{3.0}, 1}};
  CHECK_THROWS_AS(data.validate(), std::invalid_argument);
  data.examples = {{{1.0, 2.0}, 0}, {{3.0, 4.0}, 2}};
  CHECK_THROWS_AS(data.validate(), std::invalid_argument);
  data.examples = {{{1.0, 2.0}, 0}, {{3.0, 4.0}, 1}};
  CHECK_NOTHROW(data.validate());
}

TEST_SUITE_END();
