#include <benchmark/benchmark.h>

#include <vector>

#include "l2d/drcpe.hpp"
#include "l2d/ideal.hpp"
#include "l2d/mlp.hpp"
#include "l2d/point_loss.hpp"
#include "l2d/rng.hpp"
#include "l2d/rules.hpp"

namespace {

l2d::ProbVector random_probs(l2d::Rng& rng, int num_classes) {
  std::vector<double> raw(static_cast<std::size_t>(num_classes));
  for (double& v : raw) v = rng.uniform() + 1e-3;
  return l2d::ProbVector::from_unnormalized(std::move(raw));
}

void BM_PointLossGce(benchmark::State& state) {
  l2d::Rng rng(1);
  const l2d::ProbVector probs = random_probs(rng, 10);
  const l2d::PointLossKind kind = l2d::PointLossKind::gce(0.7);
  int label = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(l2d::point_loss(kind, probs, label));
    label = (label + 1) % 10;
  }
}
BENCHMARK(BM_PointLossGce);

void BM_KlJointWeight(benchmark::State& state) {
  double loss = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(l2d::kl_joint_weight(loss, 0.5));
    loss = loss < 3.0 ? loss + 1e-3 : 0.0;
  }
}
BENCHMARK(BM_KlJointWeight);

void BM_PhiIdealRatioKl(benchmark::State& state) {
  l2d::Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> losses(n), probs(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    losses[i] = rng.uniform() * 2.0;
    probs[i] = rng.uniform() + 0.01;
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  const l2d::PhiGenerator gen = l2d::kl_generator();
  for (auto _ : state) {
    benchmark::DoNotOptimize(l2d::phi_ideal_ratio(losses, probs, 0.5, gen));
  }
}
BENCHMARK(BM_PhiIdealRatioKl)->Arg(8)->Arg(32)->Arg(128);

void BM_JointDrcpeLoss(benchmark::State& state) {
  l2d::Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores(n), w(n), we(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.normal();
    w[i] = rng.uniform();
    we[i] = rng.uniform();
  }
  const l2d::DrLossSpec spec = l2d::DrLossSpec::squared();
  for (auto _ : state) {
    benchmark::DoNotOptimize(l2d::joint_drcpe_loss(spec, scores, w, we));
  }
}
BENCHMARK(BM_JointDrcpeLoss)->Arg(1024)->Arg(16384);

void BM_MlpForwardHead(benchmark::State& state) {
  const l2d::MlpParams params = l2d::init_mlp({21, 64, 16, 1}, 4);
  l2d::Rng rng(5);
  std::vector<double> input(21);
  for (double& v : input) v = rng.uniform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(l2d::mlp_forward(params, input));
  }
}
BENCHMARK(BM_MlpForwardHead);

void BM_DeferralFeatures(benchmark::State& state) {
  l2d::Rng rng(6);
  const l2d::ProbVector probs = random_probs(rng, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(l2d::deferral_features(probs));
  }
}
BENCHMARK(BM_DeferralFeatures);

void BM_ThresholdFromRate(benchmark::State& state) {
  l2d::Rng rng(7);
  std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
  for (double& s : scores) s = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(l2d::threshold_from_rate(scores, 0.25));
  }
}
BENCHMARK(BM_ThresholdFromRate)->Arg(1024)->Arg(16384);

}  // namespace

BENCHMARK_MAIN();
