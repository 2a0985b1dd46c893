#pragma once

#include <span>
#include <string>
#include <vector>

#include "l2d/prob.hpp"

namespace l2d {

/// Comparison methods the benchmark runs next to the density-ratio scorer.
struct BaselineKind {
  enum class Tag { kConf, kEstimateDiff01, kEstimateMaxProb, kTwoStageExp };

  Tag tag = Tag::kConf;
  double cost = 0.0;  // two-stage surrogate only, >= 0

  static BaselineKind conf() { return {Tag::kConf, 0.0}; }
  static BaselineKind estimate_diff01() { return {Tag::kEstimateDiff01, 0.0}; }
  static BaselineKind estimate_maxprob() { return {Tag::kEstimateMaxProb, 0.0}; }
  static BaselineKind twostage_exp(double cost);

  std::string name() const;
};

/// Model confidence: the largest predicted probability. Deferral thresholds
/// this directly (defer when <= tau).
double conf_score(const ProbVector& model_probs);

/// Regression target comparing zero-one correctness of model and expert:
/// [model correct] - [expert correct], in {-1, 0, +1}. The fitted regressor
/// g defers when g(x) <= tau.
int diff01_target(const ProbVector& model_probs, const ProbVector& expert_probs,
                  int label);

/// Decision statistic for the expert-confidence regressor: the model's
/// maximum probability minus the estimate g(x) of the expert's maximum
/// probability. Defer when <= tau.
double maxprob_decision(const ProbVector& model_probs, double g_value);

/// Exponent clamp for the two-stage surrogate; keeps e^{±x} finite while
/// preserving the loss ordering at this problem scale.
inline constexpr double kTwoStageExpClamp = 30.0;

/// Two-stage exponential surrogate: mean over examples of
///   [model correct] * exp(s - m) + ([expert correct] - cost) * exp(m - s),
/// where m is the model's maximum probability. Exponents are clamped to
/// [-30, 30]; without the clamp the objective is unbounded below whenever
/// the model is correct, the expert is wrong, and cost > 0.
double twostage_exp_loss(std::span<const double> scores,
                         const std::vector<ProbVector>& model_probs,
                         const std::vector<ProbVector>& expert_probs,
                         std::span<const int> labels, double cost);

}  // namespace l2d
