#include "l2d/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace l2d {

BaselineKind BaselineKind::twostage_exp(double cost) {
  if (!(cost >= 0.0)) {
    throw std::invalid_argument("BaselineKind: two-stage cost must be >= 0");
  }
  return {Tag::kTwoStageExp, cost};
}

std::string BaselineKind::name() const {
  switch (tag) {
    case Tag::kConf: return "conf";
    case Tag::kEstimateDiff01: return "estimate-diff01";
    case Tag::kEstimateMaxProb: return "estimate-maxprob";
    case Tag::kTwoStageExp: return "twostage-exp";
  }
  return "?";
}

double conf_score(const ProbVector& model_probs) {
  double best = 0.0;
  for (std::size_t y = 0; y < model_probs.size(); ++y) {
    best = std::max(best, model_probs[y]);
  }
  return best;
}

int diff01_target(const ProbVector& model_probs, const ProbVector& expert_probs,
                  int label) {
  if (model_probs.size() != expert_probs.size()) {
    throw std::invalid_argument("diff01_target: class count mismatch");
  }
  if (label < 0 || label >= static_cast<int>(model_probs.size())) {
    throw std::invalid_argument("diff01_target: label out of range");
  }
  const int model_correct = argmax_predict(model_probs) == label ? 1 : 0;
  const int expert_correct = argmax_predict(expert_probs) == label ? 1 : 0;
  return model_correct - expert_correct;
}

double maxprob_decision(const ProbVector& model_probs, double g_value) {
  return conf_score(model_probs) - g_value;
}

double twostage_exp_loss(std::span<const double> scores,
                         const std::vector<ProbVector>& model_probs,
                         const std::vector<ProbVector>& expert_probs,
                         std::span<const int> labels, double cost) {
  if (!(cost >= 0.0)) throw std::invalid_argument("twostage_exp_loss: cost must be >= 0");
  const std::size_t n = scores.size();
  if (model_probs.size() != n || expert_probs.size() != n || labels.size() != n) {
    throw std::invalid_argument("twostage_exp_loss: length mismatch");
  }
  if (n == 0) return 0.0;
  const auto clamp = [](double x) {
    return std::clamp(x, -kTwoStageExpClamp, kTwoStageExpClamp);
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = conf_score(model_probs[i]);
    const double model_correct = argmax_predict(model_probs[i]) == labels[i] ? 1.0 : 0.0;
    const double expert_correct = argmax_predict(expert_probs[i]) == labels[i] ? 1.0 : 0.0;
    total += model_correct * std::exp(clamp(scores[i] - m)) +
             (expert_correct - cost) * std::exp(clamp(m - scores[i]));
  }
  return total / static_cast<double>(n);
}

}  // namespace l2d
