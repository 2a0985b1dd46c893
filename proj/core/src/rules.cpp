#include "l2d/rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace l2d {

double chow_statistic(const ProbVector& posterior,
                      std::span<const double> model_losses,
                      std::span<const double> expert_losses) {
  if (model_losses.size() != posterior.size() ||
      expert_losses.size() != posterior.size()) {
    throw std::invalid_argument("chow_statistic: length mismatch");
  }
  double total = 0.0;
  for (std::size_t y = 0; y < posterior.size(); ++y) {
    total += posterior[y] * (expert_losses[y] - model_losses[y]);
  }
  return total;
}

bool chow_defer(const ProbVector& posterior, std::span<const double> model_losses,
                std::span<const double> expert_losses, double cost) {
  return chow_statistic(posterior, model_losses, expert_losses) <= cost;
}

TiltedPosterior tilt_posterior(const ProbVector& posterior,
                               std::span<const double> expert_losses,
                               double gamma) {
  if (expert_losses.size() != posterior.size()) {
    throw std::invalid_argument("tilt_posterior: length mismatch");
  }
  if (!(gamma > 0.0)) throw std::invalid_argument("tilt_posterior: gamma must be > 0");
  // Shifting the losses by their minimum leaves the normalized result
  // unchanged and keeps at least one exponential at exactly 1, so the
  // numerator can never underflow to all zeros.
  const double shift = *std::min_element(expert_losses.begin(), expert_losses.end());
  std::vector<double> tilted(posterior.size());
  for (std::size_t y = 0; y < posterior.size(); ++y) {
    tilted[y] = posterior[y] * std::exp(-(expert_losses[y] - shift) / gamma);
  }
  return TiltedPosterior{ProbVector::from_unnormalized(std::move(tilted)), gamma};
}

bool dr_defer_from_weights(double weight_model, double weight_expert, double tau) {
  if (!(weight_model >= 0.0) || !(weight_expert >= 0.0)) {
    throw std::invalid_argument("dr_defer_from_weights: weights must be >= 0");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("dr_defer_from_weights: tau must be > 0");
  if (weight_expert == 0.0) return false;
  return weight_model / weight_expert <= tau;
}

ThresholdResult threshold_from_rate(std::span<const double> scores,
                                    double target_rate) {
  if (scores.empty()) throw std::invalid_argument("threshold_from_rate: empty scores");
  if (!(target_rate >= 0.0 && target_rate <= 1.0)) {
    throw std::invalid_argument("threshold_from_rate: target rate must lie in [0,1]");
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());

  ThresholdResult out;
  const std::size_t n = sorted.size();
  // Lower-interpolation quantile: the k-th smallest score with
  // k = floor(target * n), so the cut never overshoots the target except
  // through ties at tau.
  const std::size_t count =
      static_cast<std::size_t>(std::floor(target_rate * static_cast<double>(n) + 1e-9));
  if (count == 0) {
    out.tau = std::nextafter(sorted.front(), -std::numeric_limits<double>::infinity());
  } else {
    out.tau = sorted[count - 1];
  }
  std::size_t fired = 0;
  for (double s : sorted) {
    if (s <= out.tau) ++fired;
  }
  out.realized_rate = static_cast<double>(fired) / static_cast<double>(n);
  return out;
}

EquivPair scorer_threshold_equiv(const DrLossSpec& spec, double s, double pi,
                                 double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("scorer_threshold_equiv: tau must be > 0");
  EquivPair out;
  // The ratio side absorbs the one-ulp noise of the link round trip so that
  // a score sitting exactly on the mapped threshold stays inclusive on both
  // sides.
  out.by_ratio = ratio_from_score(spec, s, pi) <= tau * (1.0 + 1e-12);
  const double mapped = pi * tau / (1.0 - pi + pi * tau);
  out.by_score = s <= spec.link(mapped);
  return out;
}

}  // namespace l2d
