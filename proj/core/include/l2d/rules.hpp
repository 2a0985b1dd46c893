#pragma once

#include <span>

#include "l2d/drcpe.hpp"
#include "l2d/prob.hpp"

namespace l2d {

/// Expected expert-minus-model loss under the posterior,
/// E_{Y~eta}[expert_losses_Y - model_losses_Y]. Chow's rule defers when this
/// is at most the deferral cost.
double chow_statistic(const ProbVector& posterior,
                      std::span<const double> model_losses,
                      std::span<const double> expert_losses);

bool chow_defer(const ProbVector& posterior, std::span<const double> model_losses,
                std::span<const double> expert_losses, double cost);

/// Posterior reweighted by exp(-expert_loss/gamma) and renormalized. Equals
/// the input posterior whenever the expert losses are constant over labels.
struct TiltedPosterior {
  ProbVector entries;
  double gamma;
};

TiltedPosterior tilt_posterior(const ProbVector& posterior,
                               std::span<const double> expert_losses,
                               double gamma);

/// Density-ratio deferral: defer when w_model / w_expert <= tau. A zero
/// expert weight (underflow; the expert ideal has no mass at x) is treated
/// as "do not defer".
bool dr_defer_from_weights(double weight_model, double weight_expert, double tau);

struct ThresholdResult {
  double tau = 0.0;
  double realized_rate = 0.0;  // fraction of calibration scores <= tau
};

/// Lower-interpolation empirical quantile of the scores at target_rate.
/// The rule [score <= tau] then defers at least the largest achievable
/// fraction not exceeding the target (ties at tau all defer). target 0
/// yields tau strictly below the minimum score.
ThresholdResult threshold_from_rate(std::span<const double> scores,
                                    double target_rate);

struct EquivPair {
  bool by_ratio = false;
  bool by_score = false;
};

/// Evaluates the same deferral decision two ways: thresholding the recovered
/// density ratio at tau, and thresholding the raw score at the mapped value
/// link(pi*tau / (1 - pi + pi*tau)). The two booleans always agree.
EquivPair scorer_threshold_equiv(const DrLossSpec& spec, double s, double pi,
                                 double tau);

}  // namespace l2d
