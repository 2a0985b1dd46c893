#pragma once

#include <span>
#include <string>

#include "l2d/discrete.hpp"

namespace l2d {

enum class DrKind { kSquared, kLogistic, kLsif, kKliep };

std::string dr_kind_name(DrKind kind);
DrKind parse_dr_kind(const std::string& name);

/// A binary partial-loss pair with its link function. The four shipped
/// families:
///
///   squared   l+1(v) = (v-1)^2   l-1(v) = (v+1)^2    link(p) = 2p - 1
///   logistic  l+1(v) = ln(1+e^-v) l-1(v) = ln(1+e^v) link(p) = ln(p/(1-p))
///   lsif      l+1(v) = -v        l-1(v) = v^2/2      link(p) = p/(1-p)
///   kliep     l+1(v) = -ln v     l-1(v) = v          link(p) = p/(1-p)
///
/// lsif/kliep scores live on (0, inf); a trained network's unconstrained
/// output u is mapped into the domain via to_score (softplus for the
/// positive families, identity otherwise).
struct DrLossSpec {
  DrKind kind = DrKind::kSquared;

  double partial_pos(double v) const;
  double partial_neg(double v) const;
  double partial_pos_deriv(double v) const;
  double partial_neg_deriv(double v) const;

  double link(double p) const;          // defined on (0, 1)
  double link_inverse(double s) const;  // inverse on the score domain
  bool in_score_domain(double v) const;

  double to_score(double u) const;
  double to_score_deriv(double u) const;

  std::string name() const { return dr_kind_name(kind); }

  static DrLossSpec make(DrKind kind) { return DrLossSpec{kind}; }
  static DrLossSpec squared() { return make(DrKind::kSquared); }
  static DrLossSpec logistic() { return make(DrKind::kLogistic); }
  static DrLossSpec lsif() { return make(DrKind::kLsif); }
  static DrLossSpec kliep() { return make(DrKind::kKliep); }
};

/// Partial loss by sign (+1 or -1); rejects scores outside the domain.
double dr_partial(const DrLossSpec& spec, int sign, double v);

/// Empirical joint objective: mean_i [w_i * l+1(s_i) + we_i * l-1(s_i)].
/// With weights exp(-loss/gamma) computed from sampled labels this is an
/// unbiased estimate of the joint objective under i.i.d. sampling.
double joint_drcpe_loss(const DrLossSpec& spec, std::span<const double> scores,
                        std::span<const double> model_weights,
                        std::span<const double> expert_weights);

/// Exact joint objective on a finite instance (full enumeration).
double joint_drcpe_loss_exact(const DrLossSpec& spec,
                              std::span<const double> scores,
                              const DiscreteInstance& instance, double gamma,
                              double gamma_expert);

/// Exact marginal objective on a finite instance. Requires the analytic
/// posterior baked into the instance; there is no unbiased sample estimate.
double marginal_drcpe_loss(const DrLossSpec& spec, std::span<const double> scores,
                           const DiscreteInstance& instance, double gamma,
                           double gamma_expert);

/// The unique minimizer of W * l+1(s) + We * l-1(s):
///   squared (W - We)/(W + We), lsif/kliep W/We, logistic ln(W/We).
double pointwise_optimal_score(const DrLossSpec& spec, double weight_model,
                               double weight_expert);

struct GapBounds {
  double lower = 0.0;
  double upper = 0.0;
  double actual = 0.0;  // joint objective minus marginal objective
};

/// Second-order sandwich on the joint-minus-marginal gap for losses bounded
/// by loss_bound. Requires non-negative partial losses at every evaluated
/// score; lsif is rejected outright since its l+1 is negative on its whole
/// score domain.
GapBounds gap_bounds(const DrLossSpec& spec, std::span<const double> scores,
                     const DiscreteInstance& instance, double gamma,
                     double gamma_expert, double loss_bound);

/// Converts a scorer output into a density-ratio estimate:
/// ((1 - pi)/pi) * q/(1 - q) with q = link_inverse(s). Rejects scores whose
/// inverse link leaves (0, 1).
double ratio_from_score(const DrLossSpec& spec, double s, double pi);

}  // namespace l2d
