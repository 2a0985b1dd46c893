#include "l2d/drcpe.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace l2d {

namespace {

double softplus(double u) {
  if (u > 30.0) return u;
  if (u < -30.0) return std::max(std::exp(u), std::numeric_limits<double>::min());
  return std::log1p(std::exp(u));
}

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

[[noreturn]] void domain_error(const DrLossSpec& spec, double v) {
  throw std::invalid_argument("dr loss '" + spec.name() + "': score " +
                              std::to_string(v) + " outside score domain");
}

void check_domain(const DrLossSpec& spec, double v) {
  if (!spec.in_score_domain(v)) domain_error(spec, v);
}

}  // namespace

std::string dr_kind_name(DrKind kind) {
  switch (kind) {
    case DrKind::kSquared: return "squared";
    case DrKind::kLogistic: return "logistic";
    case DrKind::kLsif: return "lsif";
    case DrKind::kKliep: return "kliep";
  }
  return "?";
}

DrKind parse_dr_kind(const std::string& name) {
  if (name == "squared") return DrKind::kSquared;
  if (name == "logistic") return DrKind::kLogistic;
  if (name == "lsif") return DrKind::kLsif;
  if (name == "kliep") return DrKind::kKliep;
  throw std::invalid_argument("unknown dr loss '" + name + "'");
}

bool DrLossSpec::in_score_domain(double v) const {
  if (!std::isfinite(v)) return false;
  switch (kind) {
    case DrKind::kSquared:
    case DrKind::kLogistic:
      return true;
    case DrKind::kLsif:
    case DrKind::kKliep:
      return v > 0.0;
  }
  return false;
}

double DrLossSpec::partial_pos(double v) const {
  check_domain(*this, v);
  switch (kind) {
    case DrKind::kSquared: return (v - 1.0) * (v - 1.0);
    case DrKind::kLogistic: return softplus(-v);
    case DrKind::kLsif: return -v;
    case DrKind::kKliep: return -std::log(v);
  }
  throw std::logic_error("unreachable");
}

double DrLossSpec::partial_neg(double v) const {
  check_domain(*this, v);
  switch (kind) {
    case DrKind::kSquared: return (v + 1.0) * (v + 1.0);
    case DrKind::kLogistic: return softplus(v);
    case DrKind::kLsif: return 0.5 * v * v;
    case DrKind::kKliep: return v;
  }
  throw std::logic_error("unreachable");
}

double DrLossSpec::partial_pos_deriv(double v) const {
  check_domain(*this, v);
  switch (kind) {
    case DrKind::kSquared: return 2.0 * (v - 1.0);
    case DrKind::kLogistic: return sigmoid(v) - 1.0;
    case DrKind::kLsif: return -1.0;
    case DrKind::kKliep: return -1.0 / v;
  }
  throw std::logic_error("unreachable");
}

double DrLossSpec::partial_neg_deriv(double v) const {
  check_domain(*this, v);
  switch (kind) {
    case DrKind::kSquared: return 2.0 * (v + 1.0);
    case DrKind::kLogistic: return sigmoid(v);
    case DrKind::kLsif: return v;
    case DrKind::kKliep: return 1.0;
  }
  throw std::logic_error("unreachable");
}

double DrLossSpec::link(double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("dr link: probability must lie in (0,1)");
  }
  switch (kind) {
    case DrKind::kSquared: return 2.0 * p - 1.0;
    case DrKind::kLogistic: return std::log(p / (1.0 - p));
    case DrKind::kLsif:
    case DrKind::kKliep: return p / (1.0 - p);
  }
  throw std::logic_error("unreachable");
}

double DrLossSpec::link_inverse(double s) const {
  switch (kind) {
    case DrKind::kSquared: return 0.5 * (s + 1.0);
    case DrKind::kLogistic: return sigmoid(s);
    case DrKind::kLsif:
    case DrKind::kKliep: return s / (1.0 + s);
  }
  throw std::logic_error("unreachable");
}

double DrLossSpec::to_score(double u) const {
  switch (kind) {
    case DrKind::kSquared:
    case DrKind::kLogistic: return u;
    case DrKind::kLsif:
    case DrKind::kKliep: return softplus(u);
  }
  throw std::logic_error("unreachable");
}

double DrLossSpec::to_score_deriv(double u) const {
  switch (kind) {
    case DrKind::kSquared:
    case DrKind::kLogistic: return 1.0;
    case DrKind::kLsif:
    case DrKind::kKliep: return sigmoid(u);
  }
  throw std::logic_error("unreachable");
}

double dr_partial(const DrLossSpec& spec, int sign, double v) {
  if (sign != 1 && sign != -1) {
    throw std::invalid_argument("dr_partial: sign must be +1 or -1");
  }
  return sign == 1 ? spec.partial_pos(v) : spec.partial_neg(v);
}

double joint_drcpe_loss(const DrLossSpec& spec, std::span<const double> scores,
                        std::span<const double> model_weights,
                        std::span<const double> expert_weights) {
  if (scores.size() != model_weights.size() ||
      scores.size() != expert_weights.size()) {
    throw std::invalid_argument("joint_drcpe_loss: length mismatch");
  }
  if (scores.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(model_weights[i] >= 0.0) || !(expert_weights[i] >= 0.0)) {
      throw std::invalid_argument("joint_drcpe_loss: negative weight");
    }
    total += model_weights[i] * spec.partial_pos(scores[i]) +
             expert_weights[i] * spec.partial_neg(scores[i]);
  }
  return total / static_cast<double>(scores.size());
}

double joint_drcpe_loss_exact(const DrLossSpec& spec,
                              std::span<const double> scores,
                              const DiscreteInstance& instance, double gamma,
                              double gamma_expert) {
  if (scores.size() != instance.num_atoms()) {
    throw std::invalid_argument("joint_drcpe_loss_exact: length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    total += instance.atom_probs[i] *
             (instance.joint_model_weight(i, gamma) * spec.partial_pos(scores[i]) +
              instance.joint_expert_weight(i, gamma_expert) * spec.partial_neg(scores[i]));
  }
  return total;
}

double marginal_drcpe_loss(const DrLossSpec& spec, std::span<const double> scores,
                           const DiscreteInstance& instance, double gamma,
                           double gamma_expert) {
  if (scores.size() != instance.num_atoms()) {
    throw std::invalid_argument("marginal_drcpe_loss: length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    total += instance.atom_probs[i] *
             (instance.marginal_model_weight(i, gamma) * spec.partial_pos(scores[i]) +
              instance.marginal_expert_weight(i, gamma_expert) * spec.partial_neg(scores[i]));
  }
  return total;
}

double pointwise_optimal_score(const DrLossSpec& spec, double weight_model,
                               double weight_expert) {
  if (!(weight_model >= 0.0) || !(weight_expert >= 0.0)) {
    throw std::invalid_argument("pointwise_optimal_score: weights must be >= 0");
  }
  switch (spec.kind) {
    case DrKind::kSquared:
      if (!(weight_model + weight_expert > 0.0)) {
        throw std::invalid_argument("pointwise_optimal_score: W + We must be > 0");
      }
      return (weight_model - weight_expert) / (weight_model + weight_expert);
    case DrKind::kLsif:
    case DrKind::kKliep:
      if (!(weight_expert > 0.0)) {
        throw std::invalid_argument("pointwise_optimal_score: We must be > 0");
      }
      return weight_model / weight_expert;
    case DrKind::kLogistic:
      if (!(weight_model > 0.0 && weight_expert > 0.0)) {
        throw std::invalid_argument("pointwise_optimal_score: W and We must be > 0");
      }
      return std::log(weight_model / weight_expert);
  }
  throw std::logic_error("unreachable");
}

GapBounds gap_bounds(const DrLossSpec& spec, std::span<const double> scores,
                     const DiscreteInstance& instance, double gamma,
                     double gamma_expert, double loss_bound) {
  if (spec.kind == DrKind::kLsif) {
    throw std::invalid_argument(
        "gap_bounds: lsif's l+1 is negative on its score domain");
  }
  if (scores.size() != instance.num_atoms()) {
    throw std::invalid_argument("gap_bounds: length mismatch");
  }
  if (!(loss_bound > 0.0)) throw std::invalid_argument("gap_bounds: bound must be > 0");
  for (std::size_t i = 0; i < instance.num_atoms(); ++i) {
    for (std::size_t y = 0; y < instance.model_losses[i].size(); ++y) {
      if (instance.model_losses[i][y] > loss_bound ||
          instance.expert_losses[i][y] > loss_bound) {
        throw std::invalid_argument("gap_bounds: instance loss exceeds bound");
      }
    }
  }

  GapBounds out;
  const double inv2g = 1.0 / (2.0 * gamma * gamma);
  const double inv2ge = 1.0 / (2.0 * gamma_expert * gamma_expert);
  const double damp_m = std::exp(-loss_bound / gamma);
  const double damp_e = std::exp(-loss_bound / gamma_expert);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double lp = spec.partial_pos(scores[i]);
    const double ln = spec.partial_neg(scores[i]);
    if (lp < 0.0 || ln < 0.0) {
      throw std::invalid_argument("gap_bounds: negative partial loss at score " +
                                  std::to_string(scores[i]));
    }
    const double vm = instance.model_loss_variance(i);
    const double ve = instance.expert_loss_variance(i);
    const double p = instance.atom_probs[i];
    out.lower += p * (damp_m * inv2g * lp * vm + damp_e * inv2ge * ln * ve);
    out.upper += p * (inv2g * lp * vm + inv2ge * ln * ve);
  }
  out.actual = joint_drcpe_loss_exact(spec, scores, instance, gamma, gamma_expert) -
               marginal_drcpe_loss(spec, scores, instance, gamma, gamma_expert);
  return out;
}

double ratio_from_score(const DrLossSpec& spec, double s, double pi) {
  if (!(pi > 0.0 && pi < 1.0)) {
    throw std::invalid_argument("ratio_from_score: pi must lie in (0,1)");
  }
  const double q = spec.link_inverse(s);
  if (!(q > 0.0 && q < 1.0)) {
    throw std::invalid_argument("ratio_from_score: score maps outside (0,1)");
  }
  return (1.0 - pi) / pi * q / (1.0 - q);
}

}  // namespace l2d
