#include "l2d/ideal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace l2d {

namespace {

void check_probabilities(std::span<const double> probabilities) {
  double sum = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw std::invalid_argument("probabilities must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("probabilities must sum to 1, got " +
                                std::to_string(sum));
  }
}

}  // namespace

double kl_joint_weight(double loss_value, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("kl_joint_weight: gamma must be > 0");
  if (!(loss_value >= 0.0)) throw std::invalid_argument("kl_joint_weight: loss must be >= 0");
  return std::exp(-loss_value / gamma);
}

double kl_marginal_weight(double expected_loss, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("kl_marginal_weight: gamma must be > 0");
  if (!(expected_loss >= 0.0)) {
    throw std::invalid_argument("kl_marginal_weight: expected loss must be >= 0");
  }
  return std::exp(-expected_loss / gamma);
}

void IdealWeightSet::validate(std::span<const double> probabilities) const {
  if (model_weights.size() != expert_weights.size()) {
    throw std::invalid_argument("IdealWeightSet: length mismatch");
  }
  if (!(gamma > 0.0) || !(gamma_expert > 0.0)) {
    throw std::invalid_argument("IdealWeightSet: gammas must be > 0");
  }
  for (double w : model_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("IdealWeightSet: negative model weight");
  }
  for (double w : expert_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("IdealWeightSet: negative expert weight");
  }
  if (!probabilities.empty()) {
    if (probabilities.size() != model_weights.size()) {
      throw std::invalid_argument("IdealWeightSet: probability length mismatch");
    }
    check_probabilities(probabilities);
    auto check_z = [&](const std::optional<double>& z, const std::vector<double>& w) {
      if (!z.has_value()) return;
      double mean = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) mean += probabilities[i] * w[i];
      if (std::abs(mean - *z) > 1e-9) {
        throw std::invalid_argument("IdealWeightSet: normalizer does not match weights");
      }
    };
    check_z(z_model, model_weights);
    check_z(z_expert, expert_weights);
  }
}

PhiGenerator kl_generator() {
  PhiGenerator gen;
  gen.name = "kl";
  gen.conj = [](double p) { return std::exp(p - 1.0); };
  gen.conj_right_deriv = [](double p) { return std::exp(p - 1.0); };
  gen.domain_note = "conjugate finite on all of R";
  return gen;
}

PhiGenerator chi_squared_generator() {
  PhiGenerator gen;
  gen.name = "chi-squared";
  gen.conj = [](double p) { return p + 0.25 * p * p; };
  gen.conj_right_deriv = [](double p) { return 1.0 + 0.5 * p; };
  gen.domain_note = "conjugate finite on all of R";
  return gen;
}

PhiRatioResult phi_ideal_ratio(std::span<const double> loss_values,
                               std::span<const double> probabilities,
                               double gamma, const PhiGenerator& gen) {
  if (loss_values.empty() || loss_values.size() != probabilities.size()) {
    throw std::invalid_argument("phi_ideal_ratio: bad lengths");
  }
  if (!(gamma > 0.0)) throw std::invalid_argument("phi_ideal_ratio: gamma must be > 0");
  check_probabilities(probabilities);

  const auto constraint = [&](double b) {
    double total = 0.0;
    for (std::size_t i = 0; i < loss_values.size(); ++i) {
      const double d = gen.conj_right_deriv((b - loss_values[i]) / gamma);
      if (!std::isfinite(d)) {
        throw std::runtime_error("phi_ideal_ratio: conjugate derivative not finite");
      }
      total += probabilities[i] * std::max(0.0, d);
    }
    return total;
  };

  const auto [min_it, max_it] = std::minmax_element(loss_values.begin(), loss_values.end());

  // Constraint value is non-decreasing in b; expand the bracket until the
  // target level 1 is straddled.
  double lo = *min_it - gamma;
  double hi = *max_it + gamma;
  double k = 1.0;
  constexpr double kMaxExpansion = 0x1.0p60;
  while (constraint(lo) > 1.0) {
    lo = *min_it - gamma * k;
    k *= 2.0;
    if (k > kMaxExpansion) {
      throw std::runtime_error("phi_ideal_ratio: no lower bracket for b");
    }
  }
  k = 1.0;
  while (constraint(hi) < 1.0) {
    hi = *max_it + gamma * k;
    k *= 2.0;
    if (k > kMaxExpansion) {
      throw std::runtime_error(
          "phi_ideal_ratio: no upper bracket for b (derivative saturates below 1)");
    }
  }

  for (int iter = 0; iter < 200 && hi - lo > 1e-12; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (constraint(mid) < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  PhiRatioResult result;
  result.b = 0.5 * (lo + hi);
  result.ratios.resize(loss_values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < loss_values.size(); ++i) {
    result.ratios[i] =
        std::max(0.0, gen.conj_right_deriv((result.b - loss_values[i]) / gamma));
    total += probabilities[i] * result.ratios[i];
  }
  if (std::abs(total - 1.0) > 1e-8) {
    throw std::runtime_error(
        "phi_ideal_ratio: constraint residual " + std::to_string(total - 1.0) +
        " exceeds 1e-8 (derivative jump at the solution?)");
  }
  return result;
}

NormalizedWeights normalize_weights(std::span<const double> raw,
                                    std::span<const double> probabilities) {
  if (raw.empty() || raw.size() != probabilities.size()) {
    throw std::invalid_argument("normalize_weights: bad lengths");
  }
  check_probabilities(probabilities);
  double z = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!(raw[i] >= 0.0)) throw std::invalid_argument("normalize_weights: negative weight");
    z += probabilities[i] * raw[i];
  }
  if (!(z > 0.0)) {
    throw std::invalid_argument("normalize_weights: all-zero weights");
  }
  NormalizedWeights out;
  out.z = z;
  out.normalized.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out.normalized[i] = raw[i] / z;
  return out;
}

}  // namespace l2d
