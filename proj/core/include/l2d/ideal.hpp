#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace l2d {

/// Unnormalized KL ideal weight for a sampled (x, y) pair: exp(-loss/gamma).
/// This is the only weight needed at training time; the expectation over the
/// data distribution stays outside.
double kl_joint_weight(double loss_value, double gamma);

/// Unnormalized KL ideal weight for the marginal construction:
/// exp(-expected_loss/gamma), where the caller supplies the exact
/// posterior expectation of the loss. Estimating that expectation from a
/// single sampled label is biased, so this path is reserved for data with
/// an analytic posterior.
double kl_marginal_weight(double expected_loss, double gamma);

/// Per-example ideal weights for a model/expert pair plus their normalizers.
struct IdealWeightSet {
  std::vector<double> model_weights;
  std::vector<double> expert_weights;
  double gamma = 0.5;
  double gamma_expert = 0.5;
  std::optional<double> z_model;
  std::optional<double> z_expert;

  void validate(std::span<const double> probabilities) const;
};

/// A phi-divergence generator, represented through its convex conjugate and
/// the conjugate's right derivative. Those two functions are all the optimal
/// reweighting formula needs.
struct PhiGenerator {
  std::string name;
  std::function<double(double)> conj;              // p -> phi*(p)
  std::function<double(double)> conj_right_deriv;  // p -> (phi*)'_+(p)
  std::string domain_note;
};

PhiGenerator kl_generator();           // (phi*)'_+(p) = e^{p-1}
PhiGenerator chi_squared_generator();  // (phi*)'_+(p) = 1 + p/2

struct PhiRatioResult {
  std::vector<double> ratios;  // optimal reweighting, >= 0
  double b = 0.0;              // multiplier solving the mass constraint
};

/// Optimal ideal reweighting for a finite support: ratio_i =
/// max{0, (phi*)'_+((b - L_i)/gamma)} with b solved by monotone bisection so
/// that sum_i p_i * ratio_i = 1 within 1e-8. Throws if no bracket for b is
/// found after exponential expansion (a generator whose derivative saturates
/// below 1) or if the residual cannot be met (a jump in the derivative).
PhiRatioResult phi_ideal_ratio(std::span<const double> loss_values,
                               std::span<const double> probabilities,
                               double gamma, const PhiGenerator& gen);

struct NormalizedWeights {
  std::vector<double> normalized;
  double z = 0.0;  // sum_i p_i * raw_i
};

/// Divides raw weights by their probability-weighted mean Z, so the result
/// averages to exactly 1 under the given probabilities.
NormalizedWeights normalize_weights(std::span<const double> raw,
                                    std::span<const double> probabilities);

}  // namespace l2d
