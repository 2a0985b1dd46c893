#pragma once

#include <memory>
#include <span>
#include <vector>

#include "l2d/dataset.hpp"
#include "l2d/drcpe.hpp"
#include "l2d/ideal.hpp"
#include "l2d/mlp.hpp"
#include "l2d/point_loss.hpp"

namespace l2d {

/// Softmax classifier over an MLP.
struct Classifier {
  MlpParams params;

  ProbVector predict_proba(std::span<const double> features) const;
  int predict(std::span<const double> features) const;
};

/// Mini-batch Adam on mean cross-entropy with decoupled weight decay.
/// Deterministic for fixed (data, arch, config); throws on non-finite loss.
Classifier train_classifier(const Dataset& data, const std::vector<int>& hidden,
                            const OptimizerConfig& opt);

/// Per-example loss on a scalar network output u. Implementations close over
/// whatever per-example targets or weights they need.
class ScalarObjective {
 public:
  virtual ~ScalarObjective() = default;
  /// Returns {loss, dloss/du} for example i at raw output u.
  virtual std::pair<double, double> loss_and_grad(double u, std::size_t i) const = 0;
};

/// Density-ratio head objective: w_i * l+1(v) + we_i * l-1(v) with
/// v = to_score(u). Weights are fixed scalars precomputed from the frozen
/// model and expert before training starts.
class DrCpeObjective : public ScalarObjective {
 public:
  DrCpeObjective(DrLossSpec spec, std::vector<double> model_weights,
                 std::vector<double> expert_weights);
  std::pair<double, double> loss_and_grad(double u, std::size_t i) const override;

  const std::vector<double>& model_weights() const { return model_weights_; }
  const std::vector<double>& expert_weights() const { return expert_weights_; }
  const DrLossSpec& spec() const { return spec_; }

 private:
  DrLossSpec spec_;
  std::vector<double> model_weights_;
  std::vector<double> expert_weights_;
};

/// Squared regression on fixed targets: (u - t_i)^2.
class SquaredRegressionObjective : public ScalarObjective {
 public:
  explicit SquaredRegressionObjective(std::vector<double> targets);
  std::pair<double, double> loss_and_grad(double u, std::size_t i) const override;

 private:
  std::vector<double> targets_;
};

/// Two-stage exponential surrogate on a scalar scorer, with the exponent
/// clamp shared with twostage_exp_loss.
class TwoStageExpObjective : public ScalarObjective {
 public:
  TwoStageExpObjective(std::vector<double> model_correct,
                       std::vector<double> expert_correct,
                       std::vector<double> model_max_probs, double cost);
  std::pair<double, double> loss_and_grad(double u, std::size_t i) const override;

 private:
  std::vector<double> model_correct_;
  std::vector<double> expert_correct_;
  std::vector<double> model_max_probs_;
  double cost_;
};

struct TrainResult {
  MlpParams params;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Trains a scalar-output MLP head on fixed feature rows against the given
/// objective. Same optimizer, batching, and determinism contract as
/// train_classifier.
TrainResult train_scalar_head(const std::vector<std::vector<double>>& rows,
                              const ScalarObjective& objective,
                              const std::vector<int>& hidden,
                              const OptimizerConfig& opt);

/// Full-batch objective value and analytic gradient for a scalar head;
/// exposed for finite-difference verification.
double head_batch_loss(const MlpParams& params,
                       const std::vector<std::vector<double>>& rows,
                       const ScalarObjective& objective);
std::vector<double> head_batch_grad(const MlpParams& params,
                                    const std::vector<std::vector<double>>& rows,
                                    const ScalarObjective& objective);

/// Same pair for the classifier's mean cross-entropy.
double classifier_batch_loss(const MlpParams& params, const Dataset& data);
std::vector<double> classifier_batch_grad(const MlpParams& params,
                                          const Dataset& data);

/// Deferral scorer: an MLP head over deferral_features of the base model's
/// probabilities, mapped through the loss family's score parameterization.
/// Expert information enters only through the training weights; scoring
/// never evaluates the expert.
struct DeferralScorer {
  MlpParams params;
  DrKind kind = DrKind::kSquared;

  double score_from_features(std::span<const double> features) const;
  double score(const ProbVector& model_probs) const;
};

/// Trains the density-ratio scorer on the (clean) deferral split. Both
/// classifiers stay frozen; their predictions are folded into per-example
/// weights w = exp(-loss(model)/gamma), we = exp(-loss(expert)/gamma_expert)
/// once, up front.
DeferralScorer train_deferral_scorer(const Dataset& deferral_data,
                                     const Classifier& model,
                                     const Classifier& expert,
                                     const DrLossSpec& spec,
                                     const PointLossKind& weight_loss,
                                     double gamma, double gamma_expert,
                                     const OptimizerConfig& opt);

}  // namespace l2d
