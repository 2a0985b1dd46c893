#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "l2d/prob.hpp"

namespace l2d {

/// Dense feedforward network with rectifier hidden activations and a linear
/// output layer. weights[l] is row-major (fan_out x fan_in).
struct MlpParams {
  std::vector<int> layer_sizes;  // input, hidden..., output
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  std::size_t num_layers() const { return weights.size(); }
  std::size_t num_params() const;
  void validate() const;
};

/// Symmetric uniform fan-in initialization: weights U(-1/sqrt(fan_in),
/// +1/sqrt(fan_in)), biases zero. Deterministic for a fixed seed.
MlpParams init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed);

std::vector<double> mlp_forward(const MlpParams& params,
                                std::span<const double> input);

/// Forward pass that keeps per-layer pre-activations for backprop.
struct MlpTrace {
  std::vector<std::vector<double>> activations;  // inputs of each layer
  std::vector<double> output;
};
MlpTrace mlp_forward_trace(const MlpParams& params, std::span<const double> input);

/// Accumulates dLoss/dParams for one example into flat gradient storage laid
/// out like flatten_params. Returns nothing; the caller owns averaging.
void mlp_backward_accumulate(const MlpParams& params, const MlpTrace& trace,
                             std::span<const double> output_grad,
                             std::span<double> flat_grad);

std::vector<double> flatten_params(const MlpParams& params);
void unflatten_params(std::span<const double> flat, MlpParams& params);

/// Feature map for deferral heads, built from the base model's predictive
/// probabilities only: [entropy, top-min(10,L) probabilities descending,
/// one-hot of the predicted class]. Dimension L + min(10, L) + 1.
std::vector<double> deferral_features(const ProbVector& model_probs);
int deferral_feature_dim(int num_classes);

struct OptimizerConfig {
  double learning_rate = 7e-4;
  double weight_decay = 1e-3;  // decoupled shrinkage
  int epochs = 300;
  int batch_size = 128;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

}  // namespace l2d
