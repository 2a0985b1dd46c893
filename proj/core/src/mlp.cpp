#include "l2d/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "l2d/rng.hpp"

namespace l2d {

std::size_t MlpParams::num_params() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    total += weights[l].size() + biases[l].size();
  }
  return total;
}

void MlpParams::validate() const {
  if (layer_sizes.size() < 2) throw std::invalid_argument("MlpParams: need >= 2 layers");
  if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size()) {
    throw std::invalid_argument("MlpParams: layer bookkeeping mismatch");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const std::size_t fan_in = static_cast<std::size_t>(layer_sizes[l]);
    const std::size_t fan_out = static_cast<std::size_t>(layer_sizes[l + 1]);
    if (weights[l].size() != fan_in * fan_out || biases[l].size() != fan_out) {
      throw std::invalid_argument("MlpParams: weight shape mismatch");
    }
    for (double w : weights[l]) {
      if (!std::isfinite(w)) throw std::invalid_argument("MlpParams: non-finite weight");
    }
    for (double b : biases[l]) {
      if (!std::isfinite(b)) throw std::invalid_argument("MlpParams: non-finite bias");
    }
  }
}

MlpParams init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("init_mlp: need >= 2 layers");
  for (int s : layer_sizes) {
    if (s < 1) throw std::invalid_argument("init_mlp: layer size < 1");
  }
  Rng rng(seed);
  MlpParams params;
  params.layer_sizes = layer_sizes;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::size_t fan_in = static_cast<std::size_t>(layer_sizes[l]);
    const std::size_t fan_out = static_cast<std::size_t>(layer_sizes[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> w(fan_in * fan_out);
    for (double& v : w) v = rng.uniform(-bound, bound);
    params.weights.push_back(std::move(w));
    params.biases.emplace_back(fan_out, 0.0);
  }
  return params;
}

MlpTrace mlp_forward_trace(const MlpParams& params, std::span<const double> input) {
  if (static_cast<int>(input.size()) != params.layer_sizes.front()) {
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  }
  MlpTrace trace;
  std::vector<double> current(input.begin(), input.end());
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    trace.activations.push_back(current);
    const std::size_t fan_in = static_cast<std::size_t>(params.layer_sizes[l]);
    const std::size_t fan_out = static_cast<std::size_t>(params.layer_sizes[l + 1]);
    std::vector<double> next(fan_out);
    for (std::size_t o = 0; o < fan_out; ++o) {
      double acc = params.biases[l][o];
      const double* row = params.weights[l].data() + o * fan_in;
      for (std::size_t i = 0; i < fan_in; ++i) acc += row[i] * current[i];
      next[o] = acc;
    }
    if (l + 1 < params.num_layers()) {
      for (double& v : next) v = std::max(0.0, v);  // rectifier on hidden layers
    }
    current = std::move(next);
  }
  trace.output = current;
  return trace;
}

std::vector<double> mlp_forward(const MlpParams& params,
                                std::span<const double> input) {
  return mlp_forward_trace(params, input).output;
}

void mlp_backward_accumulate(const MlpParams& params, const MlpTrace& trace,
                             std::span<const double> output_grad,
                             std::span<double> flat_grad) {
  const std::size_t num_layers = params.num_layers();
  if (output_grad.size() != trace.output.size()) {
    throw std::invalid_argument("mlp_backward: output grad size mismatch");
  }

  // Flat layout offsets must agree with flatten_params: per layer, weights
  // then biases.
  std::vector<std::size_t> offsets(num_layers);
  std::size_t cursor = 0;
  for (std::size_t l = 0; l < num_layers; ++l) {
    offsets[l] = cursor;
    cursor += params.weights[l].size() + params.biases[l].size();
  }

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (std::size_t l = num_layers; l-- > 0;) {
    const std::size_t fan_in = static_cast<std::size_t>(params.layer_sizes[l]);
    const std::size_t fan_out = static_cast<std::size_t>(params.layer_sizes[l + 1]);
    const std::vector<double>& layer_input = trace.activations[l];
    double* wgrad = flat_grad.data() + offsets[l];
    double* bgrad = wgrad + fan_in * fan_out;
    for (std::size_t o = 0; o < fan_out; ++o) {
      const double d = delta[o];
      double* row = wgrad + o * fan_in;
      for (std::size_t i = 0; i < fan_in; ++i) row[i] += d * layer_input[i];
      bgrad[o] += d;
    }
    if (l == 0) break;
    std::vector<double> prev(fan_in, 0.0);
    for (std::size_t o = 0; o < fan_out; ++o) {
      const double d = delta[o];
      const double* row = params.weights[l].data() + o * fan_in;
      for (std::size_t i = 0; i < fan_in; ++i) prev[i] += d * row[i];
    }
    // Rectifier gate: the stored activation of layer l is already rectified,
    // so positive entries mark active units.
    for (std::size_t i = 0; i < fan_in; ++i) {
      if (layer_input[i] <= 0.0) prev[i] = 0.0;
    }
    delta = std::move(prev);
  }
}

std::vector<double> flatten_params(const MlpParams& params) {
  std::vector<double> flat;
  flat.reserve(params.num_params());
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    flat.insert(flat.end(), params.weights[l].begin(), params.weights[l].end());
    flat.insert(flat.end(), params.biases[l].begin(), params.biases[l].end());
  }
  return flat;
}

void unflatten_params(std::span<const double> flat, MlpParams& params) {
  std::size_t cursor = 0;
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    std::copy_n(flat.begin() + cursor, params.weights[l].size(),
                params.weights[l].begin());
    cursor += params.weights[l].size();
    std::copy_n(flat.begin() + cursor, params.biases[l].size(),
                params.biases[l].begin());
    cursor += params.biases[l].size();
  }
  if (cursor != flat.size()) {
    throw std::invalid_argument("unflatten_params: size mismatch");
  }
}

int deferral_feature_dim(int num_classes) {
  return num_classes + std::min(10, num_classes) + 1;
}

std::vector<double> deferral_features(const ProbVector& model_probs) {
  const int num_classes = static_cast<int>(model_probs.size());
  std::vector<double> features;
  features.reserve(static_cast<std::size_t>(deferral_feature_dim(num_classes)));

  features.push_back(entropy(model_probs));

  std::vector<double> sorted(model_probs.entries());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  const int top = std::min(10, num_classes);
  for (int i = 0; i < top; ++i) features.push_back(sorted[static_cast<std::size_t>(i)]);

  const int predicted = argmax_predict(model_probs);
  for (int y = 0; y < num_classes; ++y) {
    features.push_back(y == predicted ? 1.0 : 0.0);
  }
  return features;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("OptimizerConfig: lr must be > 0");
  if (epochs < 0) throw std::invalid_argument("OptimizerConfig: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("OptimizerConfig: batch size < 1");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("OptimizerConfig: bad weight decay");
}

}  // namespace l2d
