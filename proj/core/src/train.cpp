#include "l2d/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "l2d/baselines.hpp"
#include "l2d/rng.hpp"

namespace l2d {

namespace {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long long t = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad,
            const OptimizerConfig& opt) {
    ++t;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * grad[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      params[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
      params[i] -= opt.learning_rate * opt.weight_decay * params[i];
    }
  }
};

void check_finite(double loss) {
  if (!std::isfinite(loss)) {
    throw std::runtime_error("training diverged: non-finite loss");
  }
}

// Softmax with max-shift; returns probabilities (strictly positive).
std::vector<double> softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double cross_entropy_from_logits(std::span<const double> logits, int label) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - top);
  return std::log(sum) + top - logits[static_cast<std::size_t>(label)];
}

}  // namespace

ProbVector Classifier::predict_proba(std::span<const double> features) const {
  return ProbVector(softmax(mlp_forward(params, features)));
}

int Classifier::predict(std::span<const double> features) const {
  return argmax_predict(predict_proba(features));
}

Classifier train_classifier(const Dataset& data, const std::vector<int>& hidden,
                            const OptimizerConfig& opt) {
  data.validate();
  opt.validate();

  std::vector<int> layer_sizes;
  layer_sizes.push_back(data.feature_dim());
  layer_sizes.insert(layer_sizes.end(), hidden.begin(), hidden.end());
  layer_sizes.push_back(data.num_classes);

  MlpParams params = init_mlp(layer_sizes, mix_seed(opt.seed, 0x11));
  std::vector<double> flat = flatten_params(params);
  AdamState adam(flat.size());
  Rng shuffle_rng(mix_seed(opt.seed, 0x12));

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> grad(flat.size());
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const LabeledExample& ex = data.examples[order[k]];
        const MlpTrace trace = mlp_forward_trace(params, ex.features);
        batch_loss += cross_entropy_from_logits(trace.output, ex.label);
        std::vector<double> out_grad = softmax(trace.output);
        out_grad[static_cast<std::size_t>(ex.label)] -= 1.0;
        mlp_backward_accumulate(params, trace, out_grad, grad);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      check_finite(batch_loss * inv);
      for (double& g : grad) g *= inv;
      adam.step(flat, grad, opt);
      unflatten_params(flat, params);
    }
  }
  return Classifier{std::move(params)};
}

DrCpeObjective::DrCpeObjective(DrLossSpec spec, std::vector<double> model_weights,
                               std::vector<double> expert_weights)
    : spec_(spec),
      model_weights_(std::move(model_weights)),
      expert_weights_(std::move(expert_weights)) {
  if (model_weights_.size() != expert_weights_.size()) {
    throw std::invalid_argument("DrCpeObjective: weight length mismatch");
  }
  for (std::size_t i = 0; i < model_weights_.size(); ++i) {
    if (!(model_weights_[i] >= 0.0) || !(expert_weights_[i] >= 0.0)) {
      throw std::invalid_argument("DrCpeObjective: negative weight");
    }
  }
}

std::pair<double, double> DrCpeObjective::loss_and_grad(double u, std::size_t i) const {
  const double v = spec_.to_score(u);
  const double dv = spec_.to_score_deriv(u);
  const double loss = model_weights_[i] * spec_.partial_pos(v) +
                      expert_weights_[i] * spec_.partial_neg(v);
  const double dloss = (model_weights_[i] * spec_.partial_pos_deriv(v) +
                        expert_weights_[i] * spec_.partial_neg_deriv(v)) *
                       dv;
  return {loss, dloss};
}

SquaredRegressionObjective::SquaredRegressionObjective(std::vector<double> targets)
    : targets_(std::move(targets)) {}

std::pair<double, double> SquaredRegressionObjective::loss_and_grad(
    double u, std::size_t i) const {
  const double r = u - targets_[i];
  return {r * r, 2.0 * r};
}

TwoStageExpObjective::TwoStageExpObjective(std::vector<double> model_correct,
                                           std::vector<double> expert_correct,
                                           std::vector<double> model_max_probs,
                                           double cost)
    : model_correct_(std::move(model_correct)),
      expert_correct_(std::move(expert_correct)),
      model_max_probs_(std::move(model_max_probs)),
      cost_(cost) {
  if (!(cost_ >= 0.0)) throw std::invalid_argument("TwoStageExpObjective: cost < 0");
  if (model_correct_.size() != expert_correct_.size() ||
      model_correct_.size() != model_max_probs_.size()) {
    throw std::invalid_argument("TwoStageExpObjective: length mismatch");
  }
}

std::pair<double, double> TwoStageExpObjective::loss_and_grad(double u,
                                                              std::size_t i) const {
  const double m = model_max_probs_[i];
  const double e1 = u - m;
  const double e2 = m - u;
  const double c1 = std::clamp(e1, -kTwoStageExpClamp, kTwoStageExpClamp);
  const double c2 = std::clamp(e2, -kTwoStageExpClamp, kTwoStageExpClamp);
  const double t1 = model_correct_[i] * std::exp(c1);
  const double t2 = (expert_correct_[i] - cost_) * std::exp(c2);
  double grad = 0.0;
  if (e1 == c1) grad += t1;
  if (e2 == c2) grad -= t2;
  return {t1 + t2, grad};
}

namespace {

double head_loss_and_maybe_grad(const MlpParams& params,
                                const std::vector<std::vector<double>>& rows,
                                const ScalarObjective& objective,
                                std::vector<double>* grad_out) {
  if (rows.empty()) throw std::invalid_argument("scalar head: no rows");
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const MlpTrace trace = mlp_forward_trace(params, rows[i]);
    if (trace.output.size() != 1) {
      throw std::invalid_argument("scalar head: network output is not scalar");
    }
    const auto [loss, dloss] = objective.loss_and_grad(trace.output[0], i);
    total += loss;
    if (grad_out != nullptr) {
      const double out_grad[1] = {dloss};
      mlp_backward_accumulate(params, trace, out_grad, *grad_out);
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  if (grad_out != nullptr) {
    for (double& g : *grad_out) g *= inv;
  }
  return total * inv;
}

}  // namespace

double head_batch_loss(const MlpParams& params,
                       const std::vector<std::vector<double>>& rows,
                       const ScalarObjective& objective) {
  return head_loss_and_maybe_grad(params, rows, objective, nullptr);
}

std::vector<double> head_batch_grad(const MlpParams& params,
                                    const std::vector<std::vector<double>>& rows,
                                    const ScalarObjective& objective) {
  std::vector<double> grad(flatten_params(params).size(), 0.0);
  head_loss_and_maybe_grad(params, rows, objective, &grad);
  return grad;
}

double classifier_batch_loss(const MlpParams& params, const Dataset& data) {
  double total = 0.0;
  for (const auto& ex : data.examples) {
    total += cross_entropy_from_logits(mlp_forward(params, ex.features), ex.label);
  }
  return total / static_cast<double>(data.size());
}

std::vector<double> classifier_batch_grad(const MlpParams& params,
                                          const Dataset& data) {
  std::vector<double> grad(flatten_params(params).size(), 0.0);
  for (const auto& ex : data.examples) {
    const MlpTrace trace = mlp_forward_trace(params, ex.features);
    std::vector<double> out_grad = softmax(trace.output);
    out_grad[static_cast<std::size_t>(ex.label)] -= 1.0;
    mlp_backward_accumulate(params, trace, out_grad, grad);
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  for (double& g : grad) g *= inv;
  return grad;
}

TrainResult train_scalar_head(const std::vector<std::vector<double>>& rows,
                              const ScalarObjective& objective,
                              const std::vector<int>& hidden,
                              const OptimizerConfig& opt) {
  if (rows.empty()) throw std::invalid_argument("train_scalar_head: no rows");
  opt.validate();

  std::vector<int> layer_sizes;
  layer_sizes.push_back(static_cast<int>(rows.front().size()));
  layer_sizes.insert(layer_sizes.end(), hidden.begin(), hidden.end());
  layer_sizes.push_back(1);

  TrainResult result;
  result.params = init_mlp(layer_sizes, mix_seed(opt.seed, 0x21));
  result.initial_loss = head_batch_loss(result.params, rows, objective);

  std::vector<double> flat = flatten_params(result.params);
  AdamState adam(flat.size());
  Rng shuffle_rng(mix_seed(opt.seed, 0x22));

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> grad(flat.size());
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        const MlpTrace trace = mlp_forward_trace(result.params, rows[i]);
        const auto [loss, dloss] = objective.loss_and_grad(trace.output[0], i);
        batch_loss += loss;
        const double out_grad[1] = {dloss};
        mlp_backward_accumulate(result.params, trace, out_grad, grad);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      check_finite(batch_loss * inv);
      for (double& g : grad) g *= inv;
      adam.step(flat, grad, opt);
      unflatten_params(flat, result.params);
    }
  }
  result.final_loss = head_batch_loss(result.params, rows, objective);
  return result;
}

double DeferralScorer::score_from_features(std::span<const double> features) const {
  const DrLossSpec spec = DrLossSpec::make(kind);
  return spec.to_score(mlp_forward(params, features)[0]);
}

double DeferralScorer::score(const ProbVector& model_probs) const {
  const std::vector<double> features = deferral_features(model_probs);
  return score_from_features(features);
}

DeferralScorer train_deferral_scorer(const Dataset& deferral_data,
                                     const Classifier& model,
                                     const Classifier& expert,
                                     const DrLossSpec& spec,
                                     const PointLossKind& weight_loss,
                                     double gamma, double gamma_expert,
                                     const OptimizerConfig& opt) {
  deferral_data.validate();

  std::vector<std::vector<double>> rows;
  std::vector<double> model_weights;
  std::vector<double> expert_weights;
  rows.reserve(deferral_data.size());
  model_weights.reserve(deferral_data.size());
  expert_weights.reserve(deferral_data.size());
  for (const auto& ex : deferral_data.examples) {
    const ProbVector model_probs = model.predict_proba(ex.features);
    const ProbVector expert_probs = expert.predict_proba(ex.features);
    rows.push_back(deferral_features(model_probs));
    model_weights.push_back(
        kl_joint_weight(point_loss(weight_loss, model_probs, ex.label), gamma));
    expert_weights.push_back(kl_joint_weight(
        point_loss(weight_loss, expert_probs, ex.label), gamma_expert));
  }

  const DrCpeObjective objective(spec, std::move(model_weights),
                                 std::move(expert_weights));
  TrainResult trained = train_scalar_head(rows, objective, {64, 16}, opt);
  return DeferralScorer{std::move(trained.params), spec.kind};
}

}  // namespace l2d
