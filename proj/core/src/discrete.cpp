#include "l2d/discrete.hpp"

#include <cmath>
#include <stdexcept>

namespace l2d {

namespace {

double posterior_mean(const ProbVector& eta, const std::vector<double>& losses) {
  double m = 0.0;
  for (std::size_t y = 0; y < eta.size(); ++y) m += eta[y] * losses[y];
  return m;
}

double posterior_variance(const ProbVector& eta, const std::vector<double>& losses) {
  const double m = posterior_mean(eta, losses);
  double v = 0.0;
  for (std::size_t y = 0; y < eta.size(); ++y) {
    const double d = losses[y] - m;
    v += eta[y] * d * d;
  }
  return v;
}

double joint_weight(const ProbVector& eta, const std::vector<double>& losses,
                    double gamma) {
  double w = 0.0;
  for (std::size_t y = 0; y < eta.size(); ++y) {
    w += eta[y] * std::exp(-losses[y] / gamma);
  }
  return w;
}

}  // namespace

double DiscreteInstance::expected_model_loss(std::size_t atom) const {
  return posterior_mean(posteriors[atom], model_losses[atom]);
}

double DiscreteInstance::expected_expert_loss(std::size_t atom) const {
  return posterior_mean(posteriors[atom], expert_losses[atom]);
}

double DiscreteInstance::model_loss_variance(std::size_t atom) const {
  return posterior_variance(posteriors[atom], model_losses[atom]);
}

double DiscreteInstance::expert_loss_variance(std::size_t atom) const {
  return posterior_variance(posteriors[atom], expert_losses[atom]);
}

double DiscreteInstance::joint_model_weight(std::size_t atom, double gamma) const {
  return joint_weight(posteriors[atom], model_losses[atom], gamma);
}

double DiscreteInstance::joint_expert_weight(std::size_t atom, double gamma) const {
  return joint_weight(posteriors[atom], expert_losses[atom], gamma);
}

double DiscreteInstance::marginal_model_weight(std::size_t atom, double gamma) const {
  return std::exp(-expected_model_loss(atom) / gamma);
}

double DiscreteInstance::marginal_expert_weight(std::size_t atom, double gamma) const {
  return std::exp(-expected_expert_loss(atom) / gamma);
}

void DiscreteInstance::validate() const {
  const std::size_t n = num_atoms();
  if (n == 0) throw std::invalid_argument("DiscreteInstance: empty");
  if (posteriors.size() != n || model_losses.size() != n || expert_losses.size() != n) {
    throw std::invalid_argument("DiscreteInstance: length mismatch");
  }
  double sum = 0.0;
  for (double p : atom_probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("DiscreteInstance: negative atom prob");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("DiscreteInstance: atom probs must sum to 1");
  }
  const std::size_t num_labels = posteriors.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    if (posteriors[i].size() != num_labels ||
        model_losses[i].size() != num_labels ||
        expert_losses[i].size() != num_labels) {
      throw std::invalid_argument("DiscreteInstance: ragged label dimension");
    }
    for (std::size_t y = 0; y < num_labels; ++y) {
      if (!(model_losses[i][y] >= 0.0) || !(expert_losses[i][y] >= 0.0)) {
        throw std::invalid_argument("DiscreteInstance: negative loss");
      }
    }
  }
}

DiscreteInstance random_instance(Rng& rng, int max_atoms, int max_classes,
                                 double max_loss) {
  const int n = rng.uniform_int(2, max_atoms);
  const int num_labels = rng.uniform_int(2, max_classes);

  DiscreteInstance inst;
  std::vector<double> raw(static_cast<std::size_t>(n));
  for (double& v : raw) v = 0.05 + rng.uniform();
  double sum = 0.0;
  for (double v : raw) sum += v;
  for (double& v : raw) v /= sum;
  inst.atom_probs = raw;

  for (int i = 0; i < n; ++i) {
    std::vector<double> eta(static_cast<std::size_t>(num_labels));
    for (double& v : eta) v = 0.05 + rng.uniform();
    inst.posteriors.push_back(ProbVector::from_unnormalized(std::move(eta)));

    std::vector<double> lm(static_cast<std::size_t>(num_labels));
    std::vector<double> le(static_cast<std::size_t>(num_labels));
    for (double& v : lm) v = rng.uniform() * max_loss;
    for (double& v : le) v = rng.uniform() * max_loss;
    inst.model_losses.push_back(std::move(lm));
    inst.expert_losses.push_back(std::move(le));
  }
  inst.validate();
  return inst;
}

DiscreteInstance random_zero_one_instance(Rng& rng, int max_atoms, int max_classes) {
  DiscreteInstance inst = random_instance(rng, max_atoms, max_classes, 1.0);
  for (auto& row : inst.model_losses) {
    for (double& v : row) v = v < 0.5 ? 0.0 : 1.0;
  }
  for (auto& row : inst.expert_losses) {
    for (double& v : row) v = v < 0.5 ? 0.0 : 1.0;
  }
  return inst;
}

}  // namespace l2d
