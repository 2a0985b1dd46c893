#pragma once

#include <cstddef>
#include <vector>

#include "l2d/prob.hpp"
#include "l2d/rng.hpp"

namespace l2d {

/// A finite-support instance with a known class posterior and fixed
/// per-label losses for a model and an expert. Every theorem-level claim in
/// this project is checked exactly on such instances: all expectations are
/// finite sums.
struct DiscreteInstance {
  std::vector<double> atom_probs;                 // marginal over atoms
  std::vector<ProbVector> posteriors;             // class posterior per atom
  std::vector<std::vector<double>> model_losses;  // [atom][label]
  std::vector<std::vector<double>> expert_losses;

  std::size_t num_atoms() const { return atom_probs.size(); }
  int num_classes() const {
    return posteriors.empty() ? 0 : static_cast<int>(posteriors.front().size());
  }

  double expected_model_loss(std::size_t atom) const;
  double expected_expert_loss(std::size_t atom) const;
  double model_loss_variance(std::size_t atom) const;
  double expert_loss_variance(std::size_t atom) const;

  /// Unnormalized KL joint weight at an atom: E_{Y~eta}[exp(-loss_Y/gamma)].
  double joint_model_weight(std::size_t atom, double gamma) const;
  double joint_expert_weight(std::size_t atom, double gamma) const;
  /// Unnormalized KL marginal weight at an atom: exp(-E_{Y~eta}[loss_Y]/gamma).
  double marginal_model_weight(std::size_t atom, double gamma) const;
  double marginal_expert_weight(std::size_t atom, double gamma) const;

  void validate() const;
};

/// Random instance with 2..max_atoms atoms, 2..max_classes classes, losses
/// uniform in [0, max_loss]. Atom and posterior probabilities are bounded
/// away from zero so ratio checks stay well conditioned.
DiscreteInstance random_instance(Rng& rng, int max_atoms, int max_classes,
                                 double max_loss);

/// Variant whose losses take only values {0, max_loss} (zero-one shape).
DiscreteInstance random_zero_one_instance(Rng& rng, int max_atoms, int max_classes);

}  // namespace l2d
