#pragma once

#include <string>

#include "l2d/prob.hpp"

namespace l2d {

/// Pointwise loss family used both for evaluation and for defining the
/// exponential reweightings that drive deferral training.
struct PointLossKind {
  enum class Tag { kZeroOne, kProb01, kGce, kCrossEntropy, kTopK };

  Tag tag = Tag::kZeroOne;
  double q = 0.7;  // gce exponent, in (0, 1]
  int k = 1;       // topk cutoff, in [1, L]

  static PointLossKind zero_one() { return {Tag::kZeroOne, 0.7, 1}; }
  static PointLossKind prob01() { return {Tag::kProb01, 0.7, 1}; }
  static PointLossKind gce(double q = 0.7) { return {Tag::kGce, q, 1}; }
  static PointLossKind cross_entropy() { return {Tag::kCrossEntropy, 0.7, 1}; }
  static PointLossKind topk(int k) { return {Tag::kTopK, 0.7, k}; }

  std::string name() const;
  static PointLossKind parse(const std::string& name, double q, int k);

  void validate(int num_classes) const;
};

/// Cross-entropy clamps the label probability at this floor before the log
/// so every shipped loss has a finite upper bound.
inline constexpr double kCrossEntropyFloor = 1e-12;

/// Loss of predicting `probs` when the label is `label`:
///   zero-one       [argmax(probs) != label]
///   prob01         L1 distance between probs and the one-hot label
///   gce(q)         (1 - probs[label]^q) / q
///   cross-entropy  -log(max(probs[label], 1e-12))
///   topk(k)        [label not among the k largest entries]
double point_loss(const PointLossKind& kind, const ProbVector& probs, int label);

/// Smallest B with 0 <= point_loss <= B for the given kind.
double point_loss_bound(const PointLossKind& kind);

/// point_loss evaluated at every label in [0, L); the per-label loss row
/// that Chow-style rules take expectations over.
std::vector<double> per_label_losses(const PointLossKind& kind,
                                     const ProbVector& probs);

}  // namespace l2d
