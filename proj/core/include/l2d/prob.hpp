#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace l2d {

/// A point on the probability simplex over L classes. Entries are
/// validated on construction: non-negative and summing to 1 within 1e-9.
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> entries);

  /// Normalizes a non-negative, non-zero vector onto the simplex.
  static ProbVector from_unnormalized(std::vector<double> raw);
  static ProbVector uniform(int num_classes);
  static ProbVector one_hot(int num_classes, int label);

  double operator[](std::size_t i) const { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<double>& entries() const { return entries_; }
  std::span<const double> span() const { return entries_; }

 private:
  std::vector<double> entries_;
};

/// Index of the largest entry; ties break to the lowest class index so
/// downstream zero-one losses and comparison targets are reproducible.
int argmax_predict(const ProbVector& probs);

/// Shannon entropy in nats. Zero entries contribute zero.
double entropy(const ProbVector& probs);

}  // namespace l2d
