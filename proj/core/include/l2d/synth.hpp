#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "l2d/dataset.hpp"
#include "l2d/prob.hpp"

namespace l2d {

/// Isotropic Gaussian mixture with one component per class. The class
/// posterior is available in closed form, which makes every oracle quantity
/// computable on sampled data.
struct MixtureSpec {
  int num_classes = 10;
  int dim = 8;
  std::vector<std::vector<double>> means;  // [class][dim]
  double sigma = 1.2;
  std::vector<double> priors;  // valid distribution over classes
  std::uint64_t seed = 0;

  void validate() const;

  /// Deterministic layout: class y sits at scale * e_y for y < dim and at
  /// -scale * e_{y-dim} beyond, with uniform priors.
  static MixtureSpec axis_layout(int num_classes, int dim, double scale,
                                 double sigma, std::uint64_t seed);
};

/// Exact class posterior of the mixture (log-sum-exp stabilized).
PosteriorFn mixture_posterior(const MixtureSpec& spec);

/// n i.i.d. draws: class from the priors, features from the class Gaussian.
Dataset gen_mixture(const MixtureSpec& spec, std::size_t n);

/// Training-set corruptions. Only labels (label-noise) or membership
/// (long-tail, specialist) change; feature vectors are never touched.
struct CorruptionSpec {
  enum class Kind { kLabelNoise, kLongTail, kSpecialist };

  Kind kind = Kind::kLabelNoise;
  int noisy_classes = 0;  // label-noise: relabel examples with label < k
  int head_count = 0;     // long-tail: first h classes are heads
  int n_head = 0;         // long-tail: cap per head class
  int n_tail = 0;         // long-tail: cap per tail class
  std::vector<int> specialist_classes;  // specialist: classes kept in full
  double keep_prob = 1.0;               // specialist: keep rate elsewhere

  static CorruptionSpec label_noise(int k);
  static CorruptionSpec long_tail(int head_count, int n_head, int n_tail);
  static CorruptionSpec specialist(std::vector<int> classes, double keep_prob);

  void validate(int num_classes) const;
  std::string name() const;
};

/// label-noise(k): every example with label < k gets a label resampled
/// uniformly over all L classes (possibly the original).
/// long-tail: keep at most n_head examples per head class and n_tail per
/// tail class, sampled without replacement.
/// specialist(classes, p): keep all examples of the listed classes, keep
/// each other example independently with probability p.
Dataset apply_corruption(const Dataset& data, const CorruptionSpec& spec,
                         std::uint64_t seed);

/// Seeded shuffle followed by contiguous cuts; the pieces are disjoint,
/// exhaustive, and tagged base-train / deferral-train / test.
std::array<Dataset, 3> three_way_split(const Dataset& data,
                                       std::array<double, 3> fractions,
                                       std::uint64_t seed);

}  // namespace l2d
