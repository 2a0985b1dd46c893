#pragma once

#include <functional>
#include <string>
#include <vector>

#include "l2d/prob.hpp"

namespace l2d {

struct LabeledExample {
  std::vector<double> features;
  int label = 0;
};

enum class Split { kBaseTrain, kDeferralTrain, kTest };

std::string split_name(Split split);
Split parse_split(const std::string& name);

/// Maps a feature vector to the true class posterior. Only synthetic data
/// carries one; it unlocks the exact marginal quantities and oracle rules.
using PosteriorFn = std::function<ProbVector(const std::vector<double>&)>;

struct Dataset {
  std::vector<LabeledExample> examples;
  Split split = Split::kBaseTrain;
  int num_classes = 0;
  PosteriorFn posterior;  // null unless analytically known

  std::size_t size() const { return examples.size(); }
  bool has_posterior() const { return static_cast<bool>(posterior); }
  int feature_dim() const;

  /// Nonempty, labels in [0, L), constant feature dimension.
  void validate() const;
};

/// JSON-lines dataset format: one {"x": [...], "y": n} record per line.
/// Labels are 0-indexed. The posterior handle is not serialized.
void write_jsonl(const Dataset& data, const std::string& path);
Dataset read_jsonl(const std::string& path, Split split, int num_classes);

}  // namespace l2d
