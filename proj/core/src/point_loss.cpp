#include "l2d/point_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace l2d {

std::string PointLossKind::name() const {
  switch (tag) {
    case Tag::kZeroOne: return "zero-one";
    case Tag::kProb01: return "prob01";
    case Tag::kGce: return "gce";
    case Tag::kCrossEntropy: return "cross-entropy";
    case Tag::kTopK: return "topk";
  }
  return "?";
}

PointLossKind PointLossKind::parse(const std::string& name, double q, int k) {
  if (name == "zero-one") return zero_one();
  if (name == "prob01") return prob01();
  if (name == "gce") return gce(q);
  if (name == "cross-entropy") return cross_entropy();
  if (name == "topk") return topk(k);
  throw std::invalid_argument("PointLossKind: unknown loss '" + name + "'");
}

void PointLossKind::validate(int num_classes) const {
  if (tag == Tag::kGce && !(q > 0.0 && q <= 1.0)) {
    throw std::invalid_argument("PointLossKind: gce q must lie in (0,1]");
  }
  if (tag == Tag::kTopK && (k < 1 || k > num_classes)) {
    throw std::invalid_argument("PointLossKind: topk k must lie in [1,L]");
  }
}

namespace {

// Label indices sorted by descending probability, ties to lower index.
bool label_in_topk(const ProbVector& probs, int label, int k) {
  const std::size_t n = probs.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
  });
  for (int i = 0; i < k; ++i) {
    if (order[static_cast<std::size_t>(i)] == label) return true;
  }
  return false;
}

}  // namespace

double point_loss(const PointLossKind& kind, const ProbVector& probs, int label) {
  const int num_classes = static_cast<int>(probs.size());
  if (label < 0 || label >= num_classes) {
    throw std::invalid_argument("point_loss: label out of range");
  }
  kind.validate(num_classes);
  const double p_label = probs[static_cast<std::size_t>(label)];
  switch (kind.tag) {
    case PointLossKind::Tag::kZeroOne:
      return argmax_predict(probs) == label ? 0.0 : 1.0;
    case PointLossKind::Tag::kProb01: {
      double total = 0.0;
      for (std::size_t y = 0; y < probs.size(); ++y) {
        const double target = static_cast<int>(y) == label ? 1.0 : 0.0;
        total += std::abs(target - probs[y]);
      }
      return total;
    }
    case PointLossKind::Tag::kGce:
      return (1.0 - std::pow(p_label, kind.q)) / kind.q;
    case PointLossKind::Tag::kCrossEntropy:
      return -std::log(std::max(p_label, kCrossEntropyFloor));
    case PointLossKind::Tag::kTopK:
      return label_in_topk(probs, label, kind.k) ? 0.0 : 1.0;
  }
  throw std::logic_error("point_loss: unreachable");
}

std::vector<double> per_label_losses(const PointLossKind& kind,
                                     const ProbVector& probs) {
  std::vector<double> losses(probs.size());
  for (std::size_t y = 0; y < probs.size(); ++y) {
    losses[y] = point_loss(kind, probs, static_cast<int>(y));
  }
  return losses;
}

double point_loss_bound(const PointLossKind& kind) {
  switch (kind.tag) {
    case PointLossKind::Tag::kZeroOne:
    case PointLossKind::Tag::kTopK:
      return 1.0;
    case PointLossKind::Tag::kProb01:
      return 2.0;
    case PointLossKind::Tag::kGce:
      return 1.0 / kind.q;
    case PointLossKind::Tag::kCrossEntropy:
      return -std::log(kCrossEntropyFloor);
  }
  throw std::logic_error("point_loss_bound: unreachable");
}

}  // namespace l2d
