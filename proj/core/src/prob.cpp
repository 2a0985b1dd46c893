#include "l2d/prob.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace l2d {

namespace {
constexpr double kSumTolerance = 1e-9;
}

ProbVector::ProbVector(std::vector<double> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) {
    throw std::invalid_argument("ProbVector: empty entry list");
  }
  double sum = 0.0;
  for (double p : entries_) {
    if (!(p >= 0.0)) {
      throw std::invalid_argument("ProbVector: negative or NaN entry " +
                                  std::to_string(p));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::invalid_argument("ProbVector: entries sum to " +
                                std::to_string(sum) + ", expected 1");
  }
}

ProbVector ProbVector::from_unnormalized(std::vector<double> raw) {
  double sum = 0.0;
  for (double v : raw) {
    if (!(v >= 0.0)) {
      throw std::invalid_argument("ProbVector: negative or NaN mass");
    }
    sum += v;
  }
  if (sum <= 0.0) {
    throw std::invalid_argument("ProbVector: all-zero mass");
  }
  for (double& v : raw) v /= sum;
  return ProbVector(std::move(raw));
}

ProbVector ProbVector::uniform(int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("ProbVector: num_classes < 1");
  return ProbVector(std::vector<double>(
      static_cast<std::size_t>(num_classes), 1.0 / num_classes));
}

ProbVector ProbVector::one_hot(int num_classes, int label) {
  if (label < 0 || label >= num_classes) {
    throw std::invalid_argument("ProbVector: one-hot label out of range");
  }
  std::vector<double> e(static_cast<std::size_t>(num_classes), 0.0);
  e[static_cast<std::size_t>(label)] = 1.0;
  return ProbVector(std::move(e));
}

int argmax_predict(const ProbVector& probs) {
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

double entropy(const ProbVector& probs) {
  double h = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) h -= probs[i] * std::log(probs[i]);
  }
  return h;
}

}  // namespace l2d
