#include "l2d/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "l2d/rng.hpp"

namespace l2d {

void MixtureSpec::validate() const {
  if (num_classes < 2) throw std::invalid_argument("MixtureSpec: need >= 2 classes");
  if (dim < 1) throw std::invalid_argument("MixtureSpec: dim < 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("MixtureSpec: sigma must be > 0");
  if (static_cast<int>(means.size()) != num_classes) {
    throw std::invalid_argument("MixtureSpec: one mean per class required");
  }
  for (const auto& mu : means) {
    if (static_cast<int>(mu.size()) != dim) {
      throw std::invalid_argument("MixtureSpec: mean dimension mismatch");
    }
  }
  for (std::size_t a = 0; a < means.size(); ++a) {
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      if (means[a] == means[b]) {
        throw std::invalid_argument("MixtureSpec: means must be distinct");
      }
    }
  }
  ProbVector check(priors);  // validates the simplex constraints
  if (static_cast<int>(check.size()) != num_classes) {
    throw std::invalid_argument("MixtureSpec: prior length mismatch");
  }
}

MixtureSpec MixtureSpec::axis_layout(int num_classes, int dim, double scale,
                                     double sigma, std::uint64_t seed) {
  if (num_classes > 2 * dim) {
    throw std::invalid_argument("MixtureSpec: axis layout needs L <= 2*dim");
  }
  MixtureSpec spec;
  spec.num_classes = num_classes;
  spec.dim = dim;
  spec.sigma = sigma;
  spec.seed = seed;
  spec.priors.assign(static_cast<std::size_t>(num_classes), 1.0 / num_classes);
  for (int y = 0; y < num_classes; ++y) {
    std::vector<double> mu(static_cast<std::size_t>(dim), 0.0);
    if (y < dim) {
      mu[static_cast<std::size_t>(y)] = scale;
    } else {
      mu[static_cast<std::size_t>(y - dim)] = -scale;
    }
    spec.means.push_back(std::move(mu));
  }
  spec.validate();
  return spec;
}

PosteriorFn mixture_posterior(const MixtureSpec& spec) {
  spec.validate();
  const auto means = spec.means;
  const auto priors = spec.priors;
  const double inv2s2 = 1.0 / (2.0 * spec.sigma * spec.sigma);
  return [means, priors, inv2s2](const std::vector<double>& x) {
    std::vector<double> logits(means.size());
    for (std::size_t y = 0; y < means.size(); ++y) {
      double sq = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - means[y][j];
        sq += d * d;
      }
      logits[y] = std::log(priors[y]) - sq * inv2s2;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> w(logits.size());
    for (std::size_t y = 0; y < logits.size(); ++y) w[y] = std::exp(logits[y] - top);
    return ProbVector::from_unnormalized(std::move(w));
  };
}

Dataset gen_mixture(const MixtureSpec& spec, std::size_t n) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("gen_mixture: n must be >= 1");
  Rng rng(spec.seed);

  std::vector<double> cdf(spec.priors.size());
  std::partial_sum(spec.priors.begin(), spec.priors.end(), cdf.begin());

  Dataset data;
  data.split = Split::kBaseTrain;
  data.num_classes = spec.num_classes;
  data.posterior = mixture_posterior(spec);
  data.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int label = 0;
    while (label + 1 < spec.num_classes && u >= cdf[static_cast<std::size_t>(label)]) {
      ++label;
    }
    LabeledExample ex;
    ex.label = label;
    ex.features.resize(static_cast<std::size_t>(spec.dim));
    for (int j = 0; j < spec.dim; ++j) {
      ex.features[static_cast<std::size_t>(j)] =
          spec.means[static_cast<std::size_t>(label)][static_cast<std::size_t>(j)] +
          spec.sigma * rng.normal();
    }
    data.examples.push_back(std::move(ex));
  }
  return data;
}

CorruptionSpec CorruptionSpec::label_noise(int k) {
  CorruptionSpec spec;
  spec.kind = Kind::kLabelNoise;
  spec.noisy_classes = k;
  return spec;
}

CorruptionSpec CorruptionSpec::long_tail(int head_count, int n_head, int n_tail) {
  CorruptionSpec spec;
  spec.kind = Kind::kLongTail;
  spec.head_count = head_count;
  spec.n_head = n_head;
  spec.n_tail = n_tail;
  return spec;
}

CorruptionSpec CorruptionSpec::specialist(std::vector<int> classes, double keep_prob) {
  CorruptionSpec spec;
  spec.kind = Kind::kSpecialist;
  spec.specialist_classes = std::move(classes);
  spec.keep_prob = keep_prob;
  return spec;
}

void CorruptionSpec::validate(int num_classes) const {
  switch (kind) {
    case Kind::kLabelNoise:
      if (noisy_classes < 0 || noisy_classes > num_classes) {
        throw std::invalid_argument("CorruptionSpec: label-noise k must lie in [0,L]");
      }
      break;
    case Kind::kLongTail:
      if (head_count < 0 || head_count > num_classes) {
        throw std::invalid_argument("CorruptionSpec: head count must lie in [0,L]");
      }
      if (n_head < 0 || n_tail < 0) {
        throw std::invalid_argument("CorruptionSpec: negative per-class cap");
      }
      break;
    case Kind::kSpecialist:
      if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
        throw std::invalid_argument("CorruptionSpec: keep prob must lie in (0,1]");
      }
      for (int c : specialist_classes) {
        if (c < 0 || c >= num_classes) {
          throw std::invalid_argument("CorruptionSpec: specialist class out of range");
        }
      }
      break;
  }
}

std::string CorruptionSpec::name() const {
  switch (kind) {
    case Kind::kLabelNoise: return "label-noise";
    case Kind::kLongTail: return "long-tail";
    case Kind::kSpecialist: return "specialist";
  }
  return "?";
}

Dataset apply_corruption(const Dataset& data, const CorruptionSpec& spec,
                         std::uint64_t seed) {
  data.validate();
  spec.validate(data.num_classes);
  Rng rng(seed);

  Dataset out;
  out.split = data.split;
  out.num_classes = data.num_classes;
  out.posterior = data.posterior;

  switch (spec.kind) {
    case CorruptionSpec::Kind::kLabelNoise: {
      out.examples = data.examples;
      for (auto& ex : out.examples) {
        if (ex.label < spec.noisy_classes) {
          ex.label = rng.uniform_int(0, data.num_classes - 1);
        }
      }
      break;
    }
    case CorruptionSpec::Kind::kLongTail: {
      // Per-class caps, sampled without replacement via a per-class shuffle
      // of example indices.
      std::vector<std::vector<std::size_t>> by_class(
          static_cast<std::size_t>(data.num_classes));
      for (std::size_t i = 0; i < data.examples.size(); ++i) {
        by_class[static_cast<std::size_t>(data.examples[i].label)].push_back(i);
      }
      std::vector<std::size_t> kept;
      for (int c = 0; c < data.num_classes; ++c) {
        auto& idx = by_class[static_cast<std::size_t>(c)];
        rng.shuffle(idx);
        const std::size_t cap = static_cast<std::size_t>(
            c < spec.head_count ? spec.n_head : spec.n_tail);
        for (std::size_t j = 0; j < idx.size() && j < cap; ++j) {
          kept.push_back(idx[j]);
        }
      }
      std::sort(kept.begin(), kept.end());
      for (std::size_t i : kept) out.examples.push_back(data.examples[i]);
      break;
    }
    case CorruptionSpec::Kind::kSpecialist: {
      std::vector<bool> is_specialist(static_cast<std::size_t>(data.num_classes), false);
      for (int c : spec.specialist_classes) {
        is_specialist[static_cast<std::size_t>(c)] = true;
      }
      for (const auto& ex : data.examples) {
        if (is_specialist[static_cast<std::size_t>(ex.label)] ||
            rng.uniform() < spec.keep_prob) {
          out.examples.push_back(ex);
        }
      }
      break;
    }
  }
  if (out.examples.empty()) {
    throw std::runtime_error("apply_corruption: corruption removed every example");
  }
  return out;
}

std::array<Dataset, 3> three_way_split(const Dataset& data,
                                       std::array<double, 3> fractions,
                                       std::uint64_t seed) {
  data.validate();
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw std::invalid_argument("three_way_split: fractions must be > 0");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("three_way_split: fractions must sum to 1");
  }

  std::vector<std::size_t> order(data.examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t n = order.size();
  const std::size_t n1 = static_cast<std::size_t>(std::llround(fractions[0] * n));
  const std::size_t n2 = static_cast<std::size_t>(
      std::llround((fractions[0] + fractions[1]) * n) - static_cast<long long>(n1));

  std::array<Dataset, 3> parts;
  const Split tags[3] = {Split::kBaseTrain, Split::kDeferralTrain, Split::kTest};
  const std::size_t bounds[4] = {0, n1, n1 + n2, n};
  for (int p = 0; p < 3; ++p) {
    parts[p].split = tags[p];
    parts[p].num_classes = data.num_classes;
    parts[p].posterior = data.posterior;
    for (std::size_t i = bounds[p]; i < bounds[p + 1]; ++i) {
      parts[p].examples.push_back(data.examples[order[i]]);
    }
    if (parts[p].examples.empty()) {
      throw std::invalid_argument("three_way_split: empty split " + split_name(tags[p]));
    }
  }
  return parts;
}

}  // namespace l2d
