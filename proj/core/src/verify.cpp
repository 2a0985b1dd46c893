#include "l2d/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "l2d/baselines.hpp"
#include "l2d/discrete.hpp"
#include "l2d/drcpe.hpp"
#include "l2d/experiment.hpp"
#include "l2d/ideal.hpp"
#include "l2d/mlp.hpp"
#include "l2d/point_loss.hpp"
#include "l2d/rng.hpp"
#include "l2d/rules.hpp"
#include "l2d/synth.hpp"
#include "l2d/train.hpp"

namespace l2d {

namespace {

struct Checker {
  bool pass = true;
  std::ostringstream detail;

  void fail(const std::string& message) {
    if (pass) {
      pass = false;
      detail << message;
    }
  }

  void note(const std::string& message) {
    if (pass && detail.tellp() == 0) detail << message;
  }
};

using CheckFn = std::function<void(Checker&)>;

struct NamedCheck {
  std::string name;
  CheckFn run;
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(12);
  ss << v;
  return ss.str();
}

// ---------------------------------------------------------------------------
// core

void check_point_loss_bounds(Checker& c) {
  Rng rng(101);
  const PointLossKind kinds[] = {
      PointLossKind::zero_one(), PointLossKind::prob01(), PointLossKind::gce(0.7),
      PointLossKind::gce(1.0), PointLossKind::cross_entropy(), PointLossKind::topk(3)};
  for (int trial = 0; trial < 500; ++trial) {
    const int num_classes = rng.uniform_int(2, 8);
    std::vector<double> raw(static_cast<std::size_t>(num_classes));
    for (double& v : raw) v = rng.uniform() + 1e-3;
    const ProbVector probs = ProbVector::from_unnormalized(std::move(raw));
    const int label = rng.uniform_int(0, num_classes - 1);
    for (const auto& kind : kinds) {
      if (kind.tag == PointLossKind::Tag::kTopK && kind.k > num_classes) continue;
      const double loss = point_loss(kind, probs, label);
      const double bound = point_loss_bound(kind);
      if (!(loss >= 0.0 && loss <= bound + 1e-12)) {
        c.fail(kind.name() + " loss " + fmt(loss) + " outside [0, " + fmt(bound) + "]");
        return;
      }
    }
  }
  c.note("500 random (probs, label) draws, six loss kinds");
}

void check_zero_one_argmax(Checker& c) {
  Rng rng(102);
  for (int trial = 0; trial < 500; ++trial) {
    const int num_classes = rng.uniform_int(2, 8);
    std::vector<double> raw(static_cast<std::size_t>(num_classes));
    for (double& v : raw) v = rng.uniform() + 1e-3;
    const ProbVector probs = ProbVector::from_unnormalized(std::move(raw));
    const int label = rng.uniform_int(0, num_classes - 1);
    const double zo = point_loss(PointLossKind::zero_one(), probs, label);
    const double expected = argmax_predict(probs) == label ? 0.0 : 1.0;
    if (zo != expected) {
      c.fail("zero-one loss disagrees with argmax at trial " + std::to_string(trial));
      return;
    }
    const double top1 = point_loss(PointLossKind::topk(1), probs, label);
    if (top1 != zo) {
      c.fail("topk(1) disagrees with zero-one at trial " + std::to_string(trial));
      return;
    }
  }
  c.note("zero-one = 1 - [argmax = label]; topk(1) agrees");
}

// ---------------------------------------------------------------------------
// ideal

void check_kl_weight_monotonic(Checker& c) {
  Rng rng(103);
  for (int trial = 0; trial < 200; ++trial) {
    const double gamma = 0.1 + rng.uniform() * 2.0;
    const double a = rng.uniform() * 3.0;
    const double b = a + 1e-3 + rng.uniform();
    if (!(kl_joint_weight(b, gamma) < kl_joint_weight(a, gamma))) {
      c.fail("weight not strictly decreasing in loss");
      return;
    }
    const double g2 = gamma + 0.5 + rng.uniform();
    const double loss = 0.1 + rng.uniform();
    if (!(kl_joint_weight(loss, g2) > kl_joint_weight(loss, gamma))) {
      c.fail("weight not strictly increasing in gamma at fixed positive loss");
      return;
    }
  }
  c.note("strict monotonicity on 200 random pairs");
}

void check_kl_weight_limits(Checker& c) {
  for (double loss : {0.0, 0.3, 1.0, 5.0}) {
    if (std::abs(kl_joint_weight(loss, 1e12) - 1.0) > 1e-9) {
      c.fail("gamma -> inf limit violated at loss " + fmt(loss));
      return;
    }
  }
  // gamma -> 0 with zero-one losses: the weight becomes the correctness
  // indicator.
  if (kl_joint_weight(0.0, 1e-9) != 1.0 || kl_joint_weight(1.0, 1e-9) != 0.0) {
    c.fail("gamma -> 0 indicator limit violated");
    return;
  }
  c.note("limits at gamma=1e12 and gamma=1e-9");
}

void check_phi_kl_matches_cor4(Checker& c) {
  Rng rng(104);
  const PhiGenerator gen = kl_generator();
  for (int trial = 0; trial < 100; ++trial) {
    const DiscreteInstance inst = random_instance(rng, 32, 5, 2.0);
    const double gamma = 0.25 + rng.uniform() * 0.75;
    std::vector<double> losses(inst.num_atoms());
    for (std::size_t i = 0; i < losses.size(); ++i) {
      losses[i] = inst.expected_model_loss(i);
    }
    const PhiRatioResult result =
        phi_ideal_ratio(losses, inst.atom_probs, gamma, gen);

    std::vector<double> closed(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i) {
      closed[i] = kl_marginal_weight(losses[i], gamma);
    }
    const NormalizedWeights normalized = normalize_weights(closed, inst.atom_probs);
    for (std::size_t i = 0; i < losses.size(); ++i) {
      if (std::abs(result.ratios[i] - normalized.normalized[i]) > 1e-8) {
        c.fail("trial " + std::to_string(trial) + " atom " + std::to_string(i) +
               ": phi ratio " + fmt(result.ratios[i]) + " vs closed form " +
               fmt(normalized.normalized[i]));
        return;
      }
    }
  }
  c.note("100 random instances, max atom count 32");
}

void check_phi_constraint(Checker& c) {
  Rng rng(105);
  for (const PhiGenerator& gen : {kl_generator(), chi_squared_generator()}) {
    for (int trial = 0; trial < 100; ++trial) {
      const DiscreteInstance inst = random_instance(rng, 24, 5, 2.0);
      const double gamma = 0.25 + rng.uniform() * 0.75;
      std::vector<double> losses(inst.num_atoms());
      for (std::size_t i = 0; i < losses.size(); ++i) {
        losses[i] = inst.expected_model_loss(i);
      }
      const PhiRatioResult result =
          phi_ideal_ratio(losses, inst.atom_probs, gamma, gen);
      double total = 0.0;
      for (std::size_t i = 0; i < losses.size(); ++i) {
        if (result.ratios[i] < 0.0) {
          c.fail(gen.name + ": negative ratio");
          return;
        }
        total += inst.atom_probs[i] * result.ratios[i];
      }
      if (std::abs(total - 1.0) > 1e-8) {
        c.fail(gen.name + ": constraint residual " + fmt(total - 1.0));
        return;
      }
    }
  }
  c.note("both shipped generators, 100 instances each");
}

void check_normalize_weights(Checker& c) {
  Rng rng(106);
  for (int trial = 0; trial < 200; ++trial) {
    const DiscreteInstance inst = random_instance(rng, 16, 4, 2.0);
    std::vector<double> raw(inst.num_atoms());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      raw[i] = inst.joint_model_weight(i, 0.5);
    }
    const NormalizedWeights result = normalize_weights(raw, inst.atom_probs);
    double mean = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      mean += inst.atom_probs[i] * result.normalized[i];
    }
    if (std::abs(mean - 1.0) > 1e-9) {
      c.fail("normalized weights average to " + fmt(mean));
      return;
    }
  }
  c.note("probability-weighted mean of normalized weights is 1");
}

void check_negative_gamma_rejected(Checker& c) {
  bool rejected = false;
  try {
    kl_joint_weight(1.0, -0.5);
  } catch (const std::invalid_argument&) {
    rejected = true;
  }
  if (!rejected) {
    c.fail("kl_joint_weight accepted gamma = -0.5");
    return;
  }
  rejected = false;
  try {
    ExperimentConfig config;
    config.gamma = -0.5;
    config.validate();
  } catch (const ConfigError&) {
    rejected = true;
  }
  if (!rejected) {
    c.fail("ExperimentConfig accepted gamma = -0.5");
    return;
  }
  c.note("negative temperature rejected at both the op and the config surface");
}

// ---------------------------------------------------------------------------
// drcpe

void check_link_roundtrip(Checker& c) {
  for (DrKind kind : {DrKind::kSquared, DrKind::kLogistic, DrKind::kLsif, DrKind::kKliep}) {
    const DrLossSpec spec = DrLossSpec::make(kind);
    for (int i = 1; i <= 99; ++i) {
      const double p = static_cast<double>(i) / 100.0;
      const double back = spec.link_inverse(spec.link(p));
      if (std::abs(back - p) > 1e-9) {
        c.fail(spec.name() + ": round trip error " + fmt(back - p) + " at p=" + fmt(p));
        return;
      }
    }
  }
  c.note("link_inverse(link(p)) = p on p in {0.01..0.99}, four families");
}

double sample_admissible_score(Rng& rng, DrKind kind) {
  switch (kind) {
    case DrKind::kSquared:
    case DrKind::kLogistic:
      return rng.normal();
    case DrKind::kKliep:
      return 0.05 + 0.95 * rng.uniform();  // keeps -log(v) >= 0
    case DrKind::kLsif:
      return 0.05 + rng.uniform() * 2.0;
  }
  return 0.0;
}

void check_jensen_ordering(Checker& c) {
  Rng rng(107);
  const DrKind kinds[] = {DrKind::kSquared, DrKind::kLogistic, DrKind::kKliep};
  for (int trial = 0; trial < 500; ++trial) {
    const DrLossSpec spec = DrLossSpec::make(kinds[trial % 3]);
    const DiscreteInstance inst = random_instance(rng, 12, 5, 1.0);
    const double gamma = 0.25 + rng.uniform() * 0.75;
    const double gamma_e = 0.25 + rng.uniform() * 0.75;
    std::vector<double> scores(inst.num_atoms());
    for (double& s : scores) s = sample_admissible_score(rng, spec.kind);
    const double marginal = marginal_drcpe_loss(spec, scores, inst, gamma, gamma_e);
    const double joint = joint_drcpe_loss_exact(spec, scores, inst, gamma, gamma_e);
    if (!(marginal <= joint + 1e-9)) {
      c.fail(spec.name() + ": marginal " + fmt(marginal) + " > joint " + fmt(joint));
      return;
    }
  }
  c.note("marginal <= joint on 500 random instances");
}

void check_gap_sandwich(Checker& c) {
  Rng rng(108);
  const DrKind kinds[] = {DrKind::kSquared, DrKind::kLogistic, DrKind::kKliep};
  for (int trial = 0; trial < 500; ++trial) {
    const DrLossSpec spec = DrLossSpec::make(kinds[trial % 3]);
    const DiscreteInstance inst = random_instance(rng, 10, 4, 1.0);
    const double gamma = 0.25 + rng.uniform() * 0.75;
    const double gamma_e = 0.25 + rng.uniform() * 0.75;
    std::vector<double> scores(inst.num_atoms());
    for (double& s : scores) s = sample_admissible_score(rng, spec.kind);
    const GapBounds bounds = gap_bounds(spec, scores, inst, gamma, gamma_e, 1.0);
    if (!(bounds.lower <= bounds.actual + 1e-9 && bounds.actual <= bounds.upper + 1e-9)) {
      c.fail(spec.name() + ": sandwich violated, lower=" + fmt(bounds.lower) +
             " actual=" + fmt(bounds.actual) + " upper=" + fmt(bounds.upper));
      return;
    }
  }
  c.note("lower <= gap <= upper on 500 random instances, B=1");
}

void check_pointwise_argmin(Checker& c) {
  Rng rng(109);
  for (int trial = 0; trial < 200; ++trial) {
    const DrKind kinds[] = {DrKind::kSquared, DrKind::kLogistic, DrKind::kLsif,
                            DrKind::kKliep};
    const DrLossSpec spec = DrLossSpec::make(kinds[trial % 4]);
    const double w = 0.05 + rng.uniform() * 2.0;
    const double we = 0.05 + rng.uniform() * 2.0;
    const double closed = pointwise_optimal_score(spec, w, we);

    // Independent check: golden-section search of the weighted risk over a
    // wide bracket around the closed form.
    const auto risk = [&](double v) {
      return w * spec.partial_pos(v) + we * spec.partial_neg(v);
    };
    double lo = spec.kind == DrKind::kLsif || spec.kind == DrKind::kKliep
                    ? closed / 16.0
                    : closed - 8.0;
    double hi = spec.kind == DrKind::kLsif || spec.kind == DrKind::kKliep
                    ? closed * 16.0 + 1.0
                    : closed + 8.0;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - phi * (hi - lo);
    double b = lo + phi * (hi - lo);
    double fa = risk(a);
    double fb = risk(b);
    for (int it = 0; it < 200; ++it) {
      if (fa < fb) {
        hi = b;
        b = a;
        fb = fa;
        a = hi - phi * (hi - lo);
        fa = risk(a);
      } else {
        lo = a;
        a = b;
        fa = fb;
        b = lo + phi * (hi - lo);
        fb = risk(b);
      }
    }
    const double numeric = 0.5 * (lo + hi);
    if (std::abs(numeric - closed) > 1e-6 * std::max(1.0, std::abs(closed))) {
      c.fail(spec.name() + ": golden section found " + fmt(numeric) +
             ", closed form " + fmt(closed));
      return;
    }
  }
  c.note("closed forms match golden-section minimizer on 200 random (W, We)");
}

void check_scale_invariance(Checker& c) {
  Rng rng(110);
  for (int trial = 0; trial < 200; ++trial) {
    const double w = 0.05 + rng.uniform() * 2.0;
    const double we = 0.05 + rng.uniform() * 2.0;
    const double scale = 0.01 + rng.uniform() * 20.0;
    const double s1 = pointwise_optimal_score(DrLossSpec::squared(), w, we);
    const double s2 = pointwise_optimal_score(DrLossSpec::squared(), scale * w, scale * we);
    if ((s1 > 0) != (s2 > 0) || (s1 < 0) != (s2 < 0)) {
      c.fail("squared: joint scaling flipped the score sign");
      return;
    }
    for (DrKind kind : {DrKind::kLsif, DrKind::kKliep}) {
      const DrLossSpec spec = DrLossSpec::make(kind);
      const double r1 = pointwise_optimal_score(spec, w, we);
      const double r2 = pointwise_optimal_score(spec, scale * w, scale * we);
      if (std::abs(r1 - r2) > 1e-9 * std::max(1.0, std::abs(r1))) {
        c.fail(spec.name() + ": optimal score changed under joint scaling");
        return;
      }
    }
  }
  c.note("decision scale invariance on 200 random weight pairs");
}

void check_gamma_zero_limits(Checker& c) {
  Rng rng(111);
  const double gamma = 1e-6;
  for (int trial = 0; trial < 300; ++trial) {
    const int num_classes = rng.uniform_int(2, 6);
    std::vector<double> raw(static_cast<std::size_t>(num_classes));
    for (double& v : raw) v = 0.05 + rng.uniform();
    const ProbVector eta = ProbVector::from_unnormalized(std::move(raw));
    const int pred_model = rng.uniform_int(0, num_classes - 1);
    const int pred_expert = rng.uniform_int(0, num_classes - 1);
    const double p_h = eta[static_cast<std::size_t>(pred_model)];
    const double p_e = eta[static_cast<std::size_t>(pred_expert)];

    // Joint weights of zero-one losses at tiny temperature.
    double w = 0.0;
    double we = 0.0;
    for (int y = 0; y < num_classes; ++y) {
      w += eta[static_cast<std::size_t>(y)] *
           kl_joint_weight(y == pred_model ? 0.0 : 1.0, gamma);
      we += eta[static_cast<std::size_t>(y)] *
            kl_joint_weight(y == pred_expert ? 0.0 : 1.0, gamma);
    }

    const struct {
      DrKind kind;
      double expected;
    } cases[] = {
        {DrKind::kSquared, (p_h - p_e) / (p_h + p_e)},
        {DrKind::kLsif, p_h / p_e},
        {DrKind::kKliep, p_h / p_e},
        {DrKind::kLogistic, std::log(p_h / p_e)},
    };
    for (const auto& t : cases) {
      const double got = pointwise_optimal_score(DrLossSpec::make(t.kind), w, we);
      if (std::abs(got - t.expected) > 1e-4 * std::max(1.0, std::abs(t.expected))) {
        c.fail(dr_kind_name(t.kind) + ": score " + fmt(got) + " vs closed form " +
               fmt(t.expected));
        return;
      }
    }
  }
  c.note("gamma=1e-6 scorers match the four closed forms, 300 draws");
}

void check_threshold_consistency(Checker& c) {
  Rng rng(112);
  for (int trial = 0; trial < 300; ++trial) {
    const int num_classes = rng.uniform_int(2, 6);
    std::vector<double> raw(static_cast<std::size_t>(num_classes));
    for (double& v : raw) v = 0.05 + rng.uniform();
    const ProbVector eta = ProbVector::from_unnormalized(std::move(raw));
    const double p_h = eta[static_cast<std::size_t>(rng.uniform_int(0, num_classes - 1))];
    const double p_e = eta[static_cast<std::size_t>(rng.uniform_int(0, num_classes - 1))];

    const double s_lsif = pointwise_optimal_score(DrLossSpec::lsif(), p_h, p_e);
    const double s_kliep = pointwise_optimal_score(DrLossSpec::kliep(), p_h, p_e);
    const double s_logistic = pointwise_optimal_score(DrLossSpec::logistic(), p_h, p_e);
    // Thresholds chosen strictly off the ratio value, where the equivalence
    // is numerically unambiguous.
    for (double tau : {0.5 * s_lsif, 1.5 * s_lsif + 0.1, 0.7, 1.3}) {
      if (!(tau > 0.0)) continue;
      const bool by_lsif = s_lsif <= tau;
      const bool by_kliep = s_kliep <= tau;
      const bool by_logistic = s_logistic <= std::log(tau);
      if (std::abs(s_lsif - tau) < 1e-12) continue;
      if (by_lsif != by_kliep || by_lsif != by_logistic) {
        c.fail("threshold decisions diverge at tau=" + fmt(tau));
        return;
      }
    }
  }
  c.note("lsif/kliep/logistic induce identical threshold decisions");
}

// ---------------------------------------------------------------------------
// rules

void check_lemma5(Checker& c) {
  Rng rng(113);
  int tested = 0;
  while (tested < 10000) {
    const DrKind kinds[] = {DrKind::kSquared, DrKind::kLogistic, DrKind::kLsif,
                            DrKind::kKliep};
    const DrLossSpec spec = DrLossSpec::make(kinds[tested % 4]);
    double s = 0.0;
    switch (spec.kind) {
      case DrKind::kSquared: s = rng.uniform(-0.999, 0.999); break;
      case DrKind::kLogistic: s = 2.0 * rng.normal(); break;
      case DrKind::kLsif:
      case DrKind::kKliep: s = std::exp(rng.normal()); break;
    }
    const double pi = rng.uniform(0.05, 0.95);
    const double tau = std::exp(rng.normal());
    const EquivPair pair = scorer_threshold_equiv(spec, s, pi, tau);
    if (pair.by_ratio != pair.by_score) {
      c.fail(spec.name() + ": ratio and score thresholds disagree at s=" + fmt(s) +
             " pi=" + fmt(pi) + " tau=" + fmt(tau));
      return;
    }
    ++tested;
  }
  c.note("10000 random (spec, s, pi, tau) tuples agree");
}

// Normalized marginal or joint weights plus normalizers for one instance.
struct InstanceWeights {
  std::vector<double> model;
  std::vector<double> expert;
  double z_model = 0.0;
  double z_expert = 0.0;
};

InstanceWeights instance_weights(const DiscreteInstance& inst, double gamma,
                                 bool joint) {
  std::vector<double> wm(inst.num_atoms());
  std::vector<double> we(inst.num_atoms());
  for (std::size_t i = 0; i < inst.num_atoms(); ++i) {
    wm[i] = joint ? inst.joint_model_weight(i, gamma)
                  : inst.marginal_model_weight(i, gamma);
    we[i] = joint ? inst.joint_expert_weight(i, gamma)
                  : inst.marginal_expert_weight(i, gamma);
  }
  const NormalizedWeights nm = normalize_weights(wm, inst.atom_probs);
  const NormalizedWeights ne = normalize_weights(we, inst.atom_probs);
  return {nm.normalized, ne.normalized, nm.z, ne.z};
}

// Candidate thresholds strictly between adjacent realized ratios, plus one
// below and one above; no atom sits on a decision boundary.
std::vector<double> midpoint_taus(const std::vector<double>& model,
                                  const std::vector<double>& expert) {
  std::vector<double> ratios(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) ratios[i] = model[i] / expert[i];
  std::sort(ratios.begin(), ratios.end());
  std::vector<double> taus;
  taus.push_back(0.5 * ratios.front());
  for (std::size_t i = 0; i + 1 < ratios.size(); ++i) {
    if (ratios[i + 1] > ratios[i] * (1.0 + 1e-9)) {
      taus.push_back(std::sqrt(ratios[i] * ratios[i + 1]));
    }
  }
  taus.push_back(2.0 * ratios.back());
  return taus;
}

void check_thm1_marginal(Checker& c) {
  Rng rng(114);
  int instances = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const DiscreteInstance inst = random_instance(rng, 20, 5, 2.0);
    for (double gamma : {0.25, 0.5, 1.0}) {
      const InstanceWeights w = instance_weights(inst, gamma, /*joint=*/false);
      for (double tau : midpoint_taus(w.model, w.expert)) {
        const double cost = gamma * std::log(tau * w.z_model / w.z_expert);
        for (std::size_t i = 0; i < inst.num_atoms(); ++i) {
          const bool by_ratio = dr_defer_from_weights(w.model[i], w.expert[i], tau);
          const bool by_chow = chow_defer(inst.posteriors[i], inst.model_losses[i],
                                          inst.expert_losses[i], cost);
          if (by_ratio != by_chow) {
            c.fail("instance " + std::to_string(trial) + " gamma " + fmt(gamma) +
                   " tau " + fmt(tau) + " atom " + std::to_string(i) +
                   ": ratio rule " + (by_ratio ? "defers" : "keeps") +
                   " but Chow " + (by_chow ? "defers" : "keeps"));
            return;
          }
        }
      }
    }
    ++instances;
  }
  c.note(std::to_string(instances) +
         " instances x {0.25,0.5,1} agree at every boundary-separated tau");
}

void check_thm1_joint(Checker& c) {
  Rng rng(115);
  for (int trial = 0; trial < 200; ++trial) {
    const DiscreteInstance inst = random_instance(rng, 20, 5, 2.0);
    for (double gamma : {0.25, 0.5, 1.0}) {
      const InstanceWeights w = instance_weights(inst, gamma, /*joint=*/true);
      for (double tau : midpoint_taus(w.model, w.expert)) {
        const double cost = gamma * std::log(tau * w.z_model / w.z_expert);
        for (std::size_t i = 0; i < inst.num_atoms(); ++i) {
          if (!dr_defer_from_weights(w.model[i], w.expert[i], tau)) continue;
          const TiltedPosterior tilted =
              tilt_posterior(inst.posteriors[i], inst.expert_losses[i], gamma);
          if (!chow_defer(tilted.entries, inst.model_losses[i],
                          inst.expert_losses[i], cost)) {
            c.fail("containment violated: instance " + std::to_string(trial) +
                   " gamma " + fmt(gamma) + " atom " + std::to_string(i));
            return;
          }
        }
      }
    }
  }
  c.note("joint deferral implies tilted-Chow deferral, 200 instances");
}

void check_tilt_identity(Checker& c) {
  Rng rng(116);
  for (int trial = 0; trial < 200; ++trial) {
    const int num_classes = rng.uniform_int(2, 6);
    std::vector<double> raw(static_cast<std::size_t>(num_classes));
    for (double& v : raw) v = 0.05 + rng.uniform();
    const ProbVector eta = ProbVector::from_unnormalized(std::move(raw));
    const double gamma = 0.1 + rng.uniform();
    const std::vector<double> constant(static_cast<std::size_t>(num_classes),
                                       rng.uniform() * 3.0);
    const TiltedPosterior tilted = tilt_posterior(eta, constant, gamma);
    double sum = 0.0;
    for (std::size_t y = 0; y < eta.size(); ++y) {
      if (std::abs(tilted.entries[y] - eta[y]) > 1e-12) {
        c.fail("constant losses changed the posterior");
        return;
      }
      sum += tilted.entries[y];
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      c.fail("tilted posterior sums to " + fmt(sum));
      return;
    }
  }
  c.note("constant-loss tilt is the identity; entries sum to 1 within 1e-12");
}

void check_threshold_rate_monotone(Checker& c) {
  Rng rng(117);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.uniform_int(3, 200);
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (double& s : scores) s = rng.normal();
    if (trial % 3 == 0) {
      // Force ties.
      for (double& s : scores) s = std::round(s * 2.0) / 2.0;
    }
    double prev = -1.0;
    for (double rate = 0.0; rate <= 1.0 + 1e-12; rate += 0.05) {
      const ThresholdResult cut = threshold_from_rate(scores, std::min(rate, 1.0));
      if (cut.realized_rate < prev - 1e-12) {
        c.fail("realized rate decreased at target " + fmt(rate));
        return;
      }
      prev = cut.realized_rate;
    }
  }
  c.note("realized deferral rate non-decreasing in target, with ties");
}

// ---------------------------------------------------------------------------
// baselines

void check_diff01_expectation(Checker& c) {
  Rng rng(118);
  for (int trial = 0; trial < 200; ++trial) {
    const int num_classes = rng.uniform_int(2, 6);
    std::vector<double> raw(static_cast<std::size_t>(num_classes));
    for (double& v : raw) v = 0.05 + rng.uniform();
    const ProbVector eta = ProbVector::from_unnormalized(std::move(raw));
    std::vector<double> mp(static_cast<std::size_t>(num_classes));
    std::vector<double> ep(static_cast<std::size_t>(num_classes));
    for (double& v : mp) v = 0.05 + rng.uniform();
    for (double& v : ep) v = 0.05 + rng.uniform();
    const ProbVector model_probs = ProbVector::from_unnormalized(std::move(mp));
    const ProbVector expert_probs = ProbVector::from_unnormalized(std::move(ep));

    double expectation = 0.0;
    for (int y = 0; y < num_classes; ++y) {
      const int target = diff01_target(model_probs, expert_probs, y);
      if (target < -1 || target > 1) {
        c.fail("diff01 target outside {-1,0,1}");
        return;
      }
      expectation += eta[static_cast<std::size_t>(y)] * target;
    }
    const double delta =
        eta[static_cast<std::size_t>(argmax_predict(model_probs))] -
        eta[static_cast<std::size_t>(argmax_predict(expert_probs))];
    if (std::abs(expectation - delta) > 1e-12) {
      c.fail("E[diff01 | x] = " + fmt(expectation) + " but p_h - p_e = " + fmt(delta));
      return;
    }
  }
  c.note("exact enumeration matches p_h(x) - p_e(x) on 200 draws");
}

void check_conf_ordering(Checker& c) {
  Rng rng(119);
  std::vector<ProbVector> probs;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> raw(5);
    for (double& v : raw) v = 0.05 + rng.uniform();
    probs.push_back(ProbVector::from_unnormalized(std::move(raw)));
  }
  std::vector<std::size_t> base_order(probs.size());
  std::vector<std::size_t> transformed_order(probs.size());
  std::vector<double> base_scores, transformed;
  for (const auto& p : probs) {
    const double s = conf_score(p);
    base_scores.push_back(s);
    transformed.push_back(std::exp(3.0 * s) - 0.5);  // strictly increasing map
  }
  std::iota(base_order.begin(), base_order.end(), 0);
  std::iota(transformed_order.begin(), transformed_order.end(), 0);
  std::stable_sort(base_order.begin(), base_order.end(),
                   [&](std::size_t a, std::size_t b) { return base_scores[a] < base_scores[b]; });
  std::stable_sort(transformed_order.begin(), transformed_order.end(),
                   [&](std::size_t a, std::size_t b) { return transformed[a] < transformed[b]; });
  if (base_order != transformed_order) {
    c.fail("confidence ordering changed under a strictly increasing transform");
    return;
  }
  c.note("argsort of confidences invariant under increasing transforms");
}

void check_twostage_direction(Checker& c) {
  Rng rng(120);
  for (int trial = 0; trial < 100; ++trial) {
    // One example where only the expert is correct: raising s must lower the
    // loss while the exponent stays inside the clamp.
    std::vector<double> probs{0.6, 0.3, 0.1};
    const std::vector<ProbVector> model_probs{ProbVector(probs)};
    const std::vector<ProbVector> expert_probs{ProbVector::one_hot(3, 1)};
    const std::vector<int> labels{1};
    const double cost = rng.uniform() * 0.9;
    const double s = rng.uniform(-2.0, 2.0);
    const double h = 1e-4;
    const std::vector<double> lo{s - h};
    const std::vector<double> hi{s + h};
    const double f_lo = twostage_exp_loss(lo, model_probs, expert_probs, labels, cost);
    const double f_hi = twostage_exp_loss(hi, model_probs, expert_probs, labels, cost);
    if (!(f_hi < f_lo)) {
      c.fail("loss did not decrease in s at s=" + fmt(s) + " cost=" + fmt(cost));
      return;
    }
  }
  c.note("expert-only-correct examples: loss strictly decreasing in s (c < 1)");
}

// ---------------------------------------------------------------------------
// synth

void check_posterior_sums(Checker& c) {
  const MixtureSpec spec = MixtureSpec::axis_layout(10, 8, 2.4, 1.2, 77);
  const Dataset data = gen_mixture(spec, 500);
  for (const auto& ex : data.examples) {
    const ProbVector eta = data.posterior(ex.features);
    double sum = 0.0;
    for (std::size_t y = 0; y < eta.size(); ++y) sum += eta[y];
    if (std::abs(sum - 1.0) > 1e-12) {
      c.fail("posterior sums to " + fmt(sum));
      return;
    }
  }
  c.note("500 sampled posteriors sum to 1 within 1e-12");
}

void check_corruption_features(Checker& c) {
  const MixtureSpec spec = MixtureSpec::axis_layout(6, 4, 2.0, 1.0, 78);
  const Dataset data = gen_mixture(spec, 400);

  const Dataset noised = apply_corruption(data, CorruptionSpec::label_noise(3), 5);
  if (noised.size() != data.size()) {
    c.fail("label noise changed the example count");
    return;
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (noised.examples[i].features != data.examples[i].features) {
      c.fail("label noise changed a feature vector");
      return;
    }
    if (data.examples[i].label >= 3 &&
        noised.examples[i].label != data.examples[i].label) {
      c.fail("label noise touched a label outside the noisy classes");
      return;
    }
  }

  // Membership corruptions must produce a sub-multiset of the original rows.
  for (const Dataset& subset :
       {apply_corruption(data, CorruptionSpec::long_tail(2, 30, 10), 6),
        apply_corruption(data, CorruptionSpec::specialist({0, 1}, 0.4), 7)}) {
    for (const auto& ex : subset.examples) {
      bool found = false;
      for (const auto& orig : data.examples) {
        if (orig.features == ex.features && orig.label == ex.label) {
          found = true;
          break;
        }
      }
      if (!found) {
        c.fail("membership corruption fabricated an example");
        return;
      }
    }
  }
  c.note("corruptions only touch labels or membership");
}

void check_synth_determinism(Checker& c) {
  const MixtureSpec spec = MixtureSpec::axis_layout(8, 6, 2.2, 1.1, 79);
  const Dataset a = gen_mixture(spec, 300);
  const Dataset b = gen_mixture(spec, 300);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.examples[i].features != b.examples[i].features ||
        a.examples[i].label != b.examples[i].label) {
      c.fail("same seed produced different draws at index " + std::to_string(i));
      return;
    }
  }
  const auto sa = three_way_split(a, {0.5, 0.25, 0.25}, 11);
  const auto sb = three_way_split(b, {0.5, 0.25, 0.25}, 11);
  for (int p = 0; p < 3; ++p) {
    if (sa[p].size() != sb[p].size()) {
      c.fail("same seed produced different split sizes");
      return;
    }
  }
  c.note("generation and splitting bit-reproducible under fixed seeds");
}

// ---------------------------------------------------------------------------
// models

// Central finite difference with a kink guard: two step sizes must agree,
// otherwise the coordinate sits on a rectifier boundary and is skipped.
std::optional<double> reliable_fd(const std::function<double(double)>& f,
                                  double x, double h) {
  const auto central = [&](double step) {
    return (f(x + step) - f(x - step)) / (2.0 * step);
  };
  const double d1 = central(h);
  const double d2 = central(0.5 * h);
  if (std::abs(d1 - d2) > 1e-6 * std::max(1.0, std::abs(d1))) return std::nullopt;
  return d2;
}

bool gradcheck_objective(Checker& c, const std::string& label,
                         const std::vector<std::vector<double>>& rows,
                         const ScalarObjective& objective, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<int> layers{static_cast<int>(rows.front().size()), 7, 5, 1};
  for (int point = 0; point < 100; ++point) {
    MlpParams params = init_mlp(layers, rng.next_u64());
    std::vector<double> flat = flatten_params(params);
    for (double& v : flat) v += 0.3 * rng.normal();
    unflatten_params(flat, params);

    const std::vector<double> grad = head_batch_grad(params, rows, objective);
    for (int probe = 0; probe < 4; ++probe) {
      const std::size_t i = static_cast<std::size_t>(rng.uniform_index(flat.size()));
      const auto f = [&](double v) {
        std::vector<double> perturbed = flat;
        perturbed[i] = v;
        MlpParams p = params;
        unflatten_params(perturbed, p);
        return head_batch_loss(p, rows, objective);
      };
      const std::optional<double> fd = reliable_fd(f, flat[i], 1e-6 * std::max(1.0, std::abs(flat[i])));
      if (!fd.has_value()) continue;
      const double tolerance = 1e-5 * std::max({1.0, std::abs(grad[i]), std::abs(*fd)});
      if (std::abs(grad[i] - *fd) > tolerance) {
        c.fail(label + ": grad[" + std::to_string(i) + "]=" + fmt(grad[i]) +
               " vs fd=" + fmt(*fd) + " at point " + std::to_string(point));
        return false;
      }
    }
  }
  return true;
}

void check_gradients(Checker& c) {
  Rng rng(121);
  const std::size_t n = 16;
  const std::size_t dim = 6;
  std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
  for (auto& row : rows) {
    for (double& v : row) v = rng.normal();
  }

  // Classifier cross-entropy over a small dataset.
  {
    Dataset data;
    data.num_classes = 3;
    for (std::size_t i = 0; i < n; ++i) {
      data.examples.push_back({rows[i], static_cast<int>(rng.uniform_index(3))});
    }
    Rng prng(122);
    const std::vector<int> layers{static_cast<int>(dim), 7, 5, 3};
    for (int point = 0; point < 100; ++point) {
      MlpParams params = init_mlp(layers, prng.next_u64());
      std::vector<double> flat = flatten_params(params);
      for (double& v : flat) v += 0.3 * prng.normal();
      unflatten_params(flat, params);
      const std::vector<double> grad = classifier_batch_grad(params, data);
      for (int probe = 0; probe < 4; ++probe) {
        const std::size_t i = static_cast<std::size_t>(prng.uniform_index(flat.size()));
        const auto f = [&](double v) {
          std::vector<double> perturbed = flat;
          perturbed[i] = v;
          MlpParams p = params;
          unflatten_params(perturbed, p);
          return classifier_batch_loss(p, data);
        };
        const std::optional<double> fd =
            reliable_fd(f, flat[i], 1e-6 * std::max(1.0, std::abs(flat[i])));
        if (!fd.has_value()) continue;
        const double tolerance = 1e-5 * std::max({1.0, std::abs(grad[i]), std::abs(*fd)});
        if (std::abs(grad[i] - *fd) > tolerance) {
          c.fail("cross-entropy: grad[" + std::to_string(i) + "]=" + fmt(grad[i]) +
                 " vs fd=" + fmt(*fd));
          return;
        }
      }
    }
  }

  // Joint density-ratio objective for all four partial-loss families.
  for (DrKind kind : {DrKind::kSquared, DrKind::kLogistic, DrKind::kLsif, DrKind::kKliep}) {
    std::vector<double> w(n), we(n);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = rng.uniform() * 1.5;
      we[i] = rng.uniform() * 1.5;
    }
    const DrCpeObjective objective(DrLossSpec::make(kind), w, we);
    if (!gradcheck_objective(c, "drcpe-" + dr_kind_name(kind), rows, objective,
                             123 + static_cast<std::uint64_t>(kind))) {
      return;
    }
  }

  // Both squared expert-comparison regressions.
  {
    std::vector<double> diff_targets(n), conf_targets(n);
    for (std::size_t i = 0; i < n; ++i) {
      diff_targets[i] = static_cast<double>(rng.uniform_int(-1, 1));
      conf_targets[i] = rng.uniform(0.1, 1.0);
    }
    const SquaredRegressionObjective diff01(diff_targets);
    if (!gradcheck_objective(c, "estimate-diff01", rows, diff01, 131)) return;
    const SquaredRegressionObjective maxprob(conf_targets);
    if (!gradcheck_objective(c, "estimate-maxprob", rows, maxprob, 132)) return;
  }

  // Two-stage exponential surrogate.
  {
    std::vector<double> model_correct(n), expert_correct(n), model_max(n);
    for (std::size_t i = 0; i < n; ++i) {
      model_correct[i] = rng.uniform() < 0.6 ? 1.0 : 0.0;
      expert_correct[i] = rng.uniform() < 0.7 ? 1.0 : 0.0;
      model_max[i] = rng.uniform(0.2, 1.0);
    }
    const TwoStageExpObjective twostage(model_correct, expert_correct, model_max, 0.1);
    if (!gradcheck_objective(c, "twostage-exp", rows, twostage, 133)) return;
  }

  c.note("8 objectives x 100 parameter points x 4 probed coordinates");
}

void check_train_determinism(Checker& c) {
  const MixtureSpec spec = MixtureSpec::axis_layout(4, 4, 2.5, 1.0, 80);
  Dataset data = gen_mixture(spec, 200);
  OptimizerConfig opt;
  opt.epochs = 5;
  opt.batch_size = 64;
  opt.learning_rate = 3e-3;
  opt.seed = 42;
  const Classifier a = train_classifier(data, {8}, opt);
  const Classifier b = train_classifier(data, {8}, opt);
  if (flatten_params(a.params) != flatten_params(b.params)) {
    c.fail("identical seed and data produced different parameters");
    return;
  }
  c.note("classifier training bitwise deterministic");
}

// ---------------------------------------------------------------------------
// harness

void check_curve_csv_roundtrip(Checker& c) {
  std::vector<DeferralCurve> curves;
  DeferralCurve curve;
  curve.method = "drcpe";
  curve.points = {{0.05, 0.051, 0.71231, 0.00412}, {0.25, 0.25, 0.769481, 0.003209}};
  curves.push_back(curve);
  curve.method = "conf";
  curve.points = {{0.05, 0.049, 0.7, 0.0}, {0.25, 0.26, 0.75, 0.0}};
  curves.push_back(curve);

  const std::string csv = curves_to_csv(curves);
  const std::vector<DeferralCurve> parsed = curves_from_csv(csv);
  if (parsed.size() != curves.size()) {
    c.fail("parsed curve count mismatch");
    return;
  }
  if (curves_to_csv(parsed) != csv) {
    c.fail("re-serialized csv differs from the original bytes");
    return;
  }
  for (std::size_t k = 0; k < curves.size(); ++k) {
    for (std::size_t p = 0; p < curves[k].points.size(); ++p) {
      if (parsed[k].points[p].accuracy != curves[k].points[p].accuracy ||
          parsed[k].points[p].realized_rate != curves[k].points[p].realized_rate) {
        c.fail("parsed values differ from in-memory curve");
        return;
      }
    }
  }
  c.note("csv -> parse -> csv is the identity on bytes and values");
}

void check_random_baseline(Checker& c) {
  const DeferralCurve curve = random_baseline_curve(0.6, 0.8, {0.0, 0.25, 1.0});
  if (curve.points[0].accuracy != 0.6 || curve.points[2].accuracy != 0.8 ||
      std::abs(curve.points[1].accuracy - 0.65) > 1e-15) {
    c.fail("interpolation endpoints or midpoint wrong");
    return;
  }
  c.note("endpoints give model/expert accuracy; midpoint interpolates");
}

std::vector<NamedCheck> all_checks() {
  return {
      {"core.point-loss-bounds", check_point_loss_bounds},
      {"core.zero-one-argmax", check_zero_one_argmax},
      {"ideal.kl-weight-monotonic", check_kl_weight_monotonic},
      {"ideal.kl-weight-limits", check_kl_weight_limits},
      {"ideal.phi-kl-matches-closed-form", check_phi_kl_matches_cor4},
      {"ideal.phi-constraint", check_phi_constraint},
      {"ideal.normalize-weights", check_normalize_weights},
      {"config.negative-gamma-rejected", check_negative_gamma_rejected},
      {"drcpe.link-roundtrip", check_link_roundtrip},
      {"drcpe.jensen-ordering", check_jensen_ordering},
      {"drcpe.gap-sandwich", check_gap_sandwich},
      {"drcpe.pointwise-argmin", check_pointwise_argmin},
      {"drcpe.scale-invariance", check_scale_invariance},
      {"drcpe.gamma-zero-limits", check_gamma_zero_limits},
      {"drcpe.threshold-consistency", check_threshold_consistency},
      {"rules.lemma5-equivalence", check_lemma5},
      {"rules.marginal-chow-equivalence", check_thm1_marginal},
      {"rules.joint-tilted-containment", check_thm1_joint},
      {"rules.tilt-identity", check_tilt_identity},
      {"rules.threshold-rate-monotone", check_threshold_rate_monotone},
      {"baselines.diff01-expectation", check_diff01_expectation},
      {"baselines.conf-ordering-invariance", check_conf_ordering},
      {"baselines.twostage-direction", check_twostage_direction},
      {"synth.posterior-sums-to-one", check_posterior_sums},
      {"synth.corruption-feature-safety", check_corruption_features},
      {"synth.seed-reproducibility", check_synth_determinism},
      {"models.gradcheck", check_gradients},
      {"models.train-determinism", check_train_determinism},
      {"harness.curve-csv-roundtrip", check_curve_csv_roundtrip},
      {"harness.random-baseline", check_random_baseline},
  };
}

}  // namespace

bool VerifyReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& r) { return r.pass; });
}

std::string VerifyReport::to_json() const {
  nlohmann::json doc;
  doc["all_pass"] = all_pass();
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& check : checks) {
    entries.push_back({{"name", check.name}, {"pass", check.pass}, {"detail", check.detail}});
  }
  doc["checks"] = std::move(entries);
  return doc.dump(2);
}

std::vector<std::string> verify_check_names() {
  std::vector<std::string> names;
  for (const auto& check : all_checks()) names.push_back(check.name);
  return names;
}

VerifyReport run_verify(const std::string& selector) {
  VerifyReport report;
  for (const auto& check : all_checks()) {
    if (selector != "all" && check.name.find(selector) == std::string::npos) {
      continue;
    }
    CheckResult result;
    result.name = check.name;
    Checker checker;
    try {
      check.run(checker);
      result.pass = checker.pass;
      result.detail = checker.detail.str();
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail = std::string("unexpected exception: ") + e.what();
    }
    report.checks.push_back(std::move(result));
  }
  return report;
}

}  // namespace l2d
