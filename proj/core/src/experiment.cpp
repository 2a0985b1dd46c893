#include "l2d/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "l2d/checkpoint.hpp"
#include "l2d/ideal.hpp"
#include "l2d/rng.hpp"
#include "l2d/rules.hpp"
#include "l2d/svg.hpp"

namespace l2d {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seed stream ids for the pipeline stages.
constexpr std::uint64_t kStreamData = 1;
constexpr std::uint64_t kStreamSplit = 2;
constexpr std::uint64_t kStreamBaseCorruption = 3;
constexpr std::uint64_t kStreamExpertCorruption = 4;
constexpr std::uint64_t kStreamBaseTrain = 5;
constexpr std::uint64_t kStreamExpertTrain = 6;
constexpr std::uint64_t kStreamHeads = 0x100;

std::uint64_t head_seed(const ExperimentConfig& config, int seed_index,
                        int method_slot, int variant) {
  return mix_seed(config.seed, kStreamHeads +
                                   static_cast<std::uint64_t>(seed_index) * 64 +
                                   static_cast<std::uint64_t>(method_slot) * 8 +
                                   static_cast<std::uint64_t>(variant));
}

double snap6(double v) { return std::round(v * 1e6) / 1e6; }

json corruption_to_json(const CorruptionSpec& spec) {
  json doc;
  doc["kind"] = spec.name();
  switch (spec.kind) {
    case CorruptionSpec::Kind::kLabelNoise:
      doc["k"] = spec.noisy_classes;
      break;
    case CorruptionSpec::Kind::kLongTail:
      doc["head_count"] = spec.head_count;
      doc["n_head"] = spec.n_head;
      doc["n_tail"] = spec.n_tail;
      break;
    case CorruptionSpec::Kind::kSpecialist:
      doc["classes"] = spec.specialist_classes;
      doc["p"] = spec.keep_prob;
      break;
  }
  return doc;
}

CorruptionSpec corruption_from_json(const json& doc) {
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "label-noise") {
    return CorruptionSpec::label_noise(doc.at("k").get<int>());
  }
  if (kind == "long-tail") {
    return CorruptionSpec::long_tail(doc.at("head_count").get<int>(),
                                     doc.at("n_head").get<int>(),
                                     doc.at("n_tail").get<int>());
  }
  if (kind == "specialist") {
    return CorruptionSpec::specialist(doc.at("classes").get<std::vector<int>>(),
                                      doc.at("p").get<double>());
  }
  throw ConfigError("unknown corruption kind '" + kind + "'");
}

json net_to_json(const NetConfig& net) {
  json doc;
  doc["hidden"] = net.hidden;
  doc["epochs"] = net.epochs;
  doc["batch_size"] = net.batch_size;
  doc["learning_rate"] = net.learning_rate;
  doc["weight_decay"] = net.weight_decay;
  return doc;
}

NetConfig net_from_json(const json& doc, NetConfig defaults) {
  NetConfig net = defaults;
  if (doc.contains("hidden")) net.hidden = doc.at("hidden").get<std::vector<int>>();
  if (doc.contains("epochs")) net.epochs = doc.at("epochs").get<int>();
  if (doc.contains("batch_size")) net.batch_size = doc.at("batch_size").get<int>();
  if (doc.contains("learning_rate")) net.learning_rate = doc.at("learning_rate").get<double>();
  if (doc.contains("weight_decay")) net.weight_decay = doc.at("weight_decay").get<double>();
  return net;
}

// Frozen per-split predictions of the trained pair, plus the deferral
// feature rows derived from the model's probabilities.
struct FrozenSplit {
  std::vector<ProbVector> model_probs;
  std::vector<ProbVector> expert_probs;
  std::vector<int> model_preds;
  std::vector<int> expert_preds;
  std::vector<int> labels;
  std::vector<ProbVector> posteriors;  // empty when no analytic posterior
  std::vector<std::vector<double>> features;
};

FrozenSplit freeze_split(const Classifier& base, const Classifier& expert,
                         const Dataset& split) {
  FrozenSplit out;
  out.model_probs.reserve(split.size());
  out.expert_probs.reserve(split.size());
  for (const auto& ex : split.examples) {
    ProbVector mp = base.predict_proba(ex.features);
    ProbVector ep = expert.predict_proba(ex.features);
    out.model_preds.push_back(argmax_predict(mp));
    out.expert_preds.push_back(argmax_predict(ep));
    out.features.push_back(deferral_features(mp));
    out.model_probs.push_back(std::move(mp));
    out.expert_probs.push_back(std::move(ep));
    out.labels.push_back(ex.label);
    if (split.has_posterior()) out.posteriors.push_back(split.posterior(ex.features));
  }
  return out;
}

double split_accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

struct SeedHeads {
  std::optional<DeferralScorer> drcpe;
  std::optional<MlpParams> diff01;
  std::optional<MlpParams> maxprob;
  std::vector<MlpParams> twostage;  // aligned with config.twostage_costs
};

bool wants(const ExperimentConfig& config, const char* method) {
  return std::find(config.method_names.begin(), config.method_names.end(),
                   method) != config.method_names.end();
}

std::vector<double> head_outputs(const MlpParams& head,
                                 const std::vector<std::vector<double>>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(mlp_forward(head, row)[0]);
  return out;
}

// Per-method defer scores; every method defers when score <= tau.
std::vector<double> conf_scores(const FrozenSplit& split) {
  std::vector<double> out;
  out.reserve(split.model_probs.size());
  for (const auto& p : split.model_probs) out.push_back(conf_score(p));
  return out;
}

std::vector<double> drcpe_scores(const DeferralScorer& scorer,
                                 const FrozenSplit& split) {
  std::vector<double> out;
  out.reserve(split.features.size());
  for (const auto& row : split.features) out.push_back(scorer.score_from_features(row));
  return out;
}

std::vector<double> maxprob_scores(const MlpParams& head, const FrozenSplit& split) {
  std::vector<double> out = head_outputs(head, split.features);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = maxprob_decision(split.model_probs[i], out[i]);
  }
  return out;
}

std::vector<double> twostage_scores(const MlpParams& head, const FrozenSplit& split) {
  // The surrogate defers when s exceeds the model confidence by tau;
  // conf - s keeps the shared defer-when-small orientation.
  std::vector<double> out = head_outputs(head, split.features);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = conf_score(split.model_probs[i]) - out[i];
  }
  return out;
}

std::vector<double> chow_oracle_scores(const PointLossKind& weight_loss,
                                       const FrozenSplit& split) {
  // Chow's rule under the true posterior for the experiment's weight loss:
  // the expected expert-minus-model loss, thresholded small-first.
  std::vector<double> out;
  out.reserve(split.posteriors.size());
  for (std::size_t i = 0; i < split.posteriors.size(); ++i) {
    out.push_back(chow_statistic(split.posteriors[i],
                                 per_label_losses(weight_loss, split.model_probs[i]),
                                 per_label_losses(weight_loss, split.expert_probs[i])));
  }
  return out;
}

DeferralCurve curve_from_scores(const std::string& method,
                                const std::vector<double>& calib_scores,
                                const std::vector<double>& test_scores,
                                const FrozenSplit& test,
                                const std::vector<double>& rates,
                                std::uint64_t seed) {
  DeferralCurve curve;
  curve.method = method;
  curve.seed = seed;
  for (double rate : rates) {
    const ThresholdResult cut = threshold_from_rate(calib_scores, rate);
    std::vector<bool> mask(test_scores.size());
    std::size_t deferred = 0;
    for (std::size_t i = 0; i < test_scores.size(); ++i) {
      mask[i] = test_scores[i] <= cut.tau;
      if (mask[i]) ++deferred;
    }
    CurvePoint point;
    point.target_rate = rate;
    point.realized_rate =
        static_cast<double>(deferred) / static_cast<double>(test_scores.size());
    point.accuracy =
        system_accuracy(test.model_preds, test.expert_preds, mask, test.labels);
    curve.points.push_back(point);
  }
  return curve;
}

DeferralCurve aggregate_curves(const std::string& method,
                               const std::vector<DeferralCurve>& per_seed,
                               std::uint64_t seed) {
  DeferralCurve out;
  out.method = method;
  out.seed = seed;
  const std::size_t num_points = per_seed.front().points.size();
  const double n = static_cast<double>(per_seed.size());
  for (std::size_t p = 0; p < num_points; ++p) {
    CurvePoint point;
    point.target_rate = per_seed.front().points[p].target_rate;
    double mean_realized = 0.0;
    double mean_acc = 0.0;
    for (const auto& curve : per_seed) {
      mean_realized += curve.points[p].realized_rate;
      mean_acc += curve.points[p].accuracy;
    }
    mean_realized /= n;
    mean_acc /= n;
    double var = 0.0;
    for (const auto& curve : per_seed) {
      const double d = curve.points[p].accuracy - mean_acc;
      var += d * d;
    }
    const double std_acc = per_seed.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    point.realized_rate = snap6(mean_realized);
    point.accuracy = snap6(mean_acc);
    point.std_accuracy = snap6(std_acc);
    out.points.push_back(point);
  }
  return out;
}

// Directory layout shared by the staged CLI and run_experiment.
struct Paths {
  fs::path root;
  explicit Paths(const std::string& dir) : root(dir) {}
  fs::path config() const { return root / "config.json"; }
  fs::path data_dir() const { return root / "data"; }
  fs::path split(const char* name) const {
    return data_dir() / (std::string(name) + ".jsonl");
  }
  fs::path models_dir() const { return root / "models"; }
  fs::path base_model() const { return models_dir() / "base.json"; }
  fs::path expert_model() const { return models_dir() / "expert.json"; }
  fs::path scorers_dir(int seed_index) const {
    return root / "scorers" / ("seed" + std::to_string(seed_index));
  }
  fs::path seed_curves(int seed_index) const {
    return root / "seeds" / ("seed" + std::to_string(seed_index)) / "curves.csv";
  }
  fs::path curves_csv() const { return root / "curves.csv"; }
  fs::path curves_json() const { return root / "curves.json"; }
  fs::path plot_svg() const { return root / "plot.svg"; }
  fs::path failed_marker() const { return root / "FAILED"; }
};

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Pipeline {
  ExperimentConfig config;
  Dataset base_train;   // clean base-train split
  Dataset defer_train;  // clean deferral split
  Dataset test;
  Classifier base;
  Classifier expert;
  std::vector<SeedHeads> heads;  // one per seed

  void generate_data();
  void train_models();
  void train_heads();
  ExperimentResult evaluate() const;
};

void Pipeline::generate_data() {
  MixtureSpec mixture = config.mixture();
  mixture.seed = mix_seed(config.seed, kStreamData);
  Dataset full = gen_mixture(mixture, config.n_samples);
  auto parts = three_way_split(full, config.split_fractions,
                               mix_seed(config.seed, kStreamSplit));
  base_train = std::move(parts[0]);
  defer_train = std::move(parts[1]);
  test = std::move(parts[2]);
}

void Pipeline::train_models() {
  Dataset base_view = base_train;
  if (config.base_corruption.has_value()) {
    base_view = apply_corruption(base_train, *config.base_corruption,
                                 mix_seed(config.seed, kStreamBaseCorruption));
  }
  Dataset expert_view = base_train;
  if (config.expert_corruption.has_value()) {
    expert_view = apply_corruption(base_train, *config.expert_corruption,
                                   mix_seed(config.seed, kStreamExpertCorruption));
  }
  base = train_classifier(base_view, config.base_model.hidden,
                          config.base_model.optimizer(mix_seed(config.seed, kStreamBaseTrain)));
  expert = train_classifier(expert_view, config.expert_model.hidden,
                            config.expert_model.optimizer(
                                mix_seed(config.seed, kStreamExpertTrain)));
}

void Pipeline::train_heads() {
  const FrozenSplit frozen = freeze_split(base, expert, defer_train);
  const DrLossSpec spec = DrLossSpec::make(config.dr_loss);

  heads.clear();
  heads.resize(static_cast<std::size_t>(config.num_seeds));
  for (int k = 0; k < config.num_seeds; ++k) {
    SeedHeads& slot = heads[static_cast<std::size_t>(k)];
    if (wants(config, methods::kDrcpe)) {
      slot.drcpe = train_deferral_scorer(
          defer_train, base, expert, spec, config.weight_loss, config.gamma,
          config.gamma_expert,
          config.deferral_head.optimizer(head_seed(config, k, 0, 0)));
    }
    if (wants(config, methods::kEstimateDiff01)) {
      std::vector<double> targets;
      targets.reserve(frozen.labels.size());
      for (std::size_t i = 0; i < frozen.labels.size(); ++i) {
        targets.push_back(static_cast<double>(diff01_target(
            frozen.model_probs[i], frozen.expert_probs[i], frozen.labels[i])));
      }
      const SquaredRegressionObjective objective(std::move(targets));
      slot.diff01 = train_scalar_head(
                        frozen.features, objective, config.deferral_head.hidden,
                        config.deferral_head.optimizer(head_seed(config, k, 1, 0)))
                        .params;
    }
    if (wants(config, methods::kEstimateMaxProb)) {
      std::vector<double> targets;
      targets.reserve(frozen.labels.size());
      for (const auto& ep : frozen.expert_probs) targets.push_back(conf_score(ep));
      const SquaredRegressionObjective objective(std::move(targets));
      slot.maxprob = train_scalar_head(
                         frozen.features, objective, config.deferral_head.hidden,
                         config.deferral_head.optimizer(head_seed(config, k, 2, 0)))
                         .params;
    }
    if (wants(config, methods::kTwoStageExp)) {
      std::vector<double> model_correct, expert_correct, model_max;
      for (std::size_t i = 0; i < frozen.labels.size(); ++i) {
        model_correct.push_back(frozen.model_preds[i] == frozen.labels[i] ? 1.0 : 0.0);
        expert_correct.push_back(frozen.expert_preds[i] == frozen.labels[i] ? 1.0 : 0.0);
        model_max.push_back(conf_score(frozen.model_probs[i]));
      }
      for (std::size_t c = 0; c < config.twostage_costs.size(); ++c) {
        const TwoStageExpObjective objective(model_correct, expert_correct,
                                             model_max, config.twostage_costs[c]);
        slot.twostage.push_back(
            train_scalar_head(frozen.features, objective,
                              config.deferral_head.hidden,
                              config.deferral_head.optimizer(head_seed(
                                  config, k, 3, static_cast<int>(c))))
                .params);
      }
    }
  }
}

ExperimentResult Pipeline::evaluate() const {
  const FrozenSplit calib = freeze_split(base, expert, defer_train);
  const FrozenSplit eval = freeze_split(base, expert, test);

  ExperimentResult result;
  result.model_accuracy = split_accuracy(eval.model_preds, eval.labels);
  result.expert_accuracy = split_accuracy(eval.expert_preds, eval.labels);

  if ((wants(config, methods::kChowOracle)) && eval.posteriors.empty()) {
    throw ConfigError("chow-oracle requires a dataset with an analytic posterior");
  }

  for (const std::string& method : config.method_names) {
    std::vector<DeferralCurve> per_seed;
    for (int k = 0; k < config.num_seeds; ++k) {
      const SeedHeads& slot = heads[static_cast<std::size_t>(k)];
      const std::uint64_t curve_seed = mix_seed(config.seed, 0x9000 + k);
      if (method == methods::kDrcpe) {
        per_seed.push_back(curve_from_scores(
            method, drcpe_scores(*slot.drcpe, calib),
            drcpe_scores(*slot.drcpe, eval), eval, config.target_rates, curve_seed));
      } else if (method == methods::kConf) {
        per_seed.push_back(curve_from_scores(method, conf_scores(calib),
                                             conf_scores(eval), eval,
                                             config.target_rates, curve_seed));
      } else if (method == methods::kEstimateDiff01) {
        per_seed.push_back(curve_from_scores(
            method, head_outputs(*slot.diff01, calib.features),
            head_outputs(*slot.diff01, eval.features), eval, config.target_rates,
            curve_seed));
      } else if (method == methods::kEstimateMaxProb) {
        per_seed.push_back(curve_from_scores(
            method, maxprob_scores(*slot.maxprob, calib),
            maxprob_scores(*slot.maxprob, eval), eval, config.target_rates,
            curve_seed));
      } else if (method == methods::kTwoStageExp) {
        // Best curve over the cost sweep, ranked by mean accuracy.
        DeferralCurve best;
        double best_mean = -1.0;
        for (const MlpParams& head : slot.twostage) {
          DeferralCurve candidate = curve_from_scores(
              method, twostage_scores(head, calib), twostage_scores(head, eval),
              eval, config.target_rates, curve_seed);
          double mean = 0.0;
          for (const auto& pt : candidate.points) mean += pt.accuracy;
          if (mean > best_mean) {
            best_mean = mean;
            best = std::move(candidate);
          }
        }
        per_seed.push_back(std::move(best));
      } else if (method == methods::kChowOracle) {
        per_seed.push_back(curve_from_scores(
            method, chow_oracle_scores(config.weight_loss, calib),
            chow_oracle_scores(config.weight_loss, eval), eval,
            config.target_rates, curve_seed));
      } else if (method == methods::kRandom) {
        DeferralCurve curve = random_baseline_curve(
            result.model_accuracy, result.expert_accuracy, config.target_rates);
        curve.seed = curve_seed;
        per_seed.push_back(std::move(curve));
      } else {
        throw ConfigError("unknown method '" + method + "'");
      }
    }
    result.per_seed[method] = per_seed;
    result.curves.push_back(aggregate_curves(method, per_seed, config.seed));
  }
  for (const auto& curve : result.curves) curve.validate();
  return result;
}

void persist_data(const Pipeline& pipe, const Paths& paths) {
  ExperimentConfig stored = pipe.config;
  stored.out_dir.clear();
  write_text(paths.config(), stored.to_json());
  fs::create_directories(paths.data_dir());
  write_jsonl(pipe.base_train, paths.split("base_train").string());
  write_jsonl(pipe.defer_train, paths.split("deferral_train").string());
  write_jsonl(pipe.test, paths.split("test").string());
}

void persist_models(const Pipeline& pipe, const Paths& paths) {
  fs::create_directories(paths.models_dir());
  save_classifier(pipe.base, paths.base_model().string());
  save_classifier(pipe.expert, paths.expert_model().string());
}

void persist_heads(const Pipeline& pipe, const Paths& paths) {
  for (int k = 0; k < pipe.config.num_seeds; ++k) {
    const SeedHeads& slot = pipe.heads[static_cast<std::size_t>(k)];
    const fs::path dir = paths.scorers_dir(k);
    fs::create_directories(dir);
    if (slot.drcpe.has_value()) {
      save_scorer(*slot.drcpe, (dir / "drcpe.json").string());
    }
    if (slot.diff01.has_value()) {
      save_head(*slot.diff01, (dir / "estimate-diff01.json").string());
    }
    if (slot.maxprob.has_value()) {
      save_head(*slot.maxprob, (dir / "estimate-maxprob.json").string());
    }
    for (std::size_t c = 0; c < slot.twostage.size(); ++c) {
      save_head(slot.twostage[c],
                (dir / ("twostage-exp_" + std::to_string(c) + ".json")).string());
    }
  }
}

void persist_results(const Pipeline& pipe, const ExperimentResult& result,
                     const Paths& paths) {
  for (int k = 0; k < pipe.config.num_seeds; ++k) {
    std::vector<DeferralCurve> seed_curves;
    for (const std::string& method : pipe.config.method_names) {
      DeferralCurve curve = result.per_seed.at(method)[static_cast<std::size_t>(k)];
      for (auto& pt : curve.points) {
        pt.realized_rate = snap6(pt.realized_rate);
        pt.accuracy = snap6(pt.accuracy);
        pt.std_accuracy = 0.0;
      }
      seed_curves.push_back(std::move(curve));
    }
    write_text(paths.seed_curves(k), curves_to_csv(seed_curves));
  }
  write_curves_csv(result.curves, paths.curves_csv().string());

  json doc;
  doc["model_accuracy"] = result.model_accuracy;
  doc["expert_accuracy"] = result.expert_accuracy;
  json curves = json::array();
  for (const auto& curve : result.curves) {
    json c;
    c["method"] = curve.method;
    c["seed"] = curve.seed;
    json pts = json::array();
    for (const auto& pt : curve.points) {
      pts.push_back({{"target_rate", pt.target_rate},
                     {"realized_rate", pt.realized_rate},
                     {"accuracy", pt.accuracy},
                     {"std", pt.std_accuracy}});
    }
    c["points"] = std::move(pts);
    curves.push_back(std::move(c));
  }
  doc["curves"] = std::move(curves);
  write_text(paths.curves_json(), doc.dump(2));

  if (pipe.config.emit_svg) {
    std::vector<SvgSeries> series;
    for (const auto& curve : result.curves) {
      SvgSeries s;
      s.label = curve.method;
      for (const auto& pt : curve.points) {
        s.x.push_back(pt.target_rate);
        s.y.push_back(pt.accuracy);
        s.y_err.push_back(pt.std_accuracy);
      }
      series.push_back(std::move(s));
    }
    write_line_chart(paths.plot_svg().string(), "accuracy-deferral trade-off",
                     "target deferral rate", "system accuracy", series);
  }
}

Pipeline load_pipeline_data(const std::string& dir) {
  const Paths paths(dir);
  Pipeline pipe;
  pipe.config = ExperimentConfig::from_json(read_text(paths.config()));
  pipe.config.out_dir = dir;
  const PosteriorFn posterior = mixture_posterior(pipe.config.mixture());
  pipe.base_train = read_jsonl(paths.split("base_train").string(),
                               Split::kBaseTrain, pipe.config.num_classes);
  pipe.defer_train = read_jsonl(paths.split("deferral_train").string(),
                                Split::kDeferralTrain, pipe.config.num_classes);
  pipe.test = read_jsonl(paths.split("test").string(), Split::kTest,
                         pipe.config.num_classes);
  pipe.base_train.posterior = posterior;
  pipe.defer_train.posterior = posterior;
  pipe.test.posterior = posterior;
  return pipe;
}

void load_models(Pipeline& pipe, const Paths& paths) {
  pipe.base = load_classifier(paths.base_model().string());
  pipe.expert = load_classifier(paths.expert_model().string());
}

void load_heads(Pipeline& pipe, const Paths& paths) {
  pipe.heads.clear();
  pipe.heads.resize(static_cast<std::size_t>(pipe.config.num_seeds));
  for (int k = 0; k < pipe.config.num_seeds; ++k) {
    SeedHeads& slot = pipe.heads[static_cast<std::size_t>(k)];
    const fs::path dir = paths.scorers_dir(k);
    if (wants(pipe.config, methods::kDrcpe)) {
      slot.drcpe = load_scorer((dir / "drcpe.json").string());
    }
    if (wants(pipe.config, methods::kEstimateDiff01)) {
      slot.diff01 = load_head((dir / "estimate-diff01.json").string());
    }
    if (wants(pipe.config, methods::kEstimateMaxProb)) {
      slot.maxprob = load_head((dir / "estimate-maxprob.json").string());
    }
    if (wants(pipe.config, methods::kTwoStageExp)) {
      for (std::size_t c = 0; c < pipe.config.twostage_costs.size(); ++c) {
        slot.twostage.push_back(load_head(
            (dir / ("twostage-exp_" + std::to_string(c) + ".json")).string()));
      }
    }
  }
}

}  // namespace

OptimizerConfig NetConfig::optimizer(std::uint64_t seed) const {
  OptimizerConfig opt;
  opt.learning_rate = learning_rate;
  opt.weight_decay = weight_decay;
  opt.epochs = epochs;
  opt.batch_size = batch_size;
  opt.seed = seed;
  return opt;
}

MixtureSpec ExperimentConfig::mixture() const {
  MixtureSpec spec = MixtureSpec::axis_layout(num_classes, dim, mean_scale, sigma,
                                              mix_seed(seed, kStreamData));
  return spec;
}

void ExperimentConfig::validate() const {
  if (num_classes < 2) throw ConfigError("config: num_classes must be >= 2");
  if (dim < 1) throw ConfigError("config: dim must be >= 1");
  if (!(sigma > 0.0)) throw ConfigError("config: sigma must be > 0");
  if (n_samples < 10) throw ConfigError("config: n_samples too small");
  if (!(gamma > 0.0) || !(gamma_expert > 0.0)) {
    throw ConfigError("config: temperatures must be > 0");
  }
  try {
    weight_loss.validate(num_classes);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (method_names.empty()) throw ConfigError("config: need at least one method");
  for (const std::string& method : method_names) {
    static const char* known[] = {
        methods::kDrcpe,           methods::kConf,        methods::kEstimateDiff01,
        methods::kEstimateMaxProb, methods::kTwoStageExp, methods::kChowOracle,
        methods::kRandom};
    if (std::find_if(std::begin(known), std::end(known), [&](const char* name) {
          return method == name;
        }) == std::end(known)) {
      throw ConfigError("config: unknown method '" + method + "'");
    }
  }
  if (target_rates.empty()) throw ConfigError("config: need at least one target rate");
  for (std::size_t i = 0; i < target_rates.size(); ++i) {
    if (!(target_rates[i] >= 0.0 && target_rates[i] <= 1.0)) {
      throw ConfigError("config: target rates must lie in [0,1]");
    }
    if (i > 0 && target_rates[i] < target_rates[i - 1]) {
      throw ConfigError("config: target rates must be sorted ascending");
    }
  }
  if (num_seeds < 1) throw ConfigError("config: num_seeds must be >= 1");
  for (const auto& corruption : {base_corruption, expert_corruption}) {
    if (corruption.has_value()) {
      try {
        corruption->validate(num_classes);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
      }
    }
  }
  double frac_sum = 0.0;
  for (double f : split_fractions) {
    if (!(f > 0.0)) throw ConfigError("config: split fractions must be > 0");
    frac_sum += f;
  }
  if (std::abs(frac_sum - 1.0) > 1e-9) {
    throw ConfigError("config: split fractions must sum to 1");
  }
}

std::string ExperimentConfig::to_json() const {
  json doc;
  doc["num_classes"] = num_classes;
  doc["dim"] = dim;
  doc["sigma"] = sigma;
  doc["mean_scale"] = mean_scale;
  doc["n_samples"] = n_samples;
  doc["split_fractions"] = split_fractions;
  if (base_corruption.has_value()) {
    doc["base_corruption"] = corruption_to_json(*base_corruption);
  }
  if (expert_corruption.has_value()) {
    doc["expert_corruption"] = corruption_to_json(*expert_corruption);
  }
  doc["weight_loss"] = {{"kind", weight_loss.name()},
                        {"q", weight_loss.q},
                        {"k", weight_loss.k}};
  doc["gamma"] = gamma;
  doc["gamma_expert"] = gamma_expert;
  doc["dr_loss"] = dr_kind_name(dr_loss);
  doc["methods"] = method_names;
  doc["target_rates"] = target_rates;
  doc["twostage_costs"] = twostage_costs;
  doc["num_seeds"] = num_seeds;
  doc["seed"] = seed;
  doc["base_model"] = net_to_json(base_model);
  doc["expert_model"] = net_to_json(expert_model);
  doc["deferral_head"] = net_to_json(deferral_head);
  doc["emit_svg"] = emit_svg;
  return doc.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig config;
  try {
    if (doc.contains("num_classes")) config.num_classes = doc["num_classes"].get<int>();
    if (doc.contains("dim")) config.dim = doc["dim"].get<int>();
    if (doc.contains("sigma")) config.sigma = doc["sigma"].get<double>();
    if (doc.contains("mean_scale")) config.mean_scale = doc["mean_scale"].get<double>();
    if (doc.contains("n_samples")) config.n_samples = doc["n_samples"].get<std::size_t>();
    if (doc.contains("split_fractions")) {
      config.split_fractions = doc["split_fractions"].get<std::array<double, 3>>();
    }
    if (doc.contains("base_corruption")) {
      config.base_corruption = corruption_from_json(doc["base_corruption"]);
    }
    if (doc.contains("expert_corruption")) {
      config.expert_corruption = corruption_from_json(doc["expert_corruption"]);
    }
    if (doc.contains("weight_loss")) {
      const auto& wl = doc["weight_loss"];
      config.weight_loss = PointLossKind::parse(
          wl.at("kind").get<std::string>(),
          wl.contains("q") ? wl["q"].get<double>() : 0.7,
          wl.contains("k") ? wl["k"].get<int>() : 1);
    }
    if (doc.contains("gamma")) config.gamma = doc["gamma"].get<double>();
    if (doc.contains("gamma_expert")) {
      config.gamma_expert = doc["gamma_expert"].get<double>();
    }
    if (doc.contains("dr_loss")) {
      config.dr_loss = parse_dr_kind(doc["dr_loss"].get<std::string>());
    }
    if (doc.contains("methods")) {
      config.method_names = doc["methods"].get<std::vector<std::string>>();
    }
    if (doc.contains("target_rates")) {
      config.target_rates = doc["target_rates"].get<std::vector<double>>();
    }
    if (doc.contains("twostage_costs")) {
      config.twostage_costs = doc["twostage_costs"].get<std::vector<double>>();
    }
    if (doc.contains("num_seeds")) config.num_seeds = doc["num_seeds"].get<int>();
    if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("base_model")) {
      config.base_model = net_from_json(doc["base_model"], config.base_model);
    }
    if (doc.contains("expert_model")) {
      config.expert_model = net_from_json(doc["expert_model"], config.expert_model);
    }
    if (doc.contains("deferral_head")) {
      config.deferral_head = net_from_json(doc["deferral_head"], config.deferral_head);
    }
    if (doc.contains("emit_svg")) config.emit_svg = doc["emit_svg"].get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  config.validate();
  return config;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << to_json();
}

ExperimentConfig ExperimentConfig::default_config() {
  ExperimentConfig config;
  config.base_corruption = CorruptionSpec::label_noise(2);
  return config;
}

ExperimentConfig ExperimentConfig::specialist_config() {
  ExperimentConfig config;
  config.expert_corruption = CorruptionSpec::specialist({0, 1, 2, 3, 4}, 0.10);
  config.base_corruption = CorruptionSpec::specialist({5, 6, 7, 8, 9}, 0.10);
  return config;
}

void DeferralCurve::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].accuracy >= 0.0 && points[i].accuracy <= 1.0)) {
      throw std::invalid_argument("DeferralCurve: accuracy outside [0,1]");
    }
    if (i > 0 && points[i].realized_rate < points[i - 1].realized_rate - 1e-12) {
      throw std::invalid_argument("DeferralCurve: realized rate decreased");
    }
  }
}

double system_accuracy(const std::vector<int>& model_predictions,
                       const std::vector<int>& expert_predictions,
                       const std::vector<bool>& defer_mask,
                       const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  if (model_predictions.size() != n || expert_predictions.size() != n ||
      defer_mask.size() != n) {
    throw std::invalid_argument("system_accuracy: length mismatch");
  }
  if (n == 0) throw std::invalid_argument("system_accuracy: empty test set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int pred = defer_mask[i] ? expert_predictions[i] : model_predictions[i];
    if (pred == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

double system_accuracy(const Classifier& model, const Classifier& expert,
                       const std::vector<bool>& defer_mask, const Dataset& test) {
  std::vector<int> model_preds, expert_preds, labels;
  for (const auto& ex : test.examples) {
    model_preds.push_back(model.predict(ex.features));
    expert_preds.push_back(expert.predict(ex.features));
    labels.push_back(ex.label);
  }
  return system_accuracy(model_preds, expert_preds, defer_mask, labels);
}

DeferralCurve random_baseline_curve(double model_accuracy, double expert_accuracy,
                                    const std::vector<double>& rates) {
  if (!(model_accuracy >= 0.0 && model_accuracy <= 1.0) ||
      !(expert_accuracy >= 0.0 && expert_accuracy <= 1.0)) {
    throw std::invalid_argument("random_baseline_curve: accuracies must lie in [0,1]");
  }
  DeferralCurve curve;
  curve.method = methods::kRandom;
  for (double r : rates) {
    CurvePoint point;
    point.target_rate = r;
    point.realized_rate = r;
    point.accuracy = (1.0 - r) * model_accuracy + r * expert_accuracy;
    curve.points.push_back(point);
  }
  return curve;
}

const DeferralCurve& ExperimentResult::curve(const std::string& method) const {
  for (const auto& c : curves) {
    if (c.method == method) return c;
  }
  throw std::out_of_range("no curve for method '" + method + "'");
}

std::string curves_to_csv(const std::vector<DeferralCurve>& curves) {
  std::ostringstream out;
  out << "method,target_rate,realized_rate,accuracy,std\n";
  char buf[160];
  for (const auto& curve : curves) {
    for (const auto& pt : curve.points) {
      std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f\n",
                    curve.method.c_str(), pt.target_rate, pt.realized_rate,
                    pt.accuracy, pt.std_accuracy);
      out << buf;
    }
  }
  return out.str();
}

std::vector<DeferralCurve> curves_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "method,target_rate,realized_rate,accuracy,std") {
    throw std::runtime_error("curves csv: bad header");
  }
  std::vector<DeferralCurve> curves;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string method, field;
    if (!std::getline(row, method, ',')) throw std::runtime_error("curves csv: bad row");
    CurvePoint pt;
    double* slots[4] = {&pt.target_rate, &pt.realized_rate, &pt.accuracy,
                        &pt.std_accuracy};
    for (double* slot : slots) {
      if (!std::getline(row, field, ',')) throw std::runtime_error("curves csv: bad row");
      *slot = std::stod(field);
    }
    if (curves.empty() || curves.back().method != method) {
      curves.push_back(DeferralCurve{method, {}, 0});
    }
    curves.back().points.push_back(pt);
  }
  return curves;
}

void write_curves_csv(const std::vector<DeferralCurve>& curves,
                      const std::string& path) {
  write_text(fs::path(path), curves_to_csv(curves));
}

std::vector<DeferralCurve> read_curves_csv(const std::string& path) {
  return curves_from_csv(read_text(fs::path(path)));
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  Pipeline pipe;
  pipe.config = config;

  const bool persist = !config.out_dir.empty();
  const Paths paths(config.out_dir);
  if (persist) {
    fs::create_directories(paths.root);
    std::error_code ec;
    fs::remove(paths.failed_marker(), ec);
  }

  try {
    pipe.generate_data();
    if (persist) persist_data(pipe, paths);
    pipe.train_models();
    if (persist) persist_models(pipe, paths);
    pipe.train_heads();
    if (persist) persist_heads(pipe, paths);
    ExperimentResult result = pipe.evaluate();
    if (persist) persist_results(pipe, result, paths);
    return result;
  } catch (const std::exception& e) {
    if (persist) {
      write_text(paths.failed_marker(), std::string("experiment failed: ") + e.what() + "\n");
    }
    throw;
  }
}

void stage_gen_data(const ExperimentConfig& config, const std::string& dir) {
  config.validate();
  Pipeline pipe;
  pipe.config = config;
  pipe.config.out_dir = dir;
  pipe.generate_data();
  persist_data(pipe, Paths(dir));
}

void stage_train_base(const std::string& dir) {
  Pipeline pipe = load_pipeline_data(dir);
  pipe.train_models();
  persist_models(pipe, Paths(dir));
}

void stage_train_defer(const std::string& dir) {
  Pipeline pipe = load_pipeline_data(dir);
  load_models(pipe, Paths(dir));
  pipe.train_heads();
  persist_heads(pipe, Paths(dir));
}

ExperimentResult stage_eval_curves(const std::string& dir) {
  Pipeline pipe = load_pipeline_data(dir);
  load_models(pipe, Paths(dir));
  load_heads(pipe, Paths(dir));
  ExperimentResult result = pipe.evaluate();
  persist_results(pipe, result, Paths(dir));
  return result;
}

}  // namespace l2d
