#include <filesystem>
#include <fstream>
#include <sstream>

#include <stdexcept>

#include "doctest.h"

#include "l2d/baselines.hpp"
#include "l2d/checkpoint.hpp"
#include "l2d/experiment.hpp"
#include "l2d/rules.hpp"
#include "l2d/verify.hpp"

using namespace l2d;

namespace fs = std::filesystem;

TEST_SUITE_BEGIN("harness");

namespace {

// Small but non-degenerate experiment settings so pipeline tests stay fast.
ExperimentConfig tiny_config() {
  ExperimentConfig config;
  config.n_samples = 800;
  config.num_seeds = 2;
  config.base_corruption = CorruptionSpec::label_noise(2);
  config.base_model = NetConfig{{16}, 40, 128, 3e-3, 1e-3};
  config.expert_model = NetConfig{{32}, 60, 128, 3e-3, 1e-4};
  config.deferral_head = NetConfig{{64, 16}, 60, 128, 7e-4, 1e-3};
  config.twostage_costs = {0.0, 0.1};
  config.emit_svg = false;
  return config;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("system accuracy") {
  const std::vector<int> model{0, 1, 2, 0};
  const std::vector<int> expert{1, 1, 0, 0};
  const std::vector<int> labels{1, 1, 2, 0};
  SUBCASE("defer nothing gives model accuracy") {
    CHECK(system_accuracy(model, expert, std::vector<bool>(4, false), labels) ==
          doctest::Approx(0.75));
  }
  SUBCASE("defer everything gives expert accuracy") {
    CHECK(system_accuracy(model, expert, std::vector<bool>(4, true), labels) ==
          doctest::Approx(0.75));
  }
  SUBCASE("a constructed mask reaches perfect accuracy") {
    // Defer exactly the model's errors where the expert is right.
    const std::vector<bool> mask{true, false, false, false};
    CHECK(system_accuracy(model, expert, mask, labels) == doctest::Approx(1.0));
  }
  SUBCASE("length mismatch rejected") {
    CHECK_THROWS_AS(system_accuracy(model, expert, std::vector<bool>(3, false), labels),
                    std::invalid_argument);
  }
}

TEST_CASE("random baseline curve") {
  const DeferralCurve curve = random_baseline_curve(0.6, 0.8, {0.0, 0.25, 1.0});
  CHECK(curve.points[0].accuracy == doctest::Approx(0.6));
  CHECK(curve.points[1].accuracy == doctest::Approx(0.65));
  CHECK(curve.points[2].accuracy == doctest::Approx(0.8));
  CHECK(curve.points[1].realized_rate == doctest::Approx(0.25));
  CHECK_THROWS_AS(random_baseline_curve(-0.1, 0.8, {0.5}), std::invalid_argument);
}

TEST_CASE("curve csv round trip") {
  std::vector<DeferralCurve> curves(1);
  curves[0].method = "drcpe";
  curves[0].points = {{0.05, 0.052, 0.81234, 0.0041}, {0.5, 0.5, 0.9, 0.0}};
  const std::string csv = curves_to_csv(curves);
  CHECK(csv.rfind("method,target_rate,realized_rate,accuracy,std\n", 0) == 0);
  const auto parsed = curves_from_csv(csv);
  REQUIRE(parsed.size() == 1);
  REQUIRE(parsed[0].points.size() == 2);
  CHECK(parsed[0].points[0].accuracy == 0.81234);
  CHECK(parsed[0].points[0].std_accuracy == 0.0041);
  CHECK(curves_to_csv(parsed) == csv);
  CHECK_THROWS_AS(curves_from_csv("bogus header\n"), std::runtime_error);
}

TEST_CASE("config json round trip and validation") {
  ExperimentConfig config = ExperimentConfig::specialist_config();
  config.gamma = 0.75;
  config.target_rates = {0.1, 0.4};
  const std::string text = config.to_json();
  const ExperimentConfig back = ExperimentConfig::from_json(text);
  CHECK(back.gamma == 0.75);
  CHECK(back.target_rates == std::vector<double>{0.1, 0.4});
  REQUIRE(back.expert_corruption.has_value());
  CHECK(back.expert_corruption->kind == CorruptionSpec::Kind::kSpecialist);
  CHECK(back.mean_scale == config.mean_scale);

  CHECK_THROWS_AS(ExperimentConfig::from_json("{"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"gamma": -1.0})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"methods": ["nope"]})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"target_rates": [0.5, 0.2]})"),
                  ConfigError);
}

TEST_CASE("experiment pipeline") {
  ExperimentConfig config = tiny_config();
  config.method_names = {methods::kConf, methods::kDrcpe, methods::kChowOracle,
                         methods::kRandom};
  const ExperimentResult result = run_experiment(config);

  SUBCASE("curves respect the invariants") {
    for (const auto& curve : result.curves) {
      curve.validate();
      CHECK(curve.points.size() == config.target_rates.size());
    }
  }

  SUBCASE("random curve interpolation endpoints stay consistent") {
    const DeferralCurve& random = result.curve(methods::kRandom);
    CHECK(random.points.front().accuracy >=
          std::min(result.model_accuracy, result.expert_accuracy) - 1e-9);
  }

  SUBCASE("random curve interpolates the measured accuracies") {
    const DeferralCurve& random = result.curve(methods::kRandom);
    for (std::size_t i = 0; i < random.points.size(); ++i) {
      const double r = random.points[i].target_rate;
      const double expected =
          (1.0 - r) * result.model_accuracy + r * result.expert_accuracy;
      CHECK(random.points[i].accuracy == doctest::Approx(expected).epsilon(1e-6));
    }
  }
}

TEST_CASE("conf curve matches an independent recomputation from artifacts") {
  // Two-path oracle: run the pipeline once with artifacts on disk, then
  // rebuild the conf curve from the stored splits and checkpoints using only
  // low-level calls (confidence scores, quantile thresholds, system
  // accuracy), bypassing the harness orchestration entirely.
  ExperimentConfig config = tiny_config();
  config.base_corruption.reset();  // clean data
  config.method_names = {methods::kConf};
  config.num_seeds = 1;

  const fs::path root = fs::temp_directory_path() / "l2d_conf_oracle";
  fs::remove_all(root);
  config.out_dir = root.string();
  const ExperimentResult result = run_experiment(config);
  const DeferralCurve& conf = result.curve(methods::kConf);

  const Classifier base = load_classifier((root / "models" / "base.json").string());
  const Classifier expert = load_classifier((root / "models" / "expert.json").string());
  const Dataset calib = read_jsonl((root / "data" / "deferral_train.jsonl").string(),
                                   Split::kDeferralTrain, config.num_classes);
  const Dataset test = read_jsonl((root / "data" / "test.jsonl").string(),
                                  Split::kTest, config.num_classes);

  std::vector<double> calib_scores;
  for (const auto& ex : calib.examples) {
    calib_scores.push_back(conf_score(base.predict_proba(ex.features)));
  }
  std::vector<double> test_scores;
  std::vector<int> model_preds, expert_preds, labels;
  for (const auto& ex : test.examples) {
    test_scores.push_back(conf_score(base.predict_proba(ex.features)));
    model_preds.push_back(base.predict(ex.features));
    expert_preds.push_back(expert.predict(ex.features));
    labels.push_back(ex.label);
  }
  for (std::size_t i = 0; i < config.target_rates.size(); ++i) {
    const ThresholdResult cut =
        threshold_from_rate(calib_scores, config.target_rates[i]);
    std::vector<bool> mask(test_scores.size());
    for (std::size_t j = 0; j < test_scores.size(); ++j) {
      mask[j] = test_scores[j] <= cut.tau;
    }
    const double accuracy = system_accuracy(model_preds, expert_preds, mask, labels);
    CHECK(conf.points[i].accuracy == doctest::Approx(accuracy).epsilon(1e-9));
  }
  fs::remove_all(root);
}

TEST_CASE("degenerate expert equals model: flat curves") {
  ExperimentConfig config = tiny_config();
  config.base_corruption.reset();
  config.expert_model = config.base_model;  // identical architecture/training
  config.method_names = {methods::kConf, methods::kDrcpe, methods::kRandom};
  // Same seed stream for both classifiers would still differ; force equality
  // by comparing against the spread of the curves instead.
  const ExperimentResult result = run_experiment(config);
  const double model_acc = result.model_accuracy;
  for (const auto& curve : result.curves) {
    for (const auto& pt : curve.points) {
      // No deferral gain exists; every curve stays near the base accuracy.
      CHECK(std::abs(pt.accuracy - model_acc) <=
            0.05 + 2.0 * pt.std_accuracy);
    }
  }
}

TEST_CASE("staged pipeline matches the end-to-end run and is deterministic") {
  ExperimentConfig config = tiny_config();
  config.method_names = {methods::kConf, methods::kDrcpe, methods::kRandom};

  const fs::path root = fs::temp_directory_path() / "l2d_stage_test";
  fs::remove_all(root);
  const fs::path dir_a = root / "a";
  const fs::path dir_b = root / "b";

  ExperimentConfig run_config = config;
  run_config.out_dir = dir_a.string();
  run_experiment(run_config);

  stage_gen_data(config, dir_b.string());
  stage_train_base(dir_b.string());
  stage_train_defer(dir_b.string());
  stage_eval_curves(dir_b.string());

  CHECK(slurp(dir_a / "curves.csv") == slurp(dir_b / "curves.csv"));

  // Re-running the end-to-end path reproduces the bytes exactly.
  const std::string first = slurp(dir_a / "curves.csv");
  run_experiment(run_config);
  CHECK(slurp(dir_a / "curves.csv") == first);

  fs::remove_all(root);
}

TEST_CASE("failure marker on broken configs") {
  ExperimentConfig config = tiny_config();
  // Long-tail caps of zero empty the base-training split mid-pipeline.
  config.base_corruption = CorruptionSpec::long_tail(config.num_classes, 0, 0);
  const fs::path root = fs::temp_directory_path() / "l2d_failed_test";
  fs::remove_all(root);
  config.out_dir = root.string();
  CHECK_THROWS(run_experiment(config));
  CHECK(fs::exists(root / "FAILED"));
  // The data stage still flushed its partial results.
  CHECK(fs::exists(root / "data" / "test.jsonl"));
  fs::remove_all(root);
}

TEST_CASE("verify suite selectors") {
  const VerifyReport report = run_verify("harness.curve");
  REQUIRE(report.checks.size() == 1);
  CHECK(report.checks[0].pass);
  CHECK(report.to_json().find("\"all_pass\": true") != std::string::npos);
  CHECK(verify_check_names().size() >= 25);
}

TEST_SUITE_END();
