// Command-line front end: data generation, staged training, curve
// evaluation, end-to-end runs, and the property-verification suite.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "l2d/experiment.hpp"
#include "l2d/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailure = 1;
constexpr int kExitConfigError = 2;

l2d::ExperimentConfig resolve_config(const std::string& config_path,
                                     std::optional<std::uint64_t> seed) {
  l2d::ExperimentConfig config = config_path.empty()
                                     ? l2d::ExperimentConfig::default_config()
                                     : l2d::ExperimentConfig::load(config_path);
  if (seed.has_value()) config.seed = *seed;
  config.validate();
  return config;
}

void print_curves(const l2d::ExperimentResult& result) {
  std::printf("model accuracy %.4f, expert accuracy %.4f\n", result.model_accuracy,
              result.expert_accuracy);
  for (const auto& curve : result.curves) {
    std::printf("%-18s", curve.method.c_str());
    for (const auto& pt : curve.points) {
      std::printf(" %4.2f:%.4f±%.4f", pt.target_rate, pt.accuracy, pt.std_accuracy);
    }
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learning-to-defer benchmark: density-ratio deferral scorers, "
               "baselines, and analytic oracles on synthetic mixtures"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string suite = "all";
  std::string report_path;

  auto add_common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--config", config_path, "experiment config JSON");
    cmd->add_option("--seed", seed, "master seed override");
    if (with_out) cmd->add_option("--out", out_dir, "experiment directory");
  };

  CLI::App* gen_data = app.add_subcommand("gen-data", "generate the three splits");
  add_common(gen_data, true);

  CLI::App* train_base =
      app.add_subcommand("train-base", "train base and expert classifiers");
  train_base->add_option("--out", out_dir, "experiment directory");

  CLI::App* train_defer =
      app.add_subcommand("train-defer", "train deferral heads for every seed");
  train_defer->add_option("--out", out_dir, "experiment directory");

  CLI::App* eval_curve =
      app.add_subcommand("eval-curve", "calibrate thresholds and evaluate curves");
  eval_curve->add_option("--out", out_dir, "experiment directory");

  CLI::App* run = app.add_subcommand("run", "end-to-end experiment");
  add_common(run, true);

  CLI::App* verify = app.add_subcommand("verify", "run invariant checks");
  verify->add_option("--suite", suite, "check name substring, or 'all'");
  verify->add_option("--report", report_path, "write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen_data->parsed()) {
      l2d::stage_gen_data(resolve_config(config_path, seed), out_dir);
      std::printf("splits written under %s/data\n", out_dir.c_str());
    } else if (train_base->parsed()) {
      l2d::stage_train_base(out_dir);
      std::printf("models written under %s/models\n", out_dir.c_str());
    } else if (train_defer->parsed()) {
      l2d::stage_train_defer(out_dir);
      std::printf("heads written under %s/scorers\n", out_dir.c_str());
    } else if (eval_curve->parsed()) {
      print_curves(l2d::stage_eval_curves(out_dir));
      std::printf("curves written to %s/curves.csv\n", out_dir.c_str());
    } else if (run->parsed()) {
      l2d::ExperimentConfig config = resolve_config(config_path, seed);
      config.out_dir = out_dir;
      print_curves(l2d::run_experiment(config));
      std::printf("artifacts written under %s\n", out_dir.c_str());
    } else if (verify->parsed()) {
      const l2d::VerifyReport report = l2d::run_verify(suite);
      if (report.checks.empty()) {
        std::fprintf(stderr, "no checks match selector '%s'\n", suite.c_str());
        return kExitConfigError;
      }
      for (const auto& check : report.checks) {
        std::printf("[%s] %s%s%s\n", check.pass ? "PASS" : "FAIL",
                    check.name.c_str(), check.detail.empty() ? "" : ": ",
                    check.detail.c_str());
      }
      if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) {
          std::fprintf(stderr, "cannot write report: %s\n", report_path.c_str());
          return kExitVerifyFailure;
        }
        out << report.to_json();
      }
      return report.all_pass() ? kExitOk : kExitVerifyFailure;
    }
  } catch (const l2d::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitVerifyFailure;
  }
  return kExitOk;
}
