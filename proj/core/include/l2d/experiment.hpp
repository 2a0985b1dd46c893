#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "l2d/baselines.hpp"
#include "l2d/dataset.hpp"
#include "l2d/drcpe.hpp"
#include "l2d/point_loss.hpp"
#include "l2d/synth.hpp"
#include "l2d/train.hpp"

namespace l2d {

/// Configuration errors map to exit code 2 at the CLI.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace methods {
inline constexpr const char* kDrcpe = "drcpe";
inline constexpr const char* kConf = "conf";
inline constexpr const char* kEstimateDiff01 = "estimate-diff01";
inline constexpr const char* kEstimateMaxProb = "estimate-maxprob";
inline constexpr const char* kTwoStageExp = "twostage-exp";
inline constexpr const char* kChowOracle = "chow-oracle";
inline constexpr const char* kRandom = "random";
}  // namespace methods

/// Architecture plus optimizer settings for one trainable network.
struct NetConfig {
  std::vector<int> hidden;
  int epochs = 200;
  int batch_size = 256;
  double learning_rate = 3e-3;
  double weight_decay = 1e-4;

  OptimizerConfig optimizer(std::uint64_t seed) const;
};

struct ExperimentConfig {
  // Synthetic data.
  int num_classes = 10;
  int dim = 8;
  double sigma = 1.2;
  double mean_scale = 5.5;
  std::size_t n_samples = 6000;
  std::array<double, 3> split_fractions{0.35, 0.40, 0.25};
  std::optional<CorruptionSpec> base_corruption;
  std::optional<CorruptionSpec> expert_corruption;

  // Weighting loss and temperatures for the density-ratio scorer.
  PointLossKind weight_loss = PointLossKind::gce(0.7);
  double gamma = 0.5;
  double gamma_expert = 0.5;
  DrKind dr_loss = DrKind::kSquared;

  // Methods and evaluation grid.
  std::vector<std::string> method_names{
      methods::kDrcpe,         methods::kConf,       methods::kEstimateDiff01,
      methods::kEstimateMaxProb, methods::kTwoStageExp, methods::kChowOracle,
      methods::kRandom};
  std::vector<double> target_rates{0.05, 0.10, 0.15, 0.20, 0.25, 0.50, 0.75};
  std::vector<double> twostage_costs{0.0, 0.02, 0.05, 0.1, 0.2};
  int num_seeds = 11;
  std::uint64_t seed = 7;

  // Networks. The deferral head architecture (64 -> 16 -> 1) is fixed; only
  // its optimizer settings are configurable. The base model is kept small
  // and strongly decayed so it cannot memorize label noise, which would
  // poison its confidence signal.
  NetConfig base_model{{32}, 200, 256, 3e-3, 1e-3};
  NetConfig expert_model{{64, 16}, 200, 256, 3e-3, 1e-4};
  NetConfig deferral_head{{64, 16}, 300, 128, 7e-4, 1e-3};

  bool emit_svg = true;
  std::string out_dir;  // empty: keep everything in memory

  MixtureSpec mixture() const;
  void validate() const;

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;

  /// Built-in specialist-corruption variant: the expert sees every example
  /// of the specialist classes and 10% of the rest; the base model sees the
  /// complementary corruption.
  static ExperimentConfig default_config();
  static ExperimentConfig specialist_config();
};

struct CurvePoint {
  double target_rate = 0.0;
  double realized_rate = 0.0;
  double accuracy = 0.0;
  double std_accuracy = 0.0;
};

struct DeferralCurve {
  std::string method;
  std::vector<CurvePoint> points;
  std::uint64_t seed = 0;

  void validate() const;  // realized rates non-decreasing, accuracies in [0,1]
};

/// Accuracy of the combined predictor: the expert's argmax on deferred
/// examples, the model's elsewhere.
double system_accuracy(const std::vector<int>& model_predictions,
                       const std::vector<int>& expert_predictions,
                       const std::vector<bool>& defer_mask,
                       const std::vector<int>& labels);
double system_accuracy(const Classifier& model, const Classifier& expert,
                       const std::vector<bool>& defer_mask, const Dataset& test);

/// Linear interpolation between the model's and the expert's accuracy:
/// accuracy(r) = (1-r) * model_acc + r * expert_acc.
DeferralCurve random_baseline_curve(double model_accuracy, double expert_accuracy,
                                    const std::vector<double>& rates);

struct ExperimentResult {
  std::vector<DeferralCurve> curves;  // aggregated over seeds, config order
  std::map<std::string, std::vector<DeferralCurve>> per_seed;
  double model_accuracy = 0.0;
  double expert_accuracy = 0.0;

  const DeferralCurve& curve(const std::string& method) const;
};

/// End-to-end pipeline: generate data, corrupt and train the base/expert
/// pair once, train every method's head per seed on the clean deferral
/// split, calibrate thresholds there, evaluate on the test split, and
/// aggregate mean/std per point. Writes CSV + JSON (+ SVG) artifacts when
/// config.out_dir is set; on failure the partial results are flushed next to
/// a FAILED marker.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Curve CSV with the fixed header method,target_rate,realized_rate,
/// accuracy,std and 6-decimal values. Emitted values are snapped to that
/// precision, so parsing reproduces the in-memory curves exactly.
std::string curves_to_csv(const std::vector<DeferralCurve>& curves);
std::vector<DeferralCurve> curves_from_csv(const std::string& text);
void write_curves_csv(const std::vector<DeferralCurve>& curves,
                      const std::string& path);
std::vector<DeferralCurve> read_curves_csv(const std::string& path);

/// Staged pipeline entry points backing the CLI subcommands. All stages
/// share one experiment directory.
void stage_gen_data(const ExperimentConfig& config, const std::string& dir);
void stage_train_base(const std::string& dir);
void stage_train_defer(const std::string& dir);
ExperimentResult stage_eval_curves(const std::string& dir);

}  // namespace l2d
