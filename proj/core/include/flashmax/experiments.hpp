#pragma once

#include "flashmax/ground_truth.hpp"
#include "flashmax/metrics.hpp"
#include "flashmax/sampling.hpp"
#include "flashmax/train.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace flashmax {

enum class ExperimentKind {
  kTrain,
  kRace,
  kTimeBudget,
  kDataBudget,
  kVerify,
  kGradcheck,
  kExactInit,
  kExportField,
};

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment(std::string_view name);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kTrain;
  TrainConfig train;
  /// Ground truth, setup, n_train and n_val live here. The sampling seed is
  /// overwritten per repeat.
  SamplingConfig sampling;
  std::filesystem::path output_dir = "runs";
  /// Repeat r uses seed train.seed + r for both sampling and training.
  int repeats = 5;
  std::vector<int> n_points = {100, 200, 500, 1000, 2000, 5000, 10000, 12000};

  /// Throws std::invalid_argument when a field required by `experiment` is
  /// missing or out of range.
  void validate() const;
};

nlohmann::json experiment_config_to_json(const ExperimentConfig& c);
/// Missing keys keep the values in `base`. Rejects a schema_version other
/// than the current one.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             ExperimentConfig base = {});

/// Mean and standard error of the mean (sample std / sqrt(n); 0 for n < 2).
struct Aggregate {
  double mean = 0.0;
  double std_error = 0.0;
  int n = 0;
};
Aggregate aggregate(const std::vector<double>& values);

struct RunOutcome {
  std::string run_id;
  std::uint64_t seed = 0;
  EvalReport eval;
  std::int64_t best_step = 0;
  double time_to_best = 0.0;
  StopReason reason = StopReason::kMaxEpochs;
  bool converged = false;
  /// Time to target when converged, otherwise total time spent.
  double time_s = 0.0;
  std::filesystem::path dir;
};

struct RunRecord {
  nlohmann::json config;
  std::vector<RunOutcome> runs;
  Aggregate error;
  Aggregate time_s;

  nlohmann::json to_json() const;
};

/// One sample-train-evaluate cycle written to output_dir/run_id/. The
/// config snapshot is written before training starts; on NumericalAbort the
/// partial log is written and the exception rethrown.
RunOutcome run_single(const ExperimentConfig& config, std::uint64_t seed,
                      const std::string& run_id);

/// Runs `repeats` seeds and aggregates min error and time.
RunRecord run_repeats(const ExperimentConfig& config, const std::string& prefix);

/// Early stopping at target_rel_error (0.05 when unset).
RunRecord run_race(ExperimentConfig config);
/// Requires wall_clock_budget_s.
RunRecord run_time_budget(const ExperimentConfig& config);

struct DataBudgetRow {
  int n_points = 0;
  double min_error = 0.0;
  double time_to_min = 0.0;
  std::string run_id;
};

/// One IC run per n_points at seed 42.
std::vector<DataBudgetRow> run_data_budget(const ExperimentConfig& config);
nlohmann::json data_budget_to_json(const std::vector<DataBudgetRow>& rows);

}  // namespace flashmax
