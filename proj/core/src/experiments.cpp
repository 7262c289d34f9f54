#include "flashmax/experiments.hpp"

#include "flashmax/io.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace flashmax {

namespace {

constexpr std::uint64_t kDataBudgetSeed = 42;

struct KindName {
  ExperimentKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::kTrain, "train"},
    {ExperimentKind::kRace, "race"},
    {ExperimentKind::kTimeBudget, "time_budget"},
    {ExperimentKind::kDataBudget, "data_budget"},
    {ExperimentKind::kVerify, "verify"},
    {ExperimentKind::kGradcheck, "gradcheck"},
    {ExperimentKind::kExactInit, "exact_init"},
    {ExperimentKind::kExportField, "export_field"},
};

std::string_view reason_name(StopReason r) {
  switch (r) {
    case StopReason::kTargetReached: return "target_reached";
    case StopReason::kWallClock: return "wall_clock";
    case StopReason::kMaxEpochs: return "max_epochs";
  }
  return "unknown";
}

nlohmann::json aggregate_json(const Aggregate& a) {
  return {{"mean", a.mean}, {"std_error", a.std_error}, {"n", a.n}};
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == k) return kn.name;
  }
  return "unknown";
}

ExperimentKind parse_experiment(std::string_view name) {
  for (const auto& kn : kKindNames) {
    if (kn.name == name) return kn.kind;
  }
  // Accept the CLI spelling with dashes too.
  std::string alt(name);
  for (char& c : alt) {
    if (c == '-') c = '_';
  }
  for (const auto& kn : kKindNames) {
    if (kn.name == alt) return kn.kind;
  }
  throw std::invalid_argument("unknown experiment: " + std::string(name));
}

void ExperimentConfig::validate() const {
  train.validate();
  if (repeats < 1) throw std::invalid_argument("repeats must be positive");
  if (sampling.n_train < 1 || sampling.n_val < 1) {
    throw std::invalid_argument("n_train and n_val must be positive");
  }
  switch (experiment) {
    case ExperimentKind::kRace:
      if (!train.target_rel_error) {
        throw std::invalid_argument("race requires target_rel_error");
      }
      break;
    case ExperimentKind::kTimeBudget:
      if (!train.wall_clock_budget_s) {
        throw std::invalid_argument("time_budget requires wall_clock_budget_s");
      }
      break;
    case ExperimentKind::kDataBudget:
      if (n_points.empty()) {
        throw std::invalid_argument("data_budget requires n_points");
      }
      for (int n : n_points) {
        if (n < 1) throw std::invalid_argument("n_points entries must be positive");
      }
      break;
    default:
      break;
  }
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["schema_version"] = io::kSchemaVersion;
  j["experiment"] = std::string(to_string(c.experiment));
  j["ground_truth"] = to_string(c.sampling.ground_truth);
  j["ground_truth_seed"] = c.sampling.ground_truth.seed;
  j["setup"] = std::string(to_string(c.sampling.setup));
  j["n_train"] = c.sampling.n_train;
  j["n_val"] = c.sampling.n_val;
  j["train"] = io::train_config_to_json(c.train);
  j["output_dir"] = c.output_dir.string();
  j["repeats"] = c.repeats;
  j["n_points"] = c.n_points;
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             ExperimentConfig c) {
  if (j.contains("schema_version") &&
      j.at("schema_version").get<int>() != io::kSchemaVersion) {
    throw std::invalid_argument("unsupported schema_version");
  }
  if (j.contains("experiment")) {
    c.experiment = parse_experiment(j.at("experiment").get<std::string>());
  }
  if (j.contains("ground_truth")) {
    const std::uint64_t gt_seed = j.value("ground_truth_seed", std::uint64_t{0});
    c.sampling.ground_truth =
        parse_ground_truth(j.at("ground_truth").get<std::string>(), gt_seed);
  }
  if (j.contains("setup")) c.sampling.setup = parse_setup(j.at("setup").get<std::string>());
  if (j.contains("n_train")) c.sampling.n_train = j.at("n_train").get<int>();
  if (j.contains("n_val")) c.sampling.n_val = j.at("n_val").get<int>();
  if (j.contains("train")) c.train = io::train_config_from_json(j.at("train"), c.train);
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("repeats")) c.repeats = j.at("repeats").get<int>();
  if (j.contains("n_points")) c.n_points = j.at("n_points").get<std::vector<int>>();
  // Runs draw their samples from the training seed.
  c.sampling.seed = c.train.seed;
  return c;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.n = static_cast<int>(values.size());
  if (a.n == 0) return a;
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / a.n;
  if (a.n < 2) return a;
  double ss = 0.0;
  for (double v : values) ss += (v - a.mean) * (v - a.mean);
  a.std_error = std::sqrt(ss / (a.n - 1)) / std::sqrt(static_cast<double>(a.n));
  return a;
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j;
  j["config"] = config;
  for (const auto& r : runs) {
    nlohmann::json row;
    row["run_id"] = r.run_id;
    row["seed"] = r.seed;
    row["min_rel_l2_error"] = r.eval.rel_l2_error;
    if (r.eval.residual_rmse) row["residual_rmse"] = *r.eval.residual_rmse;
    row["best_step"] = r.best_step;
    row["time_to_best_s"] = r.time_to_best;
    row["stop_reason"] = std::string(reason_name(r.reason));
    row["converged"] = r.converged;
    row["time_s"] = r.time_s;
    row["dir"] = r.dir.string();
    j["runs"].push_back(row);
  }
  j["error"] = aggregate_json(error);
  j["time_s"] = aggregate_json(time_s);
  return j;
}

RunOutcome run_single(const ExperimentConfig& config, std::uint64_t seed,
                      const std::string& run_id) {
  ExperimentConfig cfg = config;
  cfg.train.seed = seed;
  cfg.sampling.seed = seed;

  RunOutcome out;
  out.run_id = run_id;
  out.seed = seed;
  out.dir = cfg.output_dir / run_id;
  std::filesystem::create_directories(out.dir);
  io::write_json(out.dir / "config.json", experiment_config_to_json(cfg));

  const ObservationSet obs = sample_train(cfg.sampling);
  const ValidationSet val = sample_validation(cfg.sampling);

  TrainResult result;
  try {
    result = train(cfg.train, obs, val.points, val.targets);
  } catch (const NumericalAbort& e) {
    io::write_train_log(out.dir / "trainlog.csv", e.log());
    nlohmann::json report;
    report["schema_version"] = io::kSchemaVersion;
    report["error"] = e.what();
    io::write_json(out.dir / "report.json", report);
    io::write_json(out.dir / "checkpoint.json",
                   io::checkpoint_to_json(init_params(cfg.train)));
    throw;
  }

  out.eval.rel_l2_error = result.best_val_error;
  out.eval.residual_rmse = residual_error(result.best, val.points, cfg.train.workers);
  out.eval.n_points = val.points.rows();
  out.best_step = result.best_step;
  out.time_to_best = result.time_to_best;
  out.reason = result.reason;
  out.converged = result.time_to_target.has_value();
  out.time_s = out.converged ? *result.time_to_target
                             : (result.log.empty() ? 0.0
                                                   : result.log.back().wall_seconds_total);

  io::write_train_log(out.dir / "trainlog.csv", result.log);
  io::write_json(out.dir / "checkpoint.json", io::checkpoint_to_json(result.best));
  nlohmann::json report = io::report_to_json(
      out.eval, {std::string(to_string(cfg.sampling.setup)),
                 to_string(cfg.sampling.ground_truth), seed});
  report["best_step"] = out.best_step;
  report["time_to_best_s"] = out.time_to_best;
  report["stop_reason"] = std::string(reason_name(out.reason));
  report["converged"] = out.converged;
  report["time_s"] = out.time_s;
  io::write_json(out.dir / "report.json", report);
  return out;
}

RunRecord run_repeats(const ExperimentConfig& config, const std::string& prefix) {
  config.validate();
  RunRecord rec;
  rec.config = experiment_config_to_json(config);
  std::vector<double> errors, times;
  for (int r = 0; r < config.repeats; ++r) {
    const std::uint64_t seed = config.train.seed + static_cast<std::uint64_t>(r);
    rec.runs.push_back(
        run_single(config, seed, prefix + "_seed" + std::to_string(seed)));
    errors.push_back(rec.runs.back().eval.rel_l2_error);
    times.push_back(rec.runs.back().time_s);
  }
  rec.error = aggregate(errors);
  rec.time_s = aggregate(times);
  return rec;
}

RunRecord run_race(ExperimentConfig config) {
  config.experiment = ExperimentKind::kRace;
  if (!config.train.target_rel_error) config.train.target_rel_error = 0.05;
  return run_repeats(config, "race");
}

RunRecord run_time_budget(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  cfg.experiment = ExperimentKind::kTimeBudget;
  return run_repeats(cfg, "time_budget");
}

std::vector<DataBudgetRow> run_data_budget(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  cfg.experiment = ExperimentKind::kDataBudget;
  cfg.sampling.setup = SetupId::kIC;
  cfg.repeats = 1;
  cfg.validate();
  std::vector<DataBudgetRow> rows;
  for (int n : cfg.n_points) {
    cfg.sampling.n_train = n;
    const std::string id = "data_budget_n" + std::to_string(n);
    const RunOutcome out = run_single(cfg, kDataBudgetSeed, id);
    rows.push_back({n, out.eval.rel_l2_error, out.time_to_best, id});
  }
  return rows;
}

nlohmann::json data_budget_to_json(const std::vector<DataBudgetRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"n_points", r.n_points},
                 {"min_error", r.min_error},
                 {"time_to_min_s", r.time_to_min},
                 {"run_id", r.run_id}});
  }
  return j;
}

}  // namespace flashmax
