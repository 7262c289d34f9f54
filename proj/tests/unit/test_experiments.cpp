#include "flashmax/experiments.hpp"
#include "flashmax/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace {

using namespace flashmax;
namespace fs = std::filesystem;

class Experiments : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("flashmax_exp_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  ExperimentConfig tiny() const {
    ExperimentConfig c;
    c.output_dir = dir_;
    c.train.width_half = 4;
    c.train.batch_size = 32;
    c.train.max_epochs = 3;
    c.train.val_every_steps = 2;
    c.train.seed = 10;
    c.sampling.n_train = 64;
    c.sampling.n_val = 50;
    c.sampling.ground_truth = GroundTruthId::hopf_fibration();
    c.repeats = 1;
    return c;
  }

  fs::path dir_;
};

TEST_F(Experiments, RaceWithUnitTargetConvergesAtFirstCheckBelowIt) {
  ExperimentConfig c = tiny();
  c.train.target_rel_error = 1.0;
  c.train.max_epochs = 500;
  const RunRecord rec = run_race(c);
  ASSERT_EQ(rec.runs.size(), 1u);
  EXPECT_TRUE(rec.runs[0].converged);
  EXPECT_EQ(rec.runs[0].reason, StopReason::kTargetReached);
  EXPECT_LT(rec.runs[0].eval.rel_l2_error, 1.0);
  std::ifstream is(rec.runs[0].dir / "trainlog.csv");
  const TrainLog log = io::read_train_log(is);
  EXPECT_EQ(log.back().step, rec.runs[0].best_step);
  EXPECT_LE(rec.runs[0].time_s, log.back().wall_seconds_total);
}

TEST_F(Experiments, RepeatsFanOutSeeds) {
  ExperimentConfig c = tiny();
  c.repeats = 5;
  c.train.wall_clock_budget_s = 60.0;
  const RunRecord rec = run_time_budget(c);
  ASSERT_EQ(rec.runs.size(), 5u);
  for (int r = 0; r < 5; ++r) {
    EXPECT_EQ(rec.runs[static_cast<std::size_t>(r)].seed, 10u + static_cast<unsigned>(r));
  }
  EXPECT_EQ(rec.error.n, 5);
  double mean = 0.0;
  for (const auto& run : rec.runs) mean += run.eval.rel_l2_error / 5.0;
  EXPECT_NEAR(rec.error.mean, mean, 1e-15);
  const auto j = rec.to_json();
  EXPECT_EQ(j.at("runs").size(), 5u);
  // Different seeds draw different training sets.
  EXPECT_NE(rec.runs[0].eval.rel_l2_error, rec.runs[1].eval.rel_l2_error);
}

TEST_F(Experiments, ZeroBudgetValidatesInitialModelOnce) {
  ExperimentConfig c = tiny();
  c.train.wall_clock_budget_s = 0.0;
  const RunRecord rec = run_time_budget(c);
  ASSERT_EQ(rec.runs.size(), 1u);
  std::ifstream is(rec.runs[0].dir / "trainlog.csv");
  const TrainLog log = io::read_train_log(is);
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].step, 0);
  ASSERT_TRUE(log[0].val_rel_error.has_value());
  EXPECT_EQ(*log[0].val_rel_error, rec.runs[0].eval.rel_l2_error);
}

TEST_F(Experiments, BestSoFarIsMonotone) {
  ExperimentConfig c = tiny();
  c.sampling.setup = SetupId::kBC;
  c.sampling.n_train = 140;
  c.train.max_epochs = 10;
  c.train.wall_clock_budget_s = 60.0;
  const RunRecord rec = run_time_budget(c);
  std::ifstream is(rec.runs[0].dir / "trainlog.csv");
  const TrainLog log = io::read_train_log(is);
  double best = INFINITY;
  int checks = 0;
  for (const auto& r : log) {
    if (!r.val_rel_error) continue;
    best = std::min(best, *r.val_rel_error);
    ++checks;
  }
  EXPECT_GT(checks, 3);
  EXPECT_EQ(best, rec.runs[0].eval.rel_l2_error);
}

TEST_F(Experiments, OutputLayout) {
  ExperimentConfig c = tiny();
  const RunOutcome out = run_single(c, 3, "layout");
  for (const char* f : {"config.json", "trainlog.csv", "checkpoint.json", "report.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "layout" / f)) << f;
  }
  const auto report = io::read_json(dir_ / "layout" / "report.json");
  EXPECT_EQ(report.at("rel_l2_error").get<double>(), out.eval.rel_l2_error);
  EXPECT_LE(report.at("residual_rmse").get<double>(), 1e-8);
  EXPECT_EQ(report.at("seed"), 3);
  const auto cfg = experiment_config_from_json(io::read_json(dir_ / "layout" / "config.json"));
  EXPECT_EQ(cfg.train.seed, 3u);
  EXPECT_EQ(cfg.sampling.seed, 3u);
  // The checkpoint reproduces the reported error.
  const ModelParams best =
      io::checkpoint_from_json(io::read_json(dir_ / "layout" / "checkpoint.json"));
  SamplingConfig s = cfg.sampling;
  const ValidationSet val = sample_validation(s);
  EXPECT_EQ(relative_l2(forward(best, val.points), val.targets), out.eval.rel_l2_error);
}

TEST_F(Experiments, ReproducibleAcrossWorkerCounts) {
  ExperimentConfig c = tiny();
  const RunOutcome a = run_single(c, 4, "w1");
  c.train.workers = 3;
  const RunOutcome b = run_single(c, 4, "w3");
  EXPECT_EQ(a.eval.rel_l2_error, b.eval.rel_l2_error);
  EXPECT_EQ(a.best_step, b.best_step);
}

TEST_F(Experiments, DataBudgetSingleRow) {
  ExperimentConfig c = tiny();
  c.sampling.setup = SetupId::kBC;  // forced back to IC
  c.n_points = {50};
  c.train.wall_clock_budget_s = 60.0;
  const auto rows = run_data_budget(c);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].n_points, 50);
  const auto cfg =
      experiment_config_from_json(io::read_json(dir_ / rows[0].run_id / "config.json"));
  EXPECT_EQ(cfg.sampling.setup, SetupId::kIC);
  EXPECT_EQ(cfg.sampling.n_train, 50);
  EXPECT_EQ(cfg.train.seed, 42u);
  EXPECT_EQ(data_budget_to_json(rows).size(), 1u);
}

TEST_F(Experiments, NumericalAbortLeavesPartialRecord) {
  ExperimentConfig c = tiny();
  c.train.learning_rate = 1e300;
  EXPECT_THROW(run_single(c, 0, "abort"), NumericalAbort);
  EXPECT_TRUE(fs::exists(dir_ / "abort" / "config.json"));
  EXPECT_TRUE(fs::exists(dir_ / "abort" / "trainlog.csv"));
  EXPECT_TRUE(io::read_json(dir_ / "abort" / "report.json").contains("error"));
}

TEST(ExperimentConfig, JsonRoundTrip) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::kDataBudget;
  c.sampling.ground_truth = GroundTruthId::random_solution(77);
  c.sampling.setup = SetupId::kBC;
  c.sampling.n_train = 300;
  c.sampling.n_val = 20;
  c.train.width_half = 12;
  c.repeats = 2;
  c.n_points = {10, 20};
  c.output_dir = "out/x";
  const ExperimentConfig back =
      experiment_config_from_json(nlohmann::json::parse(experiment_config_to_json(c).dump()));
  EXPECT_EQ(back.experiment, c.experiment);
  EXPECT_EQ(back.sampling.ground_truth, c.sampling.ground_truth);
  EXPECT_EQ(back.sampling.setup, SetupId::kBC);
  EXPECT_EQ(back.sampling.n_train, 300);
  EXPECT_EQ(back.sampling.n_val, 20);
  EXPECT_EQ(back.train.width_half, 12);
  EXPECT_EQ(back.repeats, 2);
  EXPECT_EQ(back.n_points, c.n_points);
  EXPECT_EQ(back.output_dir, c.output_dir);
  nlohmann::json bad = experiment_config_to_json(c);
  bad["schema_version"] = 99;
  EXPECT_THROW(experiment_config_from_json(bad), std::invalid_argument);
}

TEST(ExperimentConfig, Validation) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::kTimeBudget;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.train.wall_clock_budget_s = 1.0;
  EXPECT_NO_THROW(c.validate());
  c.repeats = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(parse_experiment("time-budget"), ExperimentKind::kTimeBudget);
  EXPECT_EQ(parse_experiment(to_string(ExperimentKind::kExactInit)),
            ExperimentKind::kExactInit);
  EXPECT_THROW(parse_experiment("sprint"), std::invalid_argument);
}

TEST(Aggregate, MeanAndStandardError) {
  const Aggregate a = aggregate({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(a.mean, 2.5);
  EXPECT_NEAR(a.std_error, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(aggregate({7.0}).std_error, 0.0);
  EXPECT_EQ(aggregate({}).n, 0);
}

}  // namespace
