// flashmax command-line runner.
#include "flashmax/exact_init.hpp"
#include "flashmax/experiments.hpp"
#include "flashmax/io.hpp"
#include "flashmax/metrics.hpp"
#include "flashmax/verify.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace fm = flashmax;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kVerifyFailed = 2, kNumericalAbort = 3 };

struct Flags {
  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output_dir = "runs";
  bool corrupt_multiplier = false;

  std::string ground_truth = "plane_waves";
  std::uint64_t gt_seed = 0;
  std::string setup = "ic";
  int width_half = 5000;
  std::string activation = "tanh";
  double lr = 5e-2;
  int batch_size = 1000;
  int n_train = 2000;
  int n_val = 10000;
  int max_epochs = 10'000;
  int cosine_epochs = 10'000;
  int val_every = 10;
  double target = 0.05;
  double budget = 600.0;
  int repeats = 5;
  std::vector<int> n_points;

  std::string checkpoint;
  std::string terms;
  std::string out;
};

// Options that were given on the command line override the config file.
struct Overrides {
  std::vector<std::pair<CLI::Option*, std::function<void(fm::ExperimentConfig&)>>> list;
  void apply(fm::ExperimentConfig& c) const {
    for (const auto& [opt, fn] : list) {
      if (opt->count() > 0) fn(c);
    }
  }
};

void add_training_flags(CLI::App* sub, Flags& f, Overrides& ov) {
  ov.list.emplace_back(
      sub->add_option("--ground-truth,-g", f.ground_truth,
                      "plane_waves | radial_waves | hopf_fibration | random_solution"),
      [&f](fm::ExperimentConfig& c) {
        c.sampling.ground_truth = fm::parse_ground_truth(f.ground_truth, f.gt_seed);
      });
  ov.list.emplace_back(sub->add_option("--gt-seed", f.gt_seed, "random_solution seed"),
                       [&f](fm::ExperimentConfig& c) {
                         c.sampling.ground_truth =
                             fm::parse_ground_truth(f.ground_truth, f.gt_seed);
                       });
  ov.list.emplace_back(sub->add_option("--setup", f.setup, "ic | bc"),
                       [&f](fm::ExperimentConfig& c) {
                         c.sampling.setup = fm::parse_setup(f.setup);
                       });
  ov.list.emplace_back(sub->add_option("--width-half,-W", f.width_half),
                       [&f](fm::ExperimentConfig& c) { c.train.width_half = f.width_half; });
  ov.list.emplace_back(sub->add_option("--activation", f.activation),
                       [&f](fm::ExperimentConfig& c) {
                         c.train.activation = fm::parse_activation(f.activation);
                       });
  ov.list.emplace_back(sub->add_option("--lr", f.lr),
                       [&f](fm::ExperimentConfig& c) { c.train.learning_rate = f.lr; });
  ov.list.emplace_back(sub->add_option("--batch-size", f.batch_size),
                       [&f](fm::ExperimentConfig& c) { c.train.batch_size = f.batch_size; });
  ov.list.emplace_back(sub->add_option("--n-train", f.n_train),
                       [&f](fm::ExperimentConfig& c) { c.sampling.n_train = f.n_train; });
  ov.list.emplace_back(sub->add_option("--n-val", f.n_val),
                       [&f](fm::ExperimentConfig& c) { c.sampling.n_val = f.n_val; });
  ov.list.emplace_back(sub->add_option("--max-epochs", f.max_epochs),
                       [&f](fm::ExperimentConfig& c) { c.train.max_epochs = f.max_epochs; });
  ov.list.emplace_back(sub->add_option("--cosine-epochs", f.cosine_epochs),
                       [&f](fm::ExperimentConfig& c) {
                         c.train.cosine_epochs = f.cosine_epochs;
                       });
  ov.list.emplace_back(sub->add_option("--val-every", f.val_every, "validation period in steps"),
                       [&f](fm::ExperimentConfig& c) { c.train.val_every_steps = f.val_every; });
  ov.list.emplace_back(sub->add_option("--target", f.target, "target relative error"),
                       [&f](fm::ExperimentConfig& c) { c.train.target_rel_error = f.target; });
  ov.list.emplace_back(sub->add_option("--budget", f.budget, "wall-clock budget in seconds"),
                       [&f](fm::ExperimentConfig& c) {
                         c.train.wall_clock_budget_s = f.budget;
                       });
  ov.list.emplace_back(sub->add_option("--repeats", f.repeats),
                       [&f](fm::ExperimentConfig& c) { c.repeats = f.repeats; });
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FLASH-MAX: shallow Maxwell-exact networks"};
  app.require_subcommand(1);
  Flags f;
  Overrides global;

  app.add_option("--config", f.config_path, "JSON experiment config")
      ->check(CLI::ExistingFile);
  global.list.emplace_back(app.add_option("--seed", f.seed),
                           [&f](fm::ExperimentConfig& c) { c.train.seed = f.seed; });
  global.list.emplace_back(app.add_option("--workers", f.workers)->check(CLI::PositiveNumber),
                           [&f](fm::ExperimentConfig& c) { c.train.workers = f.workers; });
  global.list.emplace_back(app.add_option("--output-dir", f.output_dir),
                           [&f](fm::ExperimentConfig& c) { c.output_dir = f.output_dir; });
  app.add_flag("--corrupt-multiplier", f.corrupt_multiplier)->group("");

  Overrides local;
  auto* train = app.add_subcommand("train", "single training run");
  auto* race = app.add_subcommand("race", "train until the target error, over repeats");
  auto* budget = app.add_subcommand("time-budget", "train for a fixed wall-clock budget");
  auto* data = app.add_subcommand("data-budget", "IC runs over a list of training set sizes");
  for (auto* sub : {train, race, budget, data}) add_training_flags(sub, f, local);
  local.list.emplace_back(data->add_option("--n-points", f.n_points)->delimiter(','),
                          [&f](fm::ExperimentConfig& c) { c.n_points = f.n_points; });

  auto* verify = app.add_subcommand("verify", "residual, convergence and multiplier checks");
  auto* gradcheck = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");

  auto* exact = app.add_subcommand("exact-init", "cos-network from trigonometric terms");
  exact->add_option("--terms", f.terms, "JSON list of {xi, amp_cos, amp_sin}")
      ->required()
      ->check(CLI::ExistingFile);
  exact->add_option("--out,-o", f.out, "checkpoint path")->required();

  auto* exportf = app.add_subcommand("export-field", "sample training observations to CSV");
  add_training_flags(exportf, f, local);
  exportf->add_option("--checkpoint", f.checkpoint, "evaluate this model instead of the truth");
  exportf->add_option("--out,-o", f.out, "CSV path (stdout if omitted)");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a validation set");
  add_training_flags(eval, f, local);
  eval->add_option("--checkpoint", f.checkpoint)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    fm::ExperimentConfig cfg;
    if (!f.config_path.empty()) {
      cfg = fm::experiment_config_from_json(fm::io::read_json(f.config_path));
    }
    global.apply(cfg);
    local.apply(cfg);

    if (*train) {
      cfg.experiment = fm::ExperimentKind::kTrain;
      cfg.repeats = 1;
      cfg.validate();
      const auto out = fm::run_single(cfg, cfg.train.seed,
                                      "train_seed" + std::to_string(cfg.train.seed));
      fm::RunRecord rec;
      rec.config = fm::experiment_config_to_json(cfg);
      rec.runs.push_back(out);
      rec.error = fm::aggregate({out.eval.rel_l2_error});
      rec.time_s = fm::aggregate({out.time_s});
      print(rec.to_json());
    } else if (*race) {
      if (!cfg.train.target_rel_error) cfg.train.target_rel_error = f.target;
      if (!cfg.train.wall_clock_budget_s) cfg.train.wall_clock_budget_s = f.budget;
      print(fm::run_race(cfg).to_json());
    } else if (*budget) {
      cfg.experiment = fm::ExperimentKind::kTimeBudget;
      if (!cfg.train.wall_clock_budget_s) cfg.train.wall_clock_budget_s = f.budget;
      print(fm::run_time_budget(cfg).to_json());
    } else if (*data) {
      print(fm::data_budget_to_json(fm::run_data_budget(cfg)));
    } else if (*verify) {
      fm::VerifyOptions opt;
      opt.seed = f.seed == 0 ? opt.seed : f.seed;
      opt.workers = cfg.train.workers;
      opt.corrupt_multiplier = f.corrupt_multiplier;
      const auto report = fm::run_verify(opt);
      print(report.to_json());
      if (!report.passed()) {
        std::cerr << "verify: " << report.first_violation() << '\n';
        return kVerifyFailed;
      }
    } else if (*gradcheck) {
      const auto report = fm::run_gradcheck({});
      print(report.to_json());
      if (!report.passed()) {
        std::cerr << "gradcheck: max relative error " << report.max_rel_error << '\n';
        return kVerifyFailed;
      }
    } else if (*exact) {
      const auto terms = fm::io::trig_terms_from_json(fm::io::read_json(f.terms));
      fm::io::write_json(f.out, fm::io::checkpoint_to_json(fm::assemble_cos_network(terms)));
    } else if (*exportf) {
      cfg.sampling.seed = cfg.train.seed;
      fm::ObservationSet obs = fm::sample_train(cfg.sampling);
      if (!f.checkpoint.empty()) {
        const auto params = fm::io::checkpoint_from_json(fm::io::read_json(f.checkpoint));
        obs.targets = fm::forward(params, obs.points, cfg.train.workers);
      }
      if (f.out.empty()) {
        fm::io::write_observations(std::cout, obs);
      } else {
        std::ofstream os(f.out);
        if (!os) throw std::runtime_error("cannot open " + f.out);
        fm::io::write_observations(os, obs);
      }
    } else if (*eval) {
      cfg.sampling.seed = cfg.train.seed;
      const auto params = fm::io::checkpoint_from_json(fm::io::read_json(f.checkpoint));
      const auto val = fm::sample_validation(cfg.sampling);
      fm::EvalReport report;
      report.rel_l2_error =
          fm::relative_l2(fm::forward(params, val.points, cfg.train.workers), val.targets);
      report.residual_rmse = fm::residual_error(params, val.points, cfg.train.workers);
      report.n_points = val.points.rows();
      print(fm::io::report_to_json(
          report, {std::string(fm::to_string(cfg.sampling.setup)),
                   fm::to_string(cfg.sampling.ground_truth), cfg.train.seed}));
    }
  } catch (const fm::NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kNumericalAbort;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}
