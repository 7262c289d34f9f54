#include "flashmax/verify.hpp"

#include "flashmax/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace flashmax {

ModelParams random_model(int width_half, Activation activation,
                         std::uint64_t seed, double scale) {
  ModelParams p = ModelParams::zeros(width_half, activation);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  for (auto& br : p.branches) {
    for (Eigen::Index k = 0; k < br.size(); ++k) {
      for (int j = 0; j < 3; ++j) br.spatial_freqs(k, j) = dist(rng);
      br.out_weights[k] = dist(rng);
      br.biases[k] = dist(rng);
    }
  }
  return p;
}

PointMatrix uniform_points(int n, std::uint64_t seed, double r_min) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointMatrix pts(n, 4);
  for (int i = 0; i < n; ++i) {
    do {
      for (int j = 0; j < 4; ++j) pts(i, j) = unit(rng);
    } while (pts.row(i).tail<3>().norm() < r_min);
  }
  return pts;
}

ConvergenceCheck fd_convergence(const GroundTruth& gt, const PointMatrix& points,
                                double h_coarse, double h_fine, double ratio_lo,
                                double ratio_hi) {
  ConvergenceCheck c;
  c.ground_truth = to_string(gt.id());
  const auto field = [&gt](const SpacetimePoint& x) { return gt(x); };
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const auto x = SpacetimePoint::from(points.row(i).transpose());
    c.max_coarse = std::max(c.max_coarse,
                            fd_residual(field, x, h_coarse).cwiseAbs().maxCoeff());
    c.max_fine =
        std::max(c.max_fine, fd_residual(field, x, h_fine).cwiseAbs().maxCoeff());
  }
  c.ratio = c.max_fine > 0.0 ? c.max_coarse / c.max_fine : 0.0;
  c.pass = c.ratio >= ratio_lo && c.ratio <= ratio_hi;
  return c;
}

namespace {

Vector6d corrupted_multiplier(BranchId id, const FrequencyVector& z) {
  Vector6d p = noetherian_multiplier(id, z);
  if (id == BranchId::kOne) p[3] = -p[3];
  return p;
}

double ulp(double x) {
  x = std::abs(x);
  return std::nextafter(x, std::numeric_limits<double>::infinity()) - x;
}

}  // namespace

bool VerifyReport::passed() const { return first_violation().empty(); }

std::string VerifyReport::first_violation() const {
  std::ostringstream os;
  for (const auto& r : residuals) {
    if (!r.pass) {
      os << "model residual at width_half=" << r.width_half
         << ": max |r| = " << r.max_abs_residual << " > bound " << r.bound;
      return os.str();
    }
  }
  for (const auto& c : convergence) {
    if (!c.pass) {
      os << "fd convergence for " << c.ground_truth << ": ratio " << c.ratio
         << " outside [3.5, 4.5]";
      return os.str();
    }
  }
  if (!multiplier_pass) {
    os << "multiplier on-variety gap " << multiplier_gap_ulps << " ulps > 4";
    return os.str();
  }
  return {};
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed();
  for (const auto& r : residuals) {
    j["model_residual"].push_back({{"width_half", r.width_half},
                                   {"max_abs_residual", r.max_abs_residual},
                                   {"max_field", r.max_field},
                                   {"bound", r.bound},
                                   {"pass", r.pass}});
  }
  for (const auto& c : convergence) {
    j["fd_convergence"].push_back({{"ground_truth", c.ground_truth},
                                   {"max_coarse", c.max_coarse},
                                   {"max_fine", c.max_fine},
                                   {"ratio", c.ratio},
                                   {"pass", c.pass}});
  }
  j["multiplier_gap_ulps"] = multiplier_gap_ulps;
  j["multiplier_pass"] = multiplier_pass;
  if (!passed()) j["violation"] = first_violation();
  return j;
}

VerifyReport run_verify(const VerifyOptions& options) {
  VerifyReport report;

  const PointMatrix points =
      uniform_points(options.residual_points, options.seed);
  for (int width : options.widths) {
    const ModelParams params =
        random_model(width, options.activation, options.seed + static_cast<std::uint64_t>(width));
    ResidualCheck rc;
    rc.width_half = width;
    rc.max_field = forward(params, points, options.workers).cwiseAbs().maxCoeff();
    if (options.corrupt_multiplier) {
      for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const auto x = SpacetimePoint::from(points.row(i).transpose());
        rc.max_abs_residual = std::max(
            rc.max_abs_residual,
            model_residual_with(params, x, corrupted_multiplier).cwiseAbs().maxCoeff());
      }
    } else {
      rc.max_abs_residual =
          model_residual(params, points, options.workers).cwiseAbs().maxCoeff();
    }
    rc.bound = options.residual_tol * (1.0 + rc.max_field);
    rc.pass = rc.max_abs_residual <= rc.bound;
    report.residuals.push_back(rc);
  }

  for (const GroundTruthId& id :
       {GroundTruthId::plane_waves(), GroundTruthId::radial_waves(),
        GroundTruthId::hopf_fibration(),
        GroundTruthId::random_solution(options.seed)}) {
    const double r_min =
        id.kind == GroundTruthId::Kind::kRadialWaves ? options.radial_min_r : 0.0;
    const PointMatrix pts = uniform_points(options.fd_points, options.seed + 1, r_min);
    report.convergence.push_back(fd_convergence(GroundTruth(id), pts,
                                                options.fd_h_coarse, options.fd_h_fine,
                                                options.ratio_lo, options.ratio_hi));
  }

  std::mt19937_64 rng(options.seed + 2);
  std::normal_distribution<double> dist(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < options.multiplier_samples; ++i) {
    const Eigen::Vector3d s(dist(rng), dist(rng), dist(rng));
    const FrequencyVector f = lift_frequency(s, i % 2 == 0 ? 1 : -1);
    const double z0 = f.z[0], z1 = f.z[1], z2 = f.z[2], z3 = f.z[3];
    const double literal = z0 * z0 - z3 * z3;
    const double variety = z1 * z1 + z2 * z2;
    worst = std::max(worst, std::abs(literal - variety) / ulp(z0 * z0));
  }
  report.multiplier_gap_ulps = worst;
  report.multiplier_pass = worst <= 4.0;
  return report;
}

ObservationSet random_observations(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  ObservationSet obs;
  obs.points.resize(n, 4);
  obs.targets.resize(n, 6);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) obs.points(i, j) = unit(rng);
    for (int j = 0; j < 6; ++j) obs.targets(i, j) = normal(rng);
  }
  obs.masks.assign(static_cast<std::size_t>(n), kFullMask);
  return obs;
}

GradientBundle numerical_gradient(const ModelParams& params,
                                  const ObservationSet& obs, double step) {
  GradientBundle g = GradientBundle::zeros_like(params);
  ModelParams work = params;
  auto central = [&](double& entry) {
    const double saved = entry;
    entry = saved + step;
    const double up = masked_mse_loss(work, obs);
    entry = saved - step;
    const double down = masked_mse_loss(work, obs);
    entry = saved;
    return (up - down) / (2.0 * step);
  };
  for (int b = 0; b < 2; ++b) {
    auto& br = work.branches[b];
    auto& gb = g.branches[b];
    for (Eigen::Index k = 0; k < br.size(); ++k) {
      for (int j = 0; j < 3; ++j) gb.spatial_freqs(k, j) = central(br.spatial_freqs(k, j));
      gb.out_weights[k] = central(br.out_weights[k]);
      gb.biases[k] = central(br.biases[k]);
    }
  }
  return g;
}

double max_relative_error(const GradientBundle& analytic,
                          const GradientBundle& numeric, double floor) {
  double worst = 0.0;
  auto visit = [&](const auto& a, const auto& n) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double x = a.data()[i];
      const double y = n.data()[i];
      const double denom = std::max({std::abs(x), std::abs(y), floor});
      worst = std::max(worst, std::abs(x - y) / denom);
    }
  };
  for (int b = 0; b < 2; ++b) {
    visit(analytic.branches[b].spatial_freqs, numeric.branches[b].spatial_freqs);
    visit(analytic.branches[b].out_weights, numeric.branches[b].out_weights);
    visit(analytic.branches[b].biases, numeric.branches[b].biases);
  }
  return worst;
}

double block_relative_error(const GradientBundle& analytic,
                            const GradientBundle& numeric, double floor) {
  double worst = 0.0;
  auto visit = [&](const auto& a, const auto& n) {
    const double denom = std::max({a.norm(), n.norm(), floor});
    worst = std::max(worst, (a - n).norm() / denom);
  };
  for (int b = 0; b < 2; ++b) {
    visit(analytic.branches[b].spatial_freqs, numeric.branches[b].spatial_freqs);
    visit(analytic.branches[b].out_weights, numeric.branches[b].out_weights);
    visit(analytic.branches[b].biases, numeric.branches[b].biases);
  }
  return worst;
}

bool GradcheckReport::passed() const {
  return max_rel_error <= tol && bias_formula_error <= tol &&
         zero_model_zero_gradient;
}

nlohmann::json GradcheckReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed();
  j["max_rel_error"] = max_rel_error;
  j["max_entry_rel_error"] = max_entry_rel_error;
  j["tolerance"] = tol;
  j["bias_formula_error"] = bias_formula_error;
  j["zero_model_zero_gradient"] = zero_model_zero_gradient;
  for (const auto& c : cases) {
    j["cases"].push_back({{"width_half", c.width_half},
                          {"activation", std::string(to_string(c.activation))},
                          {"seed", c.seed},
                          {"max_rel_error", c.max_rel_error},
                          {"max_entry_rel_error", c.max_entry_rel_error}});
  }
  return j;
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  GradcheckReport report;
  report.tol = options.tol;
  for (int width : options.widths) {
    for (Activation act : options.activations) {
      for (std::uint64_t seed : options.seeds) {
        const ModelParams params = random_model(width, act, seed);
        const ObservationSet obs =
            random_observations(options.n_observations, seed + 1000);
        const GradientBundle analytic = loss_gradient(params, obs).gradient;
        const GradientBundle numeric = numerical_gradient(params, obs, options.step);
        GradcheckCase c{width, act, seed,
                        block_relative_error(analytic, numeric,
                                             options.denominator_floor),
                        max_relative_error(analytic, numeric,
                                           options.denominator_floor)};
        report.max_rel_error = std::max(report.max_rel_error, c.max_rel_error);
        report.max_entry_rel_error =
            std::max(report.max_entry_rel_error, c.max_entry_rel_error);
        report.cases.push_back(c);
      }
    }
  }

  {
    // One neuron in branch 1 (sign +1), everything else zero.
    ModelParams p = ModelParams::zeros(1, Activation::kTanh);
    auto& br = p.branch(BranchId::kOne);
    br.spatial_freqs.row(0) << 0.7, -0.4, 0.9;
    br.out_weights[0] = 1.3;
    br.biases[0] = 0.2;
    const ObservationSet obs = random_observations(1, 99);
    const double bias_grad = loss_gradient(p, obs).gradient.branches[0].biases[0];

    const FrequencyVector f = lift_frequency(br.spatial_freqs.row(0).transpose(), 1);
    const Vector6d mult = noetherian_multiplier(BranchId::kOne, f);
    const double pre = obs.points.row(0).dot(f.z.transpose()) + br.biases[0];
    const Vector6d pred = br.out_weights[0] * std::tanh(pre) * mult;
    const double slope = 1.0 - std::tanh(pre) * std::tanh(pre);
    double expected = 0.0;
    for (int c = 0; c < 6; ++c) {
      expected += 2.0 * (pred[c] - obs.targets(0, c)) * slope *
                  br.out_weights[0] * mult[c] / 6.0;
    }
    report.bias_formula_error =
        std::abs(bias_grad - expected) / std::max(std::abs(expected), 1e-12);
  }

  {
    ModelParams p = random_model(4, Activation::kTanh, 5);
    for (auto& br : p.branches) br.out_weights.setZero();
    ObservationSet obs = random_observations(10, 6);
    obs.targets.setZero();
    const LossAndGradient lg = loss_gradient(p, obs);
    report.zero_model_zero_gradient = lg.loss == 0.0 && lg.gradient.max_abs() == 0.0;
  }
  return report;
}

}  // namespace flashmax
