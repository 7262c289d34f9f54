#pragma once

#include "flashmax/ground_truth.hpp"
#include "flashmax/model.hpp"
#include "flashmax/train.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace flashmax {

/// Parameters with every trainable entry drawn from N(0, scale^2) and the
/// canonical sign layout. Used by the residual and gradient checks, where
/// init_params' small frequencies would make the checks too easy.
ModelParams random_model(int width_half, Activation activation,
                         std::uint64_t seed, double scale = 1.0);

struct VerifyOptions {
  std::vector<int> widths = {1, 16, 128, 1024};
  Activation activation = Activation::kTanh;
  int residual_points = 10'000;
  std::uint64_t seed = 7;
  /// Every residual component must satisfy |r| <= tol * (1 + max |field|).
  double residual_tol = 1e-8;
  double fd_h_coarse = 1e-3;
  double fd_h_fine = 5e-4;
  int fd_points = 200;
  double ratio_lo = 3.5;
  double ratio_hi = 4.5;
  /// Minimum radius for radial-wave sample points.
  double radial_min_r = 0.1;
  int multiplier_samples = 10'000;
  /// Mutation hook: flip the sign of p1's fourth component in the residual
  /// check. A correct harness must then report a violation.
  bool corrupt_multiplier = false;
  int workers = 1;
};

struct ResidualCheck {
  int width_half = 0;
  double max_abs_residual = 0.0;
  double max_field = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct ConvergenceCheck {
  std::string ground_truth;
  double max_coarse = 0.0;
  double max_fine = 0.0;
  double ratio = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<ResidualCheck> residuals;
  std::vector<ConvergenceCheck> convergence;
  /// Largest |(z0^2 - z3^2) - (z1^2 + z2^2)| in units of ulp(z0^2).
  double multiplier_gap_ulps = 0.0;
  bool multiplier_pass = false;

  bool passed() const;
  /// Human-readable description of the first violated bound, or empty.
  std::string first_violation() const;
  nlohmann::json to_json() const;
};

/// Uniform points in [0,1]^4; radial-wave points are rejected below r_min.
PointMatrix uniform_points(int n, std::uint64_t seed, double r_min = 0.0);

/// Samples from max over points of |fd_residual| at two step sizes; the
/// ratio approaches 4 for a second-order stencil applied to an exact
/// solution.
ConvergenceCheck fd_convergence(const GroundTruth& gt, const PointMatrix& points,
                                double h_coarse, double h_fine, double ratio_lo,
                                double ratio_hi);

VerifyReport run_verify(const VerifyOptions& options);

struct GradcheckOptions {
  std::vector<int> widths = {1, 4, 16};
  std::vector<Activation> activations = {Activation::kTanh, Activation::kCos,
                                         Activation::kSilu};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  int n_observations = 20;
  double step = 1e-5;
  double tol = 1e-5;
  double denominator_floor = 1e-8;
};

struct GradcheckCase {
  int width_half = 0;
  Activation activation = Activation::kTanh;
  std::uint64_t seed = 0;
  /// Largest block_relative_error; decides pass or fail.
  double max_rel_error = 0.0;
  /// Largest entrywise error. Diagnostic only: central differences resolve
  /// entries only to about eps * loss / step in absolute terms.
  double max_entry_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  double max_rel_error = 0.0;
  double max_entry_rel_error = 0.0;
  /// Single neuron, single observation: analytic bias gradient against the
  /// hand-derived formula.
  double bias_formula_error = 0.0;
  /// Zero weights on zero targets must give an exactly zero gradient.
  bool zero_model_zero_gradient = false;
  double tol = 0.0;

  bool passed() const;
  nlohmann::json to_json() const;
};

/// Random observation set with full masks for gradient checks.
ObservationSet random_observations(int n, std::uint64_t seed);

/// Central-difference gradient of masked_mse_loss, entry by entry.
GradientBundle numerical_gradient(const ModelParams& params,
                                  const ObservationSet& obs, double step);

/// max over entries of |a - n| / max(|a|, |n|, floor).
double max_relative_error(const GradientBundle& analytic,
                          const GradientBundle& numeric, double floor);
/// max over parameter blocks (spatial frequencies, output weights, biases
/// of each branch) of |a - n|_2 / max(|a|_2, |n|_2, floor).
double block_relative_error(const GradientBundle& analytic,
                            const GradientBundle& numeric, double floor);

GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace flashmax
