#pragma once

#include "flashmax/model.hpp"

#include <Eigen/Core>

#include <vector>

namespace flashmax {

using PMatrix = Eigen::Matrix<double, 6, 4>;

/// One divergence-free trigonometric mode at t = 0:
///   amp_cos * cos(xi . x) + amp_sin * sin(xi . x),
/// with both amplitudes in ker R(xi) (E and B parts orthogonal to xi).
struct TrigTerm {
  Eigen::Vector3d xi = Eigen::Vector3d::UnitX();
  Vector6d amp_cos = Vector6d::Zero();
  Vector6d amp_sin = Vector6d::Zero();

  /// Throws RankDeficiencyError if |xi1| < 1e-8 and InfeasibleAmplitudeError
  /// if an amplitude leaves ker R(xi) by more than 1e-12 (relative).
  void validate() const;
  Vector6d evaluate(const Eigen::Vector3d& x) const;
};

/// The divergence symbol R(xi): rows (xi, 0) and (0, xi).
Eigen::Matrix<double, 2, 6> divergence_symbol(const Eigen::Vector3d& xi);

/// Columns p1(|xi|,xi), p2(|xi|,xi), p1(-|xi|,xi), p2(-|xi|,xi).
/// Throws std::invalid_argument for xi = 0.
PMatrix build_P(const Eigen::Vector3d& xi);

/// Coefficients c with P(xi) c = amplitude, via Householder QR.
/// Throws RankDeficiencyError when |xi1| < 1e-8 and InfeasibleAmplitudeError
/// when the amplitude is not in ker R(xi) (tolerance 1e-10).
Eigen::Vector4d solve_coefficients(const Eigen::Vector3d& xi,
                                   const Vector6d& amplitude);

/// A cos-activation network reproducing the sum of the terms at t = 0. Each
/// term uses four neurons per branch: cos and sin (bias -pi/2) on both light
/// cone sheets, so width_half = 2 * terms.size().
ModelParams assemble_cos_network(const std::vector<TrigTerm>& terms);

}  // namespace flashmax
