#pragma once

#include "flashmax/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace flashmax {

/// Which closed-form benchmark solution to evaluate.
struct GroundTruthId {
  enum class Kind { kPlaneWaves, kRadialWaves, kHopfFibration, kRandomSolution };
  Kind kind = Kind::kPlaneWaves;
  std::uint64_t seed = 0;  // only meaningful for kRandomSolution

  static GroundTruthId plane_waves() { return {Kind::kPlaneWaves, 0}; }
  static GroundTruthId radial_waves() { return {Kind::kRadialWaves, 0}; }
  static GroundTruthId hopf_fibration() { return {Kind::kHopfFibration, 0}; }
  static GroundTruthId random_solution(std::uint64_t seed) {
    return {Kind::kRandomSolution, seed};
  }
  friend bool operator==(const GroundTruthId&, const GroundTruthId&) = default;
};

std::string to_string(const GroundTruthId& id);
/// Accepts plane_waves|radial_waves|hopf_fibration|random_solution and the
/// short forms pw|rw|hf|rs. The random seed is supplied separately.
GroundTruthId parse_ground_truth(std::string_view name, std::uint64_t seed = 0);

/// One hundred random plane waves: rows (z1, z2, z3, b) with
/// z ~ N(0, 0.1^2) and b ~ N(0, 1), drawn in that order per wave.
struct RandomSolutionSpec {
  static constexpr int kCount = 100;
  Eigen::Matrix<double, kCount, 4, Eigen::RowMajor> freq_params;
  Eigen::Matrix<double, kCount, 1> z0;  // |(z1,z2,z3)|

  static RandomSolutionSpec generate(std::uint64_t seed);
};

/// Plane-wave profile F(s) = -0.2 exp(-10 (s-c)^2) (1 - 20 (s-c)^2).
double wave_profile(double s, double center = 0.3);

/// Evaluable ground-truth field. Copies share the random-wave table.
class GroundTruth {
 public:
  explicit GroundTruth(GroundTruthId id);

  const GroundTruthId& id() const { return id_; }
  /// Throws SingularityError for radial waves within 1e-8 of the origin.
  FieldSample operator()(const SpacetimePoint& x) const;
  FieldMatrix evaluate(const PointMatrix& points) const;
  const RandomSolutionSpec* random_spec() const { return random_.get(); }

 private:
  GroundTruthId id_;
  std::shared_ptr<const RandomSolutionSpec> random_;
};

FieldSample eval_ground_truth(const GroundTruthId& id, const SpacetimePoint& x);

FieldSample plane_waves(const SpacetimePoint& x);
FieldSample radial_waves(const SpacetimePoint& x);
FieldSample hopf_fibration(const SpacetimePoint& x);
FieldSample random_solution(const RandomSolutionSpec& spec,
                            const SpacetimePoint& x);

/// Central-difference Maxwell residual (dtE - curl B, dtB + curl E, div E,
/// div B) on the 8-point stencil x +- h e_i. Second-order accurate.
Residual8 fd_residual(const std::function<FieldSample(const SpacetimePoint&)>& field,
                      const SpacetimePoint& x, double h = 1e-4);

}  // namespace flashmax
