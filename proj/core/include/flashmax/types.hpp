#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flashmax {

/// A spacetime coordinate (t, x, y, z) in normalized units.
struct SpacetimePoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Eigen::Vector4d vec() const { return {t, x, y, z}; }
  static SpacetimePoint from(const Eigen::Vector4d& v) {
    return {v[0], v[1], v[2], v[3]};
  }
  bool finite() const;
  friend bool operator==(const SpacetimePoint&, const SpacetimePoint&) = default;
};

/// Electric and magnetic field at one point, flattened as (E1,E2,E3,B1,B2,B3).
struct FieldSample {
  Eigen::Vector3d e = Eigen::Vector3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();

  using Vector6d = Eigen::Matrix<double, 6, 1>;

  Vector6d flat() const {
    Vector6d v;
    v << e, b;
    return v;
  }
  static FieldSample from(const Vector6d& v) {
    return {v.head<3>(), v.tail<3>()};
  }
  double operator[](int c) const { return c < 3 ? e[c] : b[c - 3]; }
  bool finite() const { return e.allFinite() && b.allFinite(); }
};

using Vector6d = Eigen::Matrix<double, 6, 1>;
/// Maxwell residual (dtE - curl B, dtB + curl E, div E, div B).
using Residual8 = Eigen::Matrix<double, 8, 1>;

/// Row-major batch of points, one (t,x,y,z) per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;
/// Row-major batch of fields, one (E,B) per row.
using FieldMatrix = Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor>;

PointMatrix to_matrix(const std::vector<SpacetimePoint>& points);
FieldMatrix to_matrix(const std::vector<FieldSample>& fields);
std::vector<FieldSample> to_fields(const FieldMatrix& m);

enum class Activation { kTanh, kCos, kRelu, kSilu, kGelu, kSigmoid };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

// Error hierarchy. Everything derives from std::runtime_error or
// std::invalid_argument so callers can catch coarsely.

class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class RankDeficiencyError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InfeasibleAmplitudeError : public std::domain_error {
 public:
  InfeasibleAmplitudeError(const std::string& what, double residual)
      : std::domain_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace flashmax
