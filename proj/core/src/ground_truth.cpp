#include "flashmax/ground_truth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace flashmax {

std::string to_string(const GroundTruthId& id) {
  switch (id.kind) {
    case GroundTruthId::Kind::kPlaneWaves:
      return "plane_waves";
    case GroundTruthId::Kind::kRadialWaves:
      return "radial_waves";
    case GroundTruthId::Kind::kHopfFibration:
      return "hopf_fibration";
    case GroundTruthId::Kind::kRandomSolution:
      return "random_solution";
  }
  return "unknown";
}

GroundTruthId parse_ground_truth(std::string_view name, std::uint64_t seed) {
  if (name == "plane_waves" || name == "pw") return GroundTruthId::plane_waves();
  if (name == "radial_waves" || name == "rw") return GroundTruthId::radial_waves();
  if (name == "hopf_fibration" || name == "hf" || name == "hopf") {
    return GroundTruthId::hopf_fibration();
  }
  if (name == "random_solution" || name == "rs") {
    return GroundTruthId::random_solution(seed);
  }
  throw std::invalid_argument("unknown ground truth: " + std::string(name));
}

RandomSolutionSpec RandomSolutionSpec::generate(std::uint64_t seed) {
  RandomSolutionSpec spec;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> freq(0.0, 0.1);
  std::normal_distribution<double> shift(0.0, 1.0);
  for (int k = 0; k < kCount; ++k) {
    spec.freq_params(k, 0) = freq(rng);
    spec.freq_params(k, 1) = freq(rng);
    spec.freq_params(k, 2) = freq(rng);
    spec.freq_params(k, 3) = shift(rng);
    spec.z0[k] = spec.freq_params.row(k).head<3>().norm();
  }
  return spec;
}

double wave_profile(double s, double center) {
  const double d2 = (s - center) * (s - center);
  return -0.2 * std::exp(-10.0 * d2) * (1.0 - 20.0 * d2);
}

FieldSample plane_waves(const SpacetimePoint& p) {
  const double r3 = std::sqrt(3.0);
  const double r6 = std::sqrt(6.0);
  const double f1 = wave_profile(r3 * p.t + p.x + p.y + p.z);
  const double f2 = wave_profile(r3 * p.t - p.x + p.y + p.z);
  const double f3 = wave_profile(r6 * p.t - p.x - 2.0 * p.y + p.z);
  FieldSample out;
  out.e << (1 - r3) * f1 - (1 + r3) * f2 + (1 - 2 * r6) * f3,
      (1 + r3) * f1 + (1 - r3) * f2 + (2 + r6) * f3,  //
      -2 * f1 - 2 * f2 + 5 * f3;
  out.b << (r3 + 1) * f1 + (r3 - 1) * f2 + (2 * r6 + 1) * f3,
      (1 - r3) * f1 + (1 + r3) * f2 + (2 - r6) * f3,  //
      -2 * f1 - 2 * f2 + 5 * f3;
  return out;
}

FieldSample radial_waves(const SpacetimePoint& p) {
  const double x = p.x, y = p.y, z = p.z;
  const double r = std::sqrt(x * x + y * y + z * z);
  if (r < 1e-8) {
    throw SingularityError("radial waves are singular at r = 0");
  }
  const double s = r - p.t;
  const double d = s - 0.7;
  const double gauss = std::exp(-10.0 * d * d);
  // Profile and its derivatives, each as its own closed form.
  const double f = 0.01 * gauss;
  const double fp = -0.2 * d * gauss;
  const double fpp = -0.2 * gauss * (1.0 - 20.0 * d * d);
  const double r2 = r * r, r3 = r2 * r, r4 = r3 * r, r5 = r4 * r;
  const double g = fp / r2 - f / r3;
  const double h = fpp / r3 - 3.0 * fp / r4 + 3.0 * f / r5;
  const double q = -fpp / r2 + fp / r3;
  FieldSample out;
  out.e << 10.0 * (x * z * h - y * q), 10.0 * (y * z * h + x * q),
      10.0 * (g + z * z * h - fpp / r);
  out.b << 10.0 * (y * q + x * z * h), 10.0 * (-x * q + y * z * h),
      10.0 * (-2.0 * g - (x * x + y * y) * h);
  return out;
}

FieldSample hopf_fibration(const SpacetimePoint& p) {
  const double t = p.t, x = p.x, y = p.y, z = p.z;
  const double a = 1.0 + x * x + y * y + z * z - t * t;
  const double t1 = a * a * a - 12.0 * t * t * a;
  const double t2 = 8.0 * t * t * t - 6.0 * t * a * a;
  const double base = a * a + 4.0 * t * t;
  const double d = base * base * base;
  const double u = t - z;
  FieldSample out;
  out.e << (t1 * (u * u - 1.0 - x * x + y * y) - t2 * (2.0 * x * y - 2.0 * u)) / d,
      (t1 * (-2.0 * x * y - 2.0 * u) - t2 * (1.0 - u * u - x * x + y * y)) / d,
      (t1 * (2.0 * x * u - 2.0 * y) + t2 * (2.0 * x + 2.0 * y * u)) / d;
  out.b << (t2 * (u * u - 1.0 - x * x + y * y) + t1 * (2.0 * x * y - 2.0 * u)) / d,
      (t2 * (-2.0 * x * y - 2.0 * u) + t1 * (1.0 - u * u - x * x + y * y)) / d,
      (t2 * (2.0 * x * u - 2.0 * y) - t1 * (2.0 * x + 2.0 * y * u)) / d;
  return out;
}

FieldSample random_solution(const RandomSolutionSpec& spec,
                            const SpacetimePoint& p) {
  FieldSample out;
  for (int k = 0; k < RandomSolutionSpec::kCount; ++k) {
    const double z1 = spec.freq_params(k, 0);
    const double z2 = spec.freq_params(k, 1);
    const double z3 = spec.freq_params(k, 2);
    const double z0 = spec.z0[k];
    const double s =
        z0 * p.t + z1 * p.x + z2 * p.y + z3 * p.z + spec.freq_params(k, 3);
    const double f = wave_profile(s);
    out.e += f * Eigen::Vector3d(z1 * z3 - z2 * z0, z2 * z3 + z1 * z0,
                                 z3 * z3 - z0 * z0);
    out.b += f * Eigen::Vector3d(z0 * z2 + z1 * z3, -z0 * z1 + z2 * z3,
                                 -z1 * z1 - z2 * z2);
  }
  return out;
}

GroundTruth::GroundTruth(GroundTruthId id) : id_(id) {
  if (id_.kind == GroundTruthId::Kind::kRandomSolution) {
    random_ = std::make_shared<const RandomSolutionSpec>(
        RandomSolutionSpec::generate(id_.seed));
  }
}

FieldSample GroundTruth::operator()(const SpacetimePoint& x) const {
  switch (id_.kind) {
    case GroundTruthId::Kind::kPlaneWaves:
      return plane_waves(x);
    case GroundTruthId::Kind::kRadialWaves:
      return radial_waves(x);
    case GroundTruthId::Kind::kHopfFibration:
      return hopf_fibration(x);
    case GroundTruthId::Kind::kRandomSolution:
      return random_solution(*random_, x);
  }
  return {};
}

FieldMatrix GroundTruth::evaluate(const PointMatrix& points) const {
  FieldMatrix out(points.rows(), 6);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out.row(i) =
        (*this)(SpacetimePoint::from(points.row(i).transpose())).flat().transpose();
  }
  return out;
}

FieldSample eval_ground_truth(const GroundTruthId& id, const SpacetimePoint& x) {
  return GroundTruth(id)(x);
}

Residual8 fd_residual(
    const std::function<FieldSample(const SpacetimePoint&)>& field,
    const SpacetimePoint& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_residual: h must be > 0");
  // d[i] = d/dx_i of the 6-vector field, i over (t, x, y, z).
  std::array<Vector6d, 4> d;
  const Eigen::Vector4d xv = x.vec();
  for (int i = 0; i < 4; ++i) {
    Eigen::Vector4d lo = xv, hi = xv;
    lo[i] -= h;
    hi[i] += h;
    d[i] = (field(SpacetimePoint::from(hi)).flat() -
            field(SpacetimePoint::from(lo)).flat()) /
           (2.0 * h);
  }
  const auto& dt = d[0];
  const auto& dx = d[1];
  const auto& dy = d[2];
  const auto& dz = d[3];
  // curl of the 3-vector stored at offset o.
  auto curl = [&](int o) {
    return Eigen::Vector3d(dy[o + 2] - dz[o + 1], dz[o] - dx[o + 2],
                           dx[o + 1] - dy[o]);
  };
  Residual8 r;
  r.head<3>() = dt.head<3>() - curl(3);
  r.segment<3>(3) = dt.tail<3>() + curl(0);
  r[6] = dx[0] + dy[1] + dz[2];
  r[7] = dx[3] + dy[4] + dz[5];
  return r;
}

}  // namespace flashmax
