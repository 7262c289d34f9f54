#include "flashmax/ground_truth.hpp"
#include "flashmax/verify.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

#include <cmath>

namespace {

using namespace flashmax;

TEST(GroundTruth, HopfAtOriginIsExact) {
  const FieldSample f = hopf_fibration({0, 0, 0, 0});
  EXPECT_EQ(f.e, Eigen::Vector3d(-1, 0, 0));
  EXPECT_EQ(f.b, Eigen::Vector3d(0, 1, 0));
}

TEST(GroundTruth, ProfileAtCenter) {
  EXPECT_DOUBLE_EQ(wave_profile(0.3), -0.2);
  EXPECT_DOUBLE_EQ(wave_profile(0.7, 0.7), -0.2);
}

TEST(GroundTruth, PlaneWavesInvariantAlongCommonNullDirection) {
  // A shift v with d.v = 0 for all three wave directions d leaves every
  // profile argument, hence the field, unchanged.
  Eigen::Matrix<double, 3, 4> d;
  d << std::sqrt(3.0), 1, 1, 1,  //
      std::sqrt(3.0), -1, 1, 1,  //
      std::sqrt(6.0), -1, -2, 1;
  const Eigen::Vector4d v = d.fullPivLu().kernel().col(0);
  ASSERT_LE((d * v).norm(), 1e-12);
  ASSERT_GT(v.norm(), 0.1);
  const PointMatrix pts = uniform_points(50, 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Eigen::Vector4d x = pts.row(i).transpose();
    for (double tau : {-0.8, 0.35, 2.0}) {
      const FieldSample a = plane_waves(SpacetimePoint::from(x));
      const FieldSample b = plane_waves(SpacetimePoint::from(x + tau * v));
      EXPECT_LE((a.flat() - b.flat()).cwiseAbs().maxCoeff(), 1e-13);
    }
  }
  // A shift along one direction changes the field.
  const FieldSample a = plane_waves({0.1, 0.2, 0.3, 0.4});
  const FieldSample b = plane_waves({0.35, 0.2, 0.3, 0.4});
  EXPECT_GT((a.flat() - b.flat()).norm(), 1e-3);
}

TEST(GroundTruth, RandomSolutionMatchesReverseOrderSum) {
  const RandomSolutionSpec spec = RandomSolutionSpec::generate(5);
  const PointMatrix pts = uniform_points(30, 4);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const SpacetimePoint p = SpacetimePoint::from(pts.row(i).transpose());
    Vector6d ref = Vector6d::Zero();
    for (int k = RandomSolutionSpec::kCount - 1; k >= 0; --k) {
      const double z1 = spec.freq_params(k, 0), z2 = spec.freq_params(k, 1),
                   z3 = spec.freq_params(k, 2);
      const double z0 = std::sqrt(z1 * z1 + z2 * z2 + z3 * z3);
      const double s = z0 * p.t + z1 * p.x + z2 * p.y + z3 * p.z + spec.freq_params(k, 3);
      const double dd = (s - 0.3) * (s - 0.3);
      const double f = -0.2 * std::exp(-10 * dd) * (1 - 20 * dd);
      Vector6d a;
      a << z1 * z3 - z2 * z0, z2 * z3 + z1 * z0, z3 * z3 - z0 * z0,
          z0 * z2 + z1 * z3, -z0 * z1 + z2 * z3, -z1 * z1 - z2 * z2;
      ref += f * a;
    }
    EXPECT_LE((random_solution(spec, p).flat() - ref).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(GroundTruth, RandomSolutionDeterministicAndSeedSensitive) {
  const GroundTruth a(GroundTruthId::random_solution(9));
  const GroundTruth b(GroundTruthId::random_solution(9));
  const GroundTruth c(GroundTruthId::random_solution(10));
  const SpacetimePoint p{0.3, 0.1, 0.6, 0.2};
  EXPECT_EQ(a(p).flat(), b(p).flat());
  EXPECT_NE(a(p).flat(), c(p).flat());
}

TEST(GroundTruth, RandomSpecStatistics) {
  const RandomSolutionSpec spec = RandomSolutionSpec::generate(1);
  EXPECT_TRUE((spec.z0.array() >= 0.0).all());
  const auto z = spec.freq_params.leftCols<3>();
  const double sz = std::sqrt(z.squaredNorm() / 300.0);
  const double sb = std::sqrt(spec.freq_params.col(3).squaredNorm() / 100.0);
  // Standard deviations 0.1 and 1.
  EXPECT_NEAR(sz, 0.1, 0.02);
  EXPECT_NEAR(sb, 1.0, 0.25);
  for (int k = 0; k < RandomSolutionSpec::kCount; ++k) {
    EXPECT_DOUBLE_EQ(spec.z0[k], z.row(k).norm());
  }
}

TEST(GroundTruth, RadialSingularityGuard) {
  EXPECT_THROW(radial_waves({0.5, 0, 0, 0}), SingularityError);
  EXPECT_THROW(radial_waves({0.5, 1e-9, 0, 0}), SingularityError);
  EXPECT_TRUE(radial_waves({0.5, 0.1, 0, 0}).finite());
}

TEST(GroundTruth, NamesRoundTrip) {
  for (const GroundTruthId& id :
       {GroundTruthId::plane_waves(), GroundTruthId::radial_waves(),
        GroundTruthId::hopf_fibration(), GroundTruthId::random_solution(0)}) {
    EXPECT_EQ(parse_ground_truth(to_string(id)), id);
  }
  EXPECT_EQ(parse_ground_truth("hf"), GroundTruthId::hopf_fibration());
  EXPECT_EQ(parse_ground_truth("rs", 4), GroundTruthId::random_solution(4));
  EXPECT_THROW(parse_ground_truth("dipole"), std::invalid_argument);
}

TEST(GroundTruth, BatchEvaluateMatchesPointwise) {
  const GroundTruth gt(GroundTruthId::hopf_fibration());
  const PointMatrix pts = uniform_points(20, 8);
  const FieldMatrix m = gt.evaluate(pts);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    EXPECT_EQ(m.row(i).transpose(), gt(SpacetimePoint::from(pts.row(i).transpose())).flat());
  }
}

TEST(FdResidual, ConstantFieldIsZero) {
  const auto field = [](const SpacetimePoint&) {
    return FieldSample{Eigen::Vector3d(1, -2, 3), Eigen::Vector3d(0.5, 0.5, 0.5)};
  };
  EXPECT_LE(fd_residual(field, {0.3, 0.4, 0.5, 0.6}).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FdResidual, LinearDivergenceViolation) {
  const auto field = [](const SpacetimePoint& p) {
    return FieldSample{Eigen::Vector3d(p.x, 0, 0), Eigen::Vector3d::Zero()};
  };
  const Residual8 r = fd_residual(field, {0.3, 0.4, 0.5, 0.6});
  EXPECT_NEAR(r[6], 1.0, 1e-10);
  Residual8 rest = r;
  rest[6] = 0.0;
  EXPECT_LE(rest.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(fd_residual(field, {0, 0, 0, 0}, 0.0), std::invalid_argument);
}

TEST(FdResidual, PropagatesSingularity) {
  EXPECT_THROW(fd_residual(radial_waves, {0.2, 0, 0, 0}, 1e-4), SingularityError);
}

TEST(FdResidual, SecondOrderConvergenceForAllGroundTruths) {
  for (const GroundTruthId& id :
       {GroundTruthId::plane_waves(), GroundTruthId::radial_waves(),
        GroundTruthId::hopf_fibration(), GroundTruthId::random_solution(3)}) {
    const double r_min = id.kind == GroundTruthId::Kind::kRadialWaves ? 0.1 : 0.0;
    const ConvergenceCheck c =
        fd_convergence(GroundTruth(id), uniform_points(200, 31, r_min), 1e-3, 5e-4, 3.5, 4.5);
    EXPECT_TRUE(c.pass) << to_string(id) << " ratio " << c.ratio;
    // h = 1e-4 stays well above the roundoff floor and below C h^2.
    EXPECT_LT(c.max_fine, 1e-2) << to_string(id);
  }
}

}  // namespace
