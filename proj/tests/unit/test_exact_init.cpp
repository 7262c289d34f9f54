#include "flashmax/exact_init.hpp"
#include "flashmax/verify.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <cmath>
#include <random>

namespace {

using namespace flashmax;

Eigen::Vector3d random_xi(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 2.0);
  std::uniform_real_distribution<double> mag(0.1, 3.0);
  std::bernoulli_distribution flip(0.5);
  return {flip(rng) ? mag(rng) : -mag(rng), g(rng), g(rng)};
}

Vector6d in_kernel(const Eigen::Vector3d& xi, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector6d a;
  for (int i = 0; i < 6; ++i) a[i] = g(rng);
  const Eigen::Vector3d n = xi.normalized();
  a.head<3>() -= n * n.dot(a.head<3>());
  a.tail<3>() -= n * n.dot(a.tail<3>());
  return a;
}

int rank_of(const PMatrix& p) {
  Eigen::JacobiSVD<PMatrix> svd(p);
  const auto s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s[i] > 1e-12 * s[0] ? 1 : 0;
  return r;
}

TEST(BuildP, FirstColumnExample) {
  const PMatrix p = build_P({1, 0, 0});
  Vector6d want;
  want << 0, 0, 1, 0, 1, 0;
  EXPECT_EQ(Vector6d(p.col(0)), want);
}

TEST(BuildP, RankFourOffDegenerateSet) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(rank_of(build_P(random_xi(rng))), 4);
  EXPECT_LT(rank_of(build_P({0, 1, 0})), 4);
  EXPECT_THROW(build_P(Eigen::Vector3d::Zero()), std::invalid_argument);
}

TEST(BuildP, ImageInsideDivergenceKernel) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d xi = random_xi(rng);
    const PMatrix p = build_P(xi);
    EXPECT_LE((divergence_symbol(xi) * p).cwiseAbs().maxCoeff(),
              1e-12 * std::max(1.0, std::pow(xi.norm(), 3)));
  }
}

TEST(SolveCoefficients, Examples) {
  const Eigen::Vector3d xi(0.7, -0.4, 1.1);
  const PMatrix p = build_P(xi);
  const Eigen::Vector4d c = solve_coefficients(xi, p.col(0));
  EXPECT_LE((c - Eigen::Vector4d(1, 0, 0, 0)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(solve_coefficients(xi, Vector6d::Zero()), Eigen::Vector4d::Zero());
}

TEST(SolveCoefficients, ReproducesRandomKernelAmplitudes) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d xi = random_xi(rng);
    const Vector6d a = in_kernel(xi, rng);
    const Eigen::Vector4d c = solve_coefficients(xi, a);
    EXPECT_LE((build_P(xi) * c - a).norm(), 1e-9 * a.norm());
  }
}

TEST(SolveCoefficients, Errors) {
  Vector6d a = Vector6d::Zero();
  a[2] = 1.0;
  EXPECT_THROW(solve_coefficients({0, 1, 0}, a), RankDeficiencyError);
  EXPECT_THROW(solve_coefficients({1e-9, 1, 0}, a), RankDeficiencyError);
  Vector6d bad = Vector6d::Zero();
  bad[0] = 1.0;  // E parallel to xi
  try {
    solve_coefficients({1, 0, 0}, bad);
    FAIL() << "expected InfeasibleAmplitudeError";
  } catch (const InfeasibleAmplitudeError& e) {
    EXPECT_NEAR(e.residual(), 1.0, 1e-12);
  }
}

TEST(TrigTerm, Validate) {
  TrigTerm t;
  t.xi = {1, 0, 0};
  t.amp_cos << 0, 1, 0, 0, 0, 1;
  EXPECT_NO_THROW(t.validate());
  t.amp_sin << 1, 0, 0, 0, 0, 0;
  EXPECT_THROW(t.validate(), InfeasibleAmplitudeError);
  t.amp_sin.setZero();
  t.xi = {0, 1, 0};
  t.amp_cos << 1, 0, 0, 0, 0, 1;
  EXPECT_THROW(t.validate(), RankDeficiencyError);
}

TEST(Assemble, EmptyListGivesZeroNetwork) {
  const ModelParams p = assemble_cos_network({});
  EXPECT_EQ(p.width_half, 0);
  EXPECT_EQ(forward(p, SpacetimePoint{0.1, 0.2, 0.3, 0.4}).flat(), Vector6d::Zero());
}

TEST(Assemble, SingleTermExample) {
  TrigTerm t;
  t.xi = {1, 0, 0};
  t.amp_cos << 0, 1, 0, 0, 0, 1;
  const ModelParams p = assemble_cos_network({t});
  EXPECT_EQ(p.width_half, 2);
  EXPECT_EQ(p.activation, Activation::kCos);
  EXPECT_NO_THROW(p.validate());
  const PointMatrix pts = uniform_points(100, 6);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double x = pts(i, 1);
    Vector6d want;
    want << 0, std::cos(x), 0, 0, 0, std::cos(x);
    const Vector6d got = forward(p, SpacetimePoint{0, x, pts(i, 2), pts(i, 3)}).flat();
    EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-9);
  }
  EXPECT_LE(model_residual(p, pts).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Assemble, ReproducesManyTermsAndStaysMaxwell) {
  std::mt19937_64 rng(8);
  std::vector<TrigTerm> terms;
  for (int i = 0; i < 100; ++i) {
    TrigTerm t;
    t.xi = random_xi(rng);
    t.amp_cos = in_kernel(t.xi, rng);
    t.amp_sin = in_kernel(t.xi, rng);
    terms.push_back(t);
  }
  const ModelParams p = assemble_cos_network(terms);
  const PointMatrix pts = uniform_points(200, 9);
  PointMatrix slice = pts;
  slice.col(0).setZero();
  const FieldMatrix got = forward(p, slice);
  FieldMatrix want = FieldMatrix::Zero(pts.rows(), 6);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Eigen::Vector3d x = slice.row(i).tail<3>().transpose();
    for (const TrigTerm& t : terms) want.row(i) += t.evaluate(x).transpose();
  }
  EXPECT_LE((got - want).norm(), 1e-9 * want.norm());
  for (double time : {0.0, 0.5}) {
    PointMatrix q = pts;
    q.col(0).setConstant(time);
    const double bound = 1e-8 * (1.0 + forward(p, q).cwiseAbs().maxCoeff());
    EXPECT_LE(model_residual(p, q).cwiseAbs().maxCoeff(), bound) << time;
  }
}

TEST(Assemble, EvolutionSolvesWaveEquation) {
  // Every component of a vacuum Maxwell field solves u_tt = laplacian u.
  TrigTerm t;
  t.xi = {0.8, 0.3, -0.5};
  std::mt19937_64 rng(2);
  t.amp_cos = in_kernel(t.xi, rng);
  const ModelParams p = assemble_cos_network({t});
  const double h = 1e-3;
  const SpacetimePoint x0{0.4, 0.2, 0.5, 0.1};
  const auto f = [&](double dt, double dx, double dy, double dz) {
    return forward(p, SpacetimePoint{x0.t + dt, x0.x + dx, x0.y + dy, x0.z + dz}).flat();
  };
  const Vector6d c = f(0, 0, 0, 0);
  const Vector6d utt = (f(h, 0, 0, 0) - 2 * c + f(-h, 0, 0, 0)) / (h * h);
  const Vector6d lap = (f(0, h, 0, 0) + f(0, -h, 0, 0) + f(0, 0, h, 0) + f(0, 0, -h, 0) +
                        f(0, 0, 0, h) + f(0, 0, 0, -h) - 6 * c) /
                       (h * h);
  EXPECT_LE((utt - lap).cwiseAbs().maxCoeff(), 1e-4);
}

}  // namespace
