#include "flashmax/exact_init.hpp"

#include <Eigen/QR>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace flashmax {
namespace {

constexpr double kMinXi1 = 1e-8;
constexpr double kTermKernelTol = 1e-12;
constexpr double kSolveKernelTol = 1e-10;

double kernel_violation(const Eigen::Vector3d& xi, const Vector6d& a) {
  const double scale = std::max(1.0, xi.norm() * a.norm());
  return (divergence_symbol(xi) * a).norm() / scale;
}

}  // namespace

Eigen::Matrix<double, 2, 6> divergence_symbol(const Eigen::Vector3d& xi) {
  Eigen::Matrix<double, 2, 6> r = Eigen::Matrix<double, 2, 6>::Zero();
  r.block<1, 3>(0, 0) = xi.transpose();
  r.block<1, 3>(1, 3) = xi.transpose();
  return r;
}

void TrigTerm::validate() const {
  if (std::abs(xi[0]) < kMinXi1) {
    throw RankDeficiencyError("trig term: |xi1| must be >= 1e-8");
  }
  for (const Vector6d* a : {&amp_cos, &amp_sin}) {
    const double v = kernel_violation(xi, *a);
    if (v > kTermKernelTol) {
      throw InfeasibleAmplitudeError("trig term: amplitude not divergence-free",
                                     v);
    }
  }
}

Vector6d TrigTerm::evaluate(const Eigen::Vector3d& x) const {
  const double phase = xi.dot(x);
  return amp_cos * std::cos(phase) + amp_sin * std::sin(phase);
}

PMatrix build_P(const Eigen::Vector3d& xi) {
  if (xi.isZero(0.0)) throw std::invalid_argument("build_P: xi must be nonzero");
  PMatrix p;
  const FrequencyVector plus = lift_frequency(xi, +1);
  const FrequencyVector minus = lift_frequency(xi, -1);
  p.col(0) = noetherian_multiplier(BranchId::kOne, plus);
  p.col(1) = noetherian_multiplier(BranchId::kTwo, plus);
  p.col(2) = noetherian_multiplier(BranchId::kOne, minus);
  p.col(3) = noetherian_multiplier(BranchId::kTwo, minus);
  return p;
}

Eigen::Vector4d solve_coefficients(const Eigen::Vector3d& xi,
                                   const Vector6d& amplitude) {
  if (std::abs(xi[0]) < kMinXi1) {
    throw RankDeficiencyError("solve_coefficients: |xi1| < 1e-8, P(xi) is rank deficient");
  }
  const double violation = kernel_violation(xi, amplitude);
  if (violation > kSolveKernelTol) {
    throw InfeasibleAmplitudeError(
        "solve_coefficients: amplitude outside ker R(xi), residual " +
            std::to_string(violation),
        violation);
  }
  const PMatrix p = build_P(xi);
  const Eigen::HouseholderQR<PMatrix> qr(p);
  return qr.solve(amplitude);
}

ModelParams assemble_cos_network(const std::vector<TrigTerm>& terms) {
  const int n_terms = static_cast<int>(terms.size());
  ModelParams params = ModelParams::zeros(2 * n_terms, Activation::kCos);
  const int w = params.width_half;
  // Positive-sign neurons occupy rows [0, W), negative rows [W, 2W); term j
  // owns rows 2j (cos) and 2j+1 (sin) within each half.
  for (int j = 0; j < n_terms; ++j) {
    const TrigTerm& term = terms[static_cast<std::size_t>(j)];
    term.validate();
    const std::array<Eigen::Vector4d, 2> coeffs = {
        solve_coefficients(term.xi, term.amp_cos),
        solve_coefficients(term.xi, term.amp_sin)};
    for (int mode = 0; mode < 2; ++mode) {
      const double bias = mode == 0 ? 0.0 : -std::numbers::pi / 2.0;
      const Eigen::Vector4d& c = coeffs[static_cast<std::size_t>(mode)];
      const Eigen::Index plus_row = 2 * j + mode;
      const Eigen::Index minus_row = w + plus_row;
      for (BranchId id : kBranches) {
        auto& br = params.branch(id);
        const int col = index_of(id);  // column of P for the + sheet
        br.spatial_freqs.row(plus_row) = term.xi.transpose();
        br.spatial_freqs.row(minus_row) = term.xi.transpose();
        br.biases[plus_row] = bias;
        br.biases[minus_row] = bias;
        br.out_weights[plus_row] = c[col];
        br.out_weights[minus_row] = c[col + 2];
      }
    }
  }
  return params;
}

}  // namespace flashmax
