#pragma once

#include "flashmax/types.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>
#include <vector>

namespace flashmax {

/// Which Noetherian multiplier a branch uses.
enum class BranchId : int { kOne = 1, kTwo = 2 };

inline constexpr std::array<BranchId, 2> kBranches = {BranchId::kOne,
                                                      BranchId::kTwo};
inline constexpr int index_of(BranchId b) { return static_cast<int>(b) - 1; }

using SpatialMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using FrequencyMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;
using MultiplierMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor>;

/// Trainable parameters of one branch. Row k of `spatial_freqs` is the
/// spatial part (z1,z2,z3) of neuron k; its time frequency is never stored.
struct BranchParams {
  SpatialMatrix spatial_freqs;
  Eigen::VectorXd signs;  // +1 or -1 per neuron
  Eigen::VectorXd out_weights;
  Eigen::VectorXd biases;

  Eigen::Index size() const { return spatial_freqs.rows(); }
};

/// A FLASH-MAX network: two branches of 2W neurons each, half of each
/// branch on the forward light cone (sign +1) and half on the backward one.
struct ModelParams {
  int width_half = 0;
  Activation activation = Activation::kTanh;
  std::array<BranchParams, 2> branches;

  BranchParams& branch(BranchId b) { return branches[index_of(b)]; }
  const BranchParams& branch(BranchId b) const {
    return branches[index_of(b)];
  }
  Eigen::Index neurons_per_branch() const { return 2 * Eigen::Index{width_half}; }

  /// All-zero parameters with the canonical sign layout (W times +1, then
  /// W times -1).
  static ModelParams zeros(int width_half, Activation activation);

  /// Throws std::invalid_argument on shape or sign-balance violations.
  void validate() const;
};

/// A spacetime frequency on the characteristic variety z0^2 = |z_spatial|^2.
struct FrequencyVector {
  Eigen::Vector4d z = Eigen::Vector4d::Zero();
};

/// (sign * |spatial|, spatial).
FrequencyVector lift_frequency(const Eigen::Vector3d& spatial, int sign);

/// Evaluates p1 or p2 exactly as the polynomial vectors
///   p1(z) = (-z1 z3, -z2 z3, z0^2 - z3^2, -z0 z2, z0 z1, 0)
///   p2(z) = (z1 z2, -z0^2 + z2^2, z2 z3, -z0 z3, 0, z0 z1).
Vector6d noetherian_multiplier(BranchId branch, const FrequencyVector& z);

using MultiplierFn = std::function<Vector6d(BranchId, const FrequencyVector&)>;

/// Lifted frequencies of every neuron in a branch (2W x 4).
FrequencyMatrix branch_frequencies(const BranchParams& branch);

/// Multiplier rows p_i(z_k) for every neuron (2W x 6).
MultiplierMatrix branch_multipliers(BranchId id,
                                    const FrequencyMatrix& frequencies);

/// pre(i,k) = x_i . z_k + b_k for a block of points (rows x 2W). K is only
/// 4 here, so a column loop beats a general matrix product.
void pre_activations(const Eigen::Ref<const PointMatrix>& x,
                     const FrequencyMatrix& z, const Eigen::VectorXd& biases,
                     Eigen::ArrayXXd& pre);

/// Batched forward pass. Rows are evaluated in fixed chunks, so the result
/// does not depend on `workers`.
FieldMatrix forward(const ModelParams& params, const PointMatrix& points,
                    int workers = 1);
std::vector<FieldSample> forward(const ModelParams& params,
                                 const std::vector<SpacetimePoint>& points,
                                 int workers = 1);
FieldSample forward(const ModelParams& params, const SpacetimePoint& x);

/// Analytic Maxwell residual of the network at x, computed by the chain rule
/// through every neuron: sum_k w_k sigma'(x.z_k + b_k) A(z_k) p(z_k).
Residual8 model_residual(const ModelParams& params, const SpacetimePoint& x);

/// Batched residual, one row of 8 components per point.
Eigen::Matrix<double, Eigen::Dynamic, 8, Eigen::RowMajor> model_residual(
    const ModelParams& params, const PointMatrix& points, int workers = 1);

/// Residual with a caller-supplied multiplier. Used by the verification
/// harness to check that a corrupted multiplier is detected.
Residual8 model_residual_with(const ModelParams& params,
                              const SpacetimePoint& x,
                              const MultiplierFn& multiplier);

/// Symbol of the Maxwell operator applied to a constant amplitude:
/// (z0 e - zs x b, z0 b + zs x e, zs.e, zs.b).
Residual8 maxwell_symbol(const Eigen::Vector4d& z, const Vector6d& amplitude);

}  // namespace flashmax
