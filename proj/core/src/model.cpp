#include "flashmax/model.hpp"

#include "flashmax/activation.hpp"
#include "flashmax/parallel.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>
#include <string>

namespace flashmax {

ModelParams ModelParams::zeros(int width_half, Activation activation) {
  if (width_half < 0) throw std::invalid_argument("width_half must be >= 0");
  ModelParams p;
  p.width_half = width_half;
  p.activation = activation;
  const Eigen::Index n = 2 * Eigen::Index{width_half};
  for (auto& br : p.branches) {
    br.spatial_freqs = SpatialMatrix::Zero(n, 3);
    br.signs.resize(n);
    br.signs.head(width_half).setConstant(1.0);
    br.signs.tail(width_half).setConstant(-1.0);
    br.out_weights = Eigen::VectorXd::Zero(n);
    br.biases = Eigen::VectorXd::Zero(n);
  }
  return p;
}

void ModelParams::validate() const {
  if (width_half < 0) throw std::invalid_argument("width_half must be >= 0");
  const Eigen::Index n = neurons_per_branch();
  for (int i = 0; i < 2; ++i) {
    const auto& br = branches[i];
    const std::string tag = "branch " + std::to_string(i + 1) + ": ";
    if (br.spatial_freqs.rows() != n || br.signs.size() != n ||
        br.out_weights.size() != n || br.biases.size() != n) {
      throw std::invalid_argument(tag + "array lengths must equal 2*width_half");
    }
    Eigen::Index plus = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (br.signs[k] == 1.0) {
        ++plus;
      } else if (br.signs[k] != -1.0) {
        throw std::invalid_argument(tag + "signs must be +1 or -1");
      }
    }
    if (plus != width_half) {
      throw std::invalid_argument(tag + "signs must contain width_half of each");
    }
  }
}

FrequencyVector lift_frequency(const Eigen::Vector3d& spatial, int sign) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +-1");
  FrequencyVector f;
  f.z << sign * spatial.norm(), spatial;
  return f;
}

Vector6d noetherian_multiplier(BranchId branch, const FrequencyVector& f) {
  const double z0 = f.z[0], z1 = f.z[1], z2 = f.z[2], z3 = f.z[3];
  Vector6d p;
  if (branch == BranchId::kOne) {
    p << -z1 * z3, -z2 * z3, z0 * z0 - z3 * z3, -z0 * z2, z0 * z1, 0.0;
  } else {
    p << z1 * z2, -z0 * z0 + z2 * z2, z2 * z3, -z0 * z3, 0.0, z0 * z1;
  }
  return p;
}

FrequencyMatrix branch_frequencies(const BranchParams& branch) {
  const Eigen::Index n = branch.size();
  FrequencyMatrix z(n, 4);
  z.col(0) = branch.signs.array() * branch.spatial_freqs.rowwise().norm().array();
  z.rightCols<3>() = branch.spatial_freqs;
  return z;
}

MultiplierMatrix branch_multipliers(BranchId id, const FrequencyMatrix& z) {
  const auto z0 = z.col(0).array();
  const auto z1 = z.col(1).array();
  const auto z2 = z.col(2).array();
  const auto z3 = z.col(3).array();
  MultiplierMatrix p(z.rows(), 6);
  if (id == BranchId::kOne) {
    p.col(0) = -z1 * z3;
    p.col(1) = -z2 * z3;
    p.col(2) = z0 * z0 - z3 * z3;
    p.col(3) = -z0 * z2;
    p.col(4) = z0 * z1;
    p.col(5).setZero();
  } else {
    p.col(0) = z1 * z2;
    p.col(1) = -z0 * z0 + z2 * z2;
    p.col(2) = z2 * z3;
    p.col(3) = -z0 * z3;
    p.col(4).setZero();
    p.col(5) = z0 * z1;
  }
  return p;
}

void pre_activations(const Eigen::Ref<const PointMatrix>& x,
                     const FrequencyMatrix& z, const Eigen::VectorXd& biases,
                     Eigen::ArrayXXd& pre) {
  const Eigen::Index rows = x.rows();
  pre.resize(rows, z.rows());
  const Eigen::Matrix<double, Eigen::Dynamic, 4> xc = x;
  const auto x0 = xc.col(0).array(), x1 = xc.col(1).array();
  const auto x2 = xc.col(2).array(), x3 = xc.col(3).array();
  for (Eigen::Index k = 0; k < z.rows(); ++k) {
    pre.col(k) = x0 * z(k, 0) + x1 * z(k, 1) + x2 * z(k, 2) + x3 * z(k, 3) +
                 biases[k];
  }
}

namespace {

struct BranchPlan {
  FrequencyMatrix z;
  Eigen::MatrixXd contraction;  // (2W x k): rows are w_k * (per-neuron row)
};

struct Buffers {
  Eigen::ArrayXXd act;
  Eigen::ArrayXXd slope;
};

Buffers& buffers() {
  thread_local Buffers b;
  return b;
}

}  // namespace

FieldMatrix forward(const ModelParams& params, const PointMatrix& points,
                    int workers) {
  FieldMatrix out = FieldMatrix::Zero(points.rows(), 6);
  if (params.width_half == 0 || points.rows() == 0) return out;

  std::array<BranchPlan, 2> plans;
  for (BranchId id : kBranches) {
    const auto& br = params.branch(id);
    auto& plan = plans[index_of(id)];
    plan.z = branch_frequencies(br);
    plan.contraction =
        br.out_weights.asDiagonal() * branch_multipliers(id, plan.z);
  }
  for_each_chunk(points.rows(), workers,
                 [&](std::ptrdiff_t, std::ptrdiff_t begin, std::ptrdiff_t end) {
                   for (BranchId id : kBranches) {
                     const auto& br = params.branch(id);
                     const auto& plan = plans[index_of(id)];
                     auto& buf = buffers();
                     pre_activations(points.middleRows(begin, end - begin), plan.z,
                                     br.biases, buf.act);
                     activate_inplace(params.activation, buf.act, nullptr);
                     out.middleRows(begin, end - begin).noalias() +=
                         buf.act.matrix() * plan.contraction;
                   }
                 });
  return out;
}

std::vector<FieldSample> forward(const ModelParams& params,
                                 const std::vector<SpacetimePoint>& points,
                                 int workers) {
  return to_fields(forward(params, to_matrix(points), workers));
}

FieldSample forward(const ModelParams& params, const SpacetimePoint& x) {
  PointMatrix m(1, 4);
  m.row(0) = x.vec().transpose();
  return to_fields(forward(params, m)).front();
}

Residual8 maxwell_symbol(const Eigen::Vector4d& z, const Vector6d& amp) {
  const double z0 = z[0];
  const Eigen::Vector3d zs = z.tail<3>();
  const Eigen::Vector3d e = amp.head<3>();
  const Eigen::Vector3d b = amp.tail<3>();
  Residual8 r;
  r.head<3>() = z0 * e - zs.cross(b);
  r.segment<3>(3) = z0 * b + zs.cross(e);
  r[6] = zs.dot(e);
  r[7] = zs.dot(b);
  return r;
}

Residual8 model_residual_with(const ModelParams& params,
                              const SpacetimePoint& x,
                              const MultiplierFn& multiplier) {
  Residual8 r = Residual8::Zero();
  const Eigen::Vector4d xv = x.vec();
  for (BranchId id : kBranches) {
    const auto& br = params.branch(id);
    for (Eigen::Index k = 0; k < br.size(); ++k) {
      const FrequencyVector f = lift_frequency(
          br.spatial_freqs.row(k).transpose(), br.signs[k] > 0 ? 1 : -1);
      const double slope = br.out_weights[k] *
                           activate_derivative(params.activation,
                                               xv.dot(f.z) + br.biases[k]);
      r += slope * maxwell_symbol(f.z, multiplier(id, f));
    }
  }
  return r;
}

Residual8 model_residual(const ModelParams& params, const SpacetimePoint& x) {
  return model_residual_with(params, x, noetherian_multiplier);
}

Eigen::Matrix<double, Eigen::Dynamic, 8, Eigen::RowMajor> model_residual(
    const ModelParams& params, const PointMatrix& points, int workers) {
  Eigen::Matrix<double, Eigen::Dynamic, 8, Eigen::RowMajor> out =
      Eigen::Matrix<double, Eigen::Dynamic, 8, Eigen::RowMajor>::Zero(
          points.rows(), 8);
  if (params.width_half == 0 || points.rows() == 0) return out;

  std::array<BranchPlan, 2> plans;
  for (BranchId id : kBranches) {
    const auto& br = params.branch(id);
    auto& plan = plans[index_of(id)];
    plan.z = branch_frequencies(br);
    const MultiplierMatrix p = branch_multipliers(id, plan.z);
    plan.contraction.resize(br.size(), 8);
    for (Eigen::Index k = 0; k < br.size(); ++k) {
      plan.contraction.row(k) =
          br.out_weights[k] *
          maxwell_symbol(plan.z.row(k).transpose(), p.row(k).transpose())
              .transpose();
    }
  }
  for_each_chunk(points.rows(), workers,
                 [&](std::ptrdiff_t, std::ptrdiff_t begin, std::ptrdiff_t end) {
                   for (BranchId id : kBranches) {
                     const auto& br = params.branch(id);
                     const auto& plan = plans[index_of(id)];
                     auto& buf = buffers();
                     pre_activations(points.middleRows(begin, end - begin), plan.z,
                                     br.biases, buf.act);
                     activate_inplace(params.activation, buf.act, &buf.slope);
                     out.middleRows(begin, end - begin).noalias() +=
                         buf.slope.matrix() * plan.contraction;
                   }
                 });
  return out;
}

}  // namespace flashmax
