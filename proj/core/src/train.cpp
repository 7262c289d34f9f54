#include "flashmax/train.hpp"

#include "flashmax/activation.hpp"
#include "flashmax/metrics.hpp"
#include "flashmax/parallel.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace flashmax {

void ObservationSet::validate() const {
  if (targets.rows() != points.rows() ||
      static_cast<Eigen::Index>(masks.size()) != points.rows()) {
    throw std::invalid_argument("observation set: length mismatch");
  }
  for (ComponentMask m : masks) {
    if ((m & kFullMask) == 0) {
      throw std::invalid_argument("observation set: empty component mask");
    }
  }
}

ObservationSet ObservationSet::gather(
    const std::vector<Eigen::Index>& rows) const {
  ObservationSet out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.points.resize(n, 4);
  out.targets.resize(n, 6);
  out.masks.resize(rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = rows[static_cast<std::size_t>(i)];
    out.points.row(i) = points.row(r);
    out.targets.row(i) = targets.row(r);
    out.masks[static_cast<std::size_t>(i)] = masks[static_cast<std::size_t>(r)];
  }
  return out;
}

void TrainConfig::validate() const {
  if (width_half < 0) throw std::invalid_argument("width_half must be >= 0");
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be > 0");
  if (max_epochs <= 0) throw std::invalid_argument("max_epochs must be > 0");
  if (cosine_epochs <= 0) {
    throw std::invalid_argument("cosine_epochs must be > 0");
  }
  if (val_every_steps <= 0) {
    throw std::invalid_argument("val_every_steps must be > 0");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("betas must lie in (0,1)");
  }
  if (eta_min < 0.0) throw std::invalid_argument("eta_min must be >= 0");
  if (target_rel_error &&
      !(*target_rel_error > 0.0 && *target_rel_error <= 1.0)) {
    throw std::invalid_argument("target_rel_error must lie in (0,1]");
  }
  if (wall_clock_budget_s && *wall_clock_budget_s < 0.0) {
    throw std::invalid_argument("wall_clock_budget_s must be >= 0");
  }
}

GradientBundle GradientBundle::zeros_like(const ModelParams& params) {
  GradientBundle g;
  for (int i = 0; i < 2; ++i) {
    const Eigen::Index n = params.branches[i].size();
    g.branches[i].spatial_freqs = SpatialMatrix::Zero(n, 3);
    g.branches[i].out_weights = Eigen::VectorXd::Zero(n);
    g.branches[i].biases = Eigen::VectorXd::Zero(n);
  }
  return g;
}

bool GradientBundle::all_finite() const {
  return std::all_of(branches.begin(), branches.end(), [](const Branch& b) {
    return b.spatial_freqs.allFinite() && b.out_weights.allFinite() &&
           b.biases.allFinite();
  });
}

double GradientBundle::max_abs() const {
  double m = 0.0;
  for (const auto& b : branches) {
    if (b.spatial_freqs.size() == 0) continue;
    m = std::max({m, b.spatial_freqs.cwiseAbs().maxCoeff(),
                  b.out_weights.cwiseAbs().maxCoeff(),
                  b.biases.cwiseAbs().maxCoeff()});
  }
  return m;
}

namespace {

using RowMatrix6 = FieldMatrix;

Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor> mask_matrix(
    const std::vector<ComponentMask>& masks, Eigen::Index begin,
    Eigen::Index end) {
  Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor> m(end - begin, 6);
  for (Eigen::Index i = begin; i < end; ++i) {
    const ComponentMask bits = masks[static_cast<std::size_t>(i)];
    for (int c = 0; c < 6; ++c) m(i - begin, c) = (bits >> c) & 1U ? 1.0 : 0.0;
  }
  return m;
}

double mask_count(const std::vector<ComponentMask>& masks) {
  double n = 0.0;
  for (ComponentMask m : masks) n += std::popcount(static_cast<unsigned>(m & kFullMask));
  return n;
}

// Per-chunk partial sums. Combined in chunk order afterwards.
struct ChunkPartial {
  double sq_error = 0.0;
  struct Branch {
    Eigen::MatrixXd out_grad;   // act^T * dout   (2W x 6)
    Eigen::VectorXd bias_grad;  // column sums of dpre
    Eigen::MatrixXd freq_grad;  // dpre^T * X     (2W x 4)
  };
  std::array<Branch, 2> branches;
};

struct BranchPlan {
  FrequencyMatrix z;
  MultiplierMatrix p;
  Eigen::MatrixXd contraction;  // diag(w) * p
};

std::array<BranchPlan, 2> make_plans(const ModelParams& params) {
  std::array<BranchPlan, 2> plans;
  for (BranchId id : kBranches) {
    auto& plan = plans[index_of(id)];
    const auto& br = params.branch(id);
    plan.z = branch_frequencies(br);
    plan.p = branch_multipliers(id, plan.z);
    plan.contraction = br.out_weights.asDiagonal() * plan.p;
  }
  return plans;
}

// Adds the contribution of dL/dp (rows: neurons) to dL/dz (2W x 4).
void multiplier_chain(BranchId id, const FrequencyMatrix& z,
                      const Eigen::MatrixXd& dp, Eigen::MatrixXd& dz) {
  for (Eigen::Index k = 0; k < z.rows(); ++k) {
    const double z0 = z(k, 0), z1 = z(k, 1), z2 = z(k, 2), z3 = z(k, 3);
    const auto g = dp.row(k);
    if (id == BranchId::kOne) {
      // p1 = (-z1 z3, -z2 z3, z0^2 - z3^2, -z0 z2, z0 z1, 0)
      dz(k, 0) += 2.0 * z0 * g[2] - z2 * g[3] + z1 * g[4];
      dz(k, 1) += -z3 * g[0] + z0 * g[4];
      dz(k, 2) += -z3 * g[1] - z0 * g[3];
      dz(k, 3) += -z1 * g[0] - z2 * g[1] - 2.0 * z3 * g[2];
    } else {
      // p2 = (z1 z2, -z0^2 + z2^2, z2 z3, -z0 z3, 0, z0 z1)
      dz(k, 0) += -2.0 * z0 * g[1] - z3 * g[3] + z1 * g[5];
      dz(k, 1) += z2 * g[0] + z0 * g[5];
      dz(k, 2) += z1 * g[0] + 2.0 * z2 * g[1] + z3 * g[2];
      dz(k, 3) += z2 * g[2] - z0 * g[3];
    }
  }
}

constexpr double kNormFloor = 1e-12;

}  // namespace

double masked_mse_loss(const ModelParams& params, const ObservationSet& obs,
                       int workers) {
  if (obs.empty()) throw std::invalid_argument("empty observation set");
  obs.validate();
  const FieldMatrix pred = forward(params, obs.points, workers);
  const auto mask = mask_matrix(obs.masks, 0, obs.size());
  const double sq =
      ((pred - obs.targets).array() * mask.array()).square().sum();
  return sq / mask_count(obs.masks);
}

namespace {

// Scratch reused across calls on the same thread.
struct Workspace {
  std::array<Eigen::ArrayXXd, 2> act, slope;
  Eigen::ArrayXXd dpre;
  ChunkPartial inline_partial;
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

using ColBlock6 = Eigen::Matrix<double, Eigen::Dynamic, 6>;
using ColBlock4 = Eigen::Matrix<double, Eigen::Dynamic, 4>;

// tanh path: each neuron column is built, activated and contracted while it
// is still in L1. Per column the arithmetic matches pre_activations and
// activate_inplace, so activations equal those of forward() bit for bit.
void chunk_partial_tanh(const ModelParams& params, const ObservationSet& obs,
                        const std::array<BranchPlan, 2>& plans, double count,
                        Eigen::Index begin, Eigen::Index end,
                        ChunkPartial& part) {
  Workspace& ws = workspace();
  const Eigen::Index rows = end - begin;
  const Eigen::Index n = params.neurons_per_branch();
  const ColBlock4 xc = obs.points.middleRows(begin, rows);
  const auto x0 = xc.col(0).array(), x1 = xc.col(1).array();
  const auto x2 = xc.col(2).array(), x3 = xc.col(3).array();
  ColBlock6 pred = ColBlock6::Zero(rows, 6);
  for (int b = 0; b < 2; ++b) {
    const FrequencyMatrix& z = plans[b].z;
    const Eigen::MatrixXd& cm = plans[b].contraction;
    const Eigen::VectorXd& bias = params.branches[b].biases;
    auto& act = ws.act[b];
    auto& slope = ws.slope[b];
    act.resize(rows, n);
    slope.resize(rows, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      auto a = act.col(k);
      auto s = slope.col(k);
      a = x0 * z(k, 0) + x1 * z(k, 1) + x2 * z(k, 2) + x3 * z(k, 3) + bias[k];
      s = (2.0 * a.min(20.0)).exp();
      a = 1.0 - 2.0 / (s + 1.0);
      s = 1.0 - a.square();
      for (int c = 0; c < 6; ++c) pred.col(c).array() += a * cm(k, c);
    }
  }
  const auto mask = mask_matrix(obs.masks, begin, end);
  const RowMatrix6 diff =
      ((RowMatrix6(pred) - obs.targets.middleRows(begin, rows)).array() *
       mask.array())
          .matrix();
  part.sq_error = diff.squaredNorm();
  const ColBlock6 dout = (2.0 / count) * diff;
  ws.dpre.resize(rows, 1);
  auto d = ws.dpre.col(0);
  for (int b = 0; b < 2; ++b) {
    const Eigen::MatrixXd& cm = plans[b].contraction;
    auto& pb = part.branches[b];
    pb.out_grad.resize(n, 6);
    pb.bias_grad.resize(n);
    pb.freq_grad.resize(n, 4);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto a = ws.act[b].col(k).matrix();
      for (int c = 0; c < 6; ++c) pb.out_grad(k, c) = a.dot(dout.col(c));
      d = dout.col(0).array() * cm(k, 0) + dout.col(1).array() * cm(k, 1) +
          dout.col(2).array() * cm(k, 2) + dout.col(3).array() * cm(k, 3) +
          dout.col(4).array() * cm(k, 4) + dout.col(5).array() * cm(k, 5);
      d *= ws.slope[b].col(k);
      pb.bias_grad[k] = d.sum();
      for (int j = 0; j < 4; ++j) pb.freq_grad(k, j) = d.matrix().dot(xc.col(j));
    }
  }
}

void chunk_partial(const ModelParams& params, const ObservationSet& obs,
                   const std::array<BranchPlan, 2>& plans, double count,
                   Eigen::Index begin, Eigen::Index end, ChunkPartial& part) {
  if (params.activation == Activation::kTanh &&
      params.neurons_per_branch() > 0) {
    chunk_partial_tanh(params, obs, plans, count, begin, end, part);
    return;
  }
  Workspace& ws = workspace();
  const Eigen::Index rows = end - begin;
  const Eigen::Index n_neurons = params.neurons_per_branch();
  const auto x = obs.points.middleRows(begin, rows);
  RowMatrix6 pred = RowMatrix6::Zero(rows, 6);
  for (int b = 0; b < 2 && n_neurons > 0; ++b) {
    auto& act = ws.act[b];
    pre_activations(x, plans[b].z, params.branches[b].biases, act);
    activate_inplace(params.activation, act, &ws.slope[b]);
    pred.noalias() += act.matrix() * plans[b].contraction;
  }
  const auto mask = mask_matrix(obs.masks, begin, end);
  const RowMatrix6 diff =
      ((pred - obs.targets.middleRows(begin, rows)).array() * mask.array())
          .matrix();
  part.sq_error = diff.squaredNorm();
  if (n_neurons == 0) return;
  const RowMatrix6 dout = (2.0 / count) * diff;
  for (int b = 0; b < 2; ++b) {
    auto& pb = part.branches[b];
    pb.out_grad.noalias() = ws.act[b].matrix().transpose() * dout;
    ws.dpre.resize(rows, n_neurons);
    ws.dpre.matrix().noalias() = dout * plans[b].contraction.transpose();
    ws.dpre *= ws.slope[b];
    pb.bias_grad = ws.dpre.colwise().sum().transpose();
    pb.freq_grad.noalias() = ws.dpre.matrix().transpose() * x;
  }
}

}  // namespace

LossAndGradient loss_gradient(const ModelParams& params,
                              const ObservationSet& obs, int workers) {
  if (obs.empty()) throw std::invalid_argument("empty observation set");
  obs.validate();
  LossAndGradient result;
  result.gradient = GradientBundle::zeros_like(params);
  const double count = mask_count(obs.masks);
  const Eigen::Index n_neurons = params.neurons_per_branch();
  const auto plans = make_plans(params);

  double sq_error = 0.0;
  std::array<Eigen::MatrixXd, 2> out_grad, freq_grad;
  for (int b = 0; b < 2; ++b) {
    out_grad[b] = Eigen::MatrixXd::Zero(n_neurons, 6);
    freq_grad[b] = Eigen::MatrixXd::Zero(n_neurons, 4);
  }
  // Partials are summed in chunk order in both paths, so the result does not
  // depend on the worker count.
  auto accumulate = [&](const ChunkPartial& part) {
    sq_error += part.sq_error;
    if (n_neurons == 0) return;
    for (int b = 0; b < 2; ++b) {
      out_grad[b] += part.branches[b].out_grad;
      freq_grad[b] += part.branches[b].freq_grad;
      result.gradient.branches[b].biases += part.branches[b].bias_grad;
    }
  };
  const std::ptrdiff_t n_chunks = chunk_count(obs.size());
  if (workers <= 1 || n_chunks <= 1) {
    ChunkPartial& part = workspace().inline_partial;
    for (std::ptrdiff_t c = 0; c < n_chunks; ++c) {
      const std::ptrdiff_t begin = c * kChunkRows;
      chunk_partial(params, obs, plans, count, begin,
                    std::min<std::ptrdiff_t>(obs.size(), begin + kChunkRows), part);
      accumulate(part);
    }
  } else {
    std::vector<ChunkPartial> partials(static_cast<std::size_t>(n_chunks));
    for_each_chunk(obs.size(), workers,
                   [&](std::ptrdiff_t c, std::ptrdiff_t begin, std::ptrdiff_t end) {
                     chunk_partial(params, obs, plans, count, begin, end,
                                   partials[static_cast<std::size_t>(c)]);
                   });
    for (const auto& part : partials) accumulate(part);
  }
  result.loss = sq_error / count;

  for (BranchId id : kBranches) {
    const int b = index_of(id);
    if (n_neurons == 0) break;
    const auto& br = params.branch(id);
    const auto& plan = plans[b];
    auto& g = result.gradient.branches[b];
    // d/dw_k = sum_c G[k,c] p[k,c];  d/dp[k,c] = w_k G[k,c]
    g.out_weights = (out_grad[b].array() * plan.p.array()).rowwise().sum();
    const Eigen::MatrixXd dp = br.out_weights.asDiagonal() * out_grad[b];
    Eigen::MatrixXd dz = freq_grad[b];
    multiplier_chain(id, plan.z, dp, dz);
    // z0 = s |zs|  =>  dzs += dz0 * s * zs / max(|zs|, floor)
    const Eigen::ArrayXd norms =
        br.spatial_freqs.rowwise().norm().array().max(kNormFloor);
    const Eigen::ArrayXd scale = dz.col(0).array() * br.signs.array() / norms;
    g.spatial_freqs = dz.rightCols<3>();
    g.spatial_freqs.array() +=
        br.spatial_freqs.array().colwise() * scale;
  }
  return result;
}

ModelParams init_params(const TrainConfig& config, std::mt19937_64& rng) {
  ModelParams p = ModelParams::zeros(config.width_half, config.activation);
  constexpr double kGain = 5.0 / 3.0;
  const double n = static_cast<double>(p.neurons_per_branch());
  std::normal_distribution<double> freq_dist(
      0.0, kGain * std::sqrt(2.0 / (4.0 + n)));
  std::normal_distribution<double> weight_dist(
      0.0, kGain * std::sqrt(2.0 / (n + 6.0)));
  for (auto& br : p.branches) {
    for (Eigen::Index k = 0; k < br.spatial_freqs.rows(); ++k) {
      for (int j = 0; j < 3; ++j) br.spatial_freqs(k, j) = freq_dist(rng);
    }
    for (Eigen::Index k = 0; k < br.out_weights.size(); ++k) {
      br.out_weights[k] = weight_dist(rng);
    }
  }
  return p;
}

ModelParams init_params(const TrainConfig& config) {
  std::mt19937_64 rng(config.seed);
  return init_params(config, rng);
}

double cosine_lr(std::int64_t epoch, const TrainConfig& config) {
  if (epoch < 0) throw std::invalid_argument("epoch must be >= 0");
  if (epoch >= config.cosine_epochs) return config.eta_min;
  const double phase = std::numbers::pi * static_cast<double>(epoch) /
                       static_cast<double>(config.cosine_epochs);
  return config.eta_min + (config.learning_rate - config.eta_min) *
                              (1.0 + std::cos(phase)) / 2.0;
}

AdamState AdamState::zeros_like(const ModelParams& params) {
  return {0, GradientBundle::zeros_like(params),
          GradientBundle::zeros_like(params)};
}

namespace {

template <typename Param, typename Grad>
void adam_update(Param& p, Grad& m, Grad& v, const Grad& g, double lr,
                 double decay, double bc1, double bc2,
                 const TrainConfig& config) {
  if (decay != 0.0) p *= (1.0 - lr * decay);
  m = config.beta1 * m + (1.0 - config.beta1) * g;
  v.array() = config.beta2 * v.array() + (1.0 - config.beta2) * g.array().square();
  p.array() -= lr * (m.array() / bc1) /
               ((v.array() / bc2).sqrt() + config.adam_epsilon);
}

}  // namespace

void adamw_step(ModelParams& params, AdamState& state,
                const GradientBundle& grads, double lr,
                const TrainConfig& config) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  for (int b = 0; b < 2; ++b) {
    auto& p = params.branches[b];
    auto& m = state.first_moment.branches[b];
    auto& v = state.second_moment.branches[b];
    const auto& g = grads.branches[b];
    adam_update(p.spatial_freqs, m.spatial_freqs, v.spatial_freqs,
                g.spatial_freqs, lr, config.weight_decay, bc1, bc2, config);
    adam_update(p.out_weights, m.out_weights, v.out_weights, g.out_weights, lr,
                config.weight_decay, bc1, bc2, config);
    adam_update(p.biases, m.biases, v.biases, g.biases, lr, 0.0, bc1, bc2,
                config);
  }
}

TrainResult train(const TrainConfig& config, const ObservationSet& train_obs,
                  const PointMatrix& val_points,
                  const FieldMatrix& val_targets) {
  std::mt19937_64 rng(config.seed);
  ModelParams initial = init_params(config, rng);
  return train_from(std::move(initial), rng, config, train_obs, val_points,
                    val_targets);
}

TrainResult train_from(ModelParams params, std::mt19937_64& rng,
                       const TrainConfig& config,
                       const ObservationSet& train_obs,
                       const PointMatrix& val_points,
                       const FieldMatrix& val_targets) {
  config.validate();
  params.validate();
  if (train_obs.empty()) throw std::invalid_argument("empty training set");
  train_obs.validate();
  if (val_points.rows() == 0 || val_points.rows() != val_targets.rows()) {
    throw std::invalid_argument("validation set must be nonempty and aligned");
  }

  using Clock = std::chrono::steady_clock;
  const auto t_start = Clock::now();
  double train_seconds = 0.0;
  auto total_seconds = [&] {
    return std::chrono::duration<double>(Clock::now() - t_start).count();
  };

  TrainResult result;
  result.best = params;
  result.best_val_error = std::numeric_limits<double>::infinity();
  AdamState state = AdamState::zeros_like(params);

  std::int64_t step = 0;
  std::int64_t epoch = 0;
  double last_loss = std::numeric_limits<double>::quiet_NaN();
  double last_lr = cosine_lr(0, config);

  // Validates, updates the best snapshot, and reports whether the target
  // error has been met.
  auto validate_now = [&](TrainRecord& rec) {
    const FieldMatrix pred = forward(params, val_points, config.workers);
    const double err = relative_l2(pred, val_targets);
    rec.val_rel_error = err;
    rec.wall_seconds_total = total_seconds();
    if (err < result.best_val_error) {
      result.best_val_error = err;
      result.best = params;
      result.best_step = step;
      result.time_to_best = rec.wall_seconds_total;
    }
    const bool hit = config.target_rel_error && err < *config.target_rel_error;
    if (hit && !result.time_to_target) {
      result.time_to_target = rec.wall_seconds_total;
    }
    return hit;
  };

  auto budget_spent = [&] {
    return config.wall_clock_budget_s &&
           total_seconds() >= *config.wall_clock_budget_s;
  };

  {
    TrainRecord rec{0, 0, 0.0, 0.0, last_loss, last_lr, std::nullopt};
    if (validate_now(rec)) {
      result.log.push_back(rec);
      result.reason = StopReason::kTargetReached;
      return result;
    }
    result.log.push_back(rec);
    if (budget_spent()) {
      result.reason = StopReason::kWallClock;
      return result;
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_obs.size()));
  const auto batch = static_cast<std::size_t>(config.batch_size);
  while (epoch < config.max_epochs) {
    for (std::size_t i = 0; i < order.size(); ++i) {
      order[i] = static_cast<Eigen::Index>(i);
    }
    std::shuffle(order.begin(), order.end(), rng);
    last_lr = cosine_lr(epoch, config);
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const auto t0 = Clock::now();
      const std::vector<Eigen::Index> rows(
          order.begin() + static_cast<std::ptrdiff_t>(begin),
          order.begin() +
              static_cast<std::ptrdiff_t>(std::min(order.size(), begin + batch)));
      const ObservationSet mb = train_obs.gather(rows);
      const LossAndGradient lg = loss_gradient(params, mb, config.workers);
      last_loss = lg.loss;
      ++step;
      if (!std::isfinite(lg.loss) || !lg.gradient.all_finite()) {
        result.log.push_back({step, epoch, train_seconds, total_seconds(),
                              lg.loss, last_lr, std::nullopt});
        throw NumericalAbort("non-finite loss at step " + std::to_string(step),
                             result.log);
      }
      adamw_step(params, state, lg.gradient, last_lr, config);
      train_seconds += std::chrono::duration<double>(Clock::now() - t0).count();

      TrainRecord rec{step, epoch, train_seconds, total_seconds(), last_loss,
                      last_lr, std::nullopt};
      const bool out_of_time = budget_spent();
      if (step % config.val_every_steps == 0 || out_of_time) {
        const bool hit = validate_now(rec);
        result.log.push_back(rec);
        if (hit) {
          result.reason = StopReason::kTargetReached;
          return result;
        }
      } else {
        result.log.push_back(rec);
      }
      if (out_of_time) {
        result.reason = StopReason::kWallClock;
        return result;
      }
    }
    ++epoch;
  }
  // Final validation so the last parameters are considered for `best`.
  if (result.log.back().val_rel_error == std::nullopt) {
    TrainRecord& rec = result.log.back();
    if (validate_now(rec)) {
      result.reason = StopReason::kTargetReached;
      return result;
    }
  }
  result.reason = StopReason::kMaxEpochs;
  return result;
}

}  // namespace flashmax
