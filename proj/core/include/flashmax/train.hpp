#pragma once

#include "flashmax/model.hpp"
#include "flashmax/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace flashmax {

/// Bit c set means field component c (E1..E3, B1..B3) enters the loss.
using ComponentMask = std::uint8_t;
inline constexpr ComponentMask kFullMask = 0b111111;

/// Training observations: points, target fields, and per-row loss masks.
struct ObservationSet {
  PointMatrix points;
  FieldMatrix targets;
  std::vector<ComponentMask> masks;

  Eigen::Index size() const { return points.rows(); }
  bool empty() const { return size() == 0; }
  /// Throws std::invalid_argument on length mismatch or an empty mask.
  void validate() const;
  /// Rows selected by `rows`, in that order.
  ObservationSet gather(const std::vector<Eigen::Index>& rows) const;
};

struct TrainConfig {
  int width_half = 5000;
  Activation activation = Activation::kTanh;
  double learning_rate = 5e-2;
  double weight_decay = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double adam_epsilon = 1e-8;
  int batch_size = 1000;
  int max_epochs = 10'000;
  int cosine_epochs = 10'000;
  double eta_min = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> target_rel_error;
  int val_every_steps = 10;
  std::optional<double> wall_clock_budget_s;
  int workers = 1;

  void validate() const;
};

/// Gradient (or optimizer moment) with the shape of the trainable parameters.
struct GradientBundle {
  struct Branch {
    SpatialMatrix spatial_freqs;
    Eigen::VectorXd out_weights;
    Eigen::VectorXd biases;
  };
  std::array<Branch, 2> branches;

  static GradientBundle zeros_like(const ModelParams& params);
  bool all_finite() const;
  /// Largest absolute entry.
  double max_abs() const;
};

double masked_mse_loss(const ModelParams& params, const ObservationSet& obs,
                       int workers = 1);

struct LossAndGradient {
  double loss = 0.0;
  GradientBundle gradient;
};

/// Exact gradient of masked_mse_loss with respect to spatial frequencies,
/// output weights and biases. The chain rule runs through the light-cone
/// lift z0 = sign*|z| and through the multiplier polynomials.
LossAndGradient loss_gradient(const ModelParams& params,
                              const ObservationSet& obs, int workers = 1);

/// Xavier-normal initialization (gain 5/3) with zero biases.
ModelParams init_params(const TrainConfig& config);
ModelParams init_params(const TrainConfig& config, std::mt19937_64& rng);

/// Cosine annealing from learning_rate to eta_min over cosine_epochs, then
/// flat at eta_min.
double cosine_lr(std::int64_t epoch, const TrainConfig& config);

struct AdamState {
  std::int64_t step = 0;
  GradientBundle first_moment;
  GradientBundle second_moment;

  static AdamState zeros_like(const ModelParams& params);
};

/// One AdamW update with bias-corrected moments. Decoupled weight decay
/// applies to spatial frequencies and output weights, not to biases.
void adamw_step(ModelParams& params, AdamState& state,
                const GradientBundle& grads, double lr,
                const TrainConfig& config);

struct TrainRecord {
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  double wall_seconds_train = 0.0;
  double wall_seconds_total = 0.0;
  double loss = 0.0;
  double lr = 0.0;
  std::optional<double> val_rel_error;
};

using TrainLog = std::vector<TrainRecord>;

enum class StopReason { kTargetReached, kWallClock, kMaxEpochs };

struct TrainResult {
  ModelParams best;
  TrainLog log;
  double best_val_error = 0.0;
  std::int64_t best_step = 0;
  /// Total wall seconds at the validation that produced `best`.
  double time_to_best = 0.0;
  StopReason reason = StopReason::kMaxEpochs;
  /// Total wall seconds when the target was first met, if it was.
  std::optional<double> time_to_target;
};

/// Raised when the loss becomes non-finite; carries the log up to and
/// including the offending step.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, TrainLog log)
      : std::runtime_error(what), log_(std::move(log)) {}
  const TrainLog& log() const { return log_; }

 private:
  TrainLog log_;
};

/// Seeded epoch loop: shuffle, mini-batch AdamW steps, periodic validation,
/// early stop on target / wall clock / epoch budget. Returns the snapshot with
/// the lowest validation error.
TrainResult train(const TrainConfig& config, const ObservationSet& train_obs,
                  const PointMatrix& val_points, const FieldMatrix& val_targets);

/// As above, starting from the given parameters instead of init_params.
TrainResult train_from(ModelParams initial, std::mt19937_64& rng,
                       const TrainConfig& config,
                       const ObservationSet& train_obs,
                       const PointMatrix& val_points,
                       const FieldMatrix& val_targets);

}  // namespace flashmax
