#pragma once

#include "flashmax/ground_truth.hpp"
#include "flashmax/train.hpp"

#include <cstdint>

namespace flashmax {

enum class SetupId { kIC, kBC };

std::string_view to_string(SetupId s);
SetupId parse_setup(std::string_view name);

struct SamplingConfig {
  SetupId setup = SetupId::kIC;
  int n_train = 2000;
  int n_val = 10'000;
  std::uint64_t seed = 0;
  GroundTruthId ground_truth = GroundTruthId::plane_waves();
};

/// Faces of the training region: 0 is the initial slice t = 0, faces 1..6
/// are x=0, x=1, y=0, y=1, z=0, z=1 for t in [0,1].
inline constexpr int kFaceCount = 7;

/// Mask selecting the two tangential electric components on a spatial face
/// (1..6), or all six components on the initial slice (0).
ComponentMask face_mask(int face);

/// IC: n_train points on {0} x [0,1]^3, full masks.
/// BC: floor(n_train/7) points per face, tangential-E masks on side faces.
ObservationSet sample_train(const SamplingConfig& config);

struct ValidationSet {
  PointMatrix points;
  FieldMatrix targets;
};

/// IC: uniform in [0,0.1] x [0.2,0.8]^3. BC: uniform in [0,1]^4.
ValidationSet sample_validation(const SamplingConfig& config);

}  // namespace flashmax
