#include "flashmax/sampling.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace flashmax {

std::string_view to_string(SetupId s) { return s == SetupId::kIC ? "ic" : "bc"; }

SetupId parse_setup(std::string_view name) {
  if (name == "ic" || name == "IC") return SetupId::kIC;
  if (name == "bc" || name == "BC") return SetupId::kBC;
  throw std::invalid_argument("unknown setup: " + std::string(name));
}

ComponentMask face_mask(int face) {
  switch (face) {
    case 0:
      return kFullMask;
    case 1:
    case 2:  // normal along x: keep E2, E3
      return 0b000110;
    case 3:
    case 4:  // normal along y: keep E1, E3
      return 0b000101;
    case 5:
    case 6:  // normal along z: keep E1, E2
      return 0b000011;
    default:
      throw std::invalid_argument("face index out of range");
  }
}

namespace {

// The validation stream is decorrelated from the training stream by a fixed
// offset so the two sets never share points.
constexpr std::uint64_t kValidationStream = 0x9E3779B97F4A7C15ULL;

void fill_targets(const GroundTruth& gt, const PointMatrix& points,
                  FieldMatrix& targets) {
  targets = gt.evaluate(points);
}

}  // namespace

ObservationSet sample_train(const SamplingConfig& config) {
  if (config.n_train < 0) throw std::invalid_argument("n_train must be >= 0");
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ObservationSet obs;
  if (config.setup == SetupId::kIC) {
    obs.points.resize(config.n_train, 4);
    for (int i = 0; i < config.n_train; ++i) {
      obs.points(i, 0) = 0.0;
      for (int j = 1; j < 4; ++j) obs.points(i, j) = unit(rng);
    }
    obs.masks.assign(static_cast<std::size_t>(config.n_train), kFullMask);
  } else {
    const int per_face = config.n_train / kFaceCount;
    obs.points.resize(per_face * kFaceCount, 4);
    obs.masks.resize(static_cast<std::size_t>(per_face * kFaceCount));
    Eigen::Index row = 0;
    for (int face = 0; face < kFaceCount; ++face) {
      for (int i = 0; i < per_face; ++i, ++row) {
        auto p = obs.points.row(row);
        if (face == 0) {
          p[0] = 0.0;
          for (int j = 1; j < 4; ++j) p[j] = unit(rng);
        } else {
          for (int j = 0; j < 4; ++j) p[j] = unit(rng);
          const int axis = 1 + (face - 1) / 2;  // 1:x 2:y 3:z
          p[axis] = (face % 2 == 1) ? 0.0 : 1.0;
        }
        obs.masks[static_cast<std::size_t>(row)] = face_mask(face);
      }
    }
  }
  fill_targets(GroundTruth(config.ground_truth), obs.points, obs.targets);
  return obs;
}

ValidationSet sample_validation(const SamplingConfig& config) {
  if (config.n_val < 0) throw std::invalid_argument("n_val must be >= 0");
  std::mt19937_64 rng(config.seed ^ kValidationStream);
  ValidationSet v;
  v.points.resize(config.n_val, 4);
  if (config.setup == SetupId::kIC) {
    std::uniform_real_distribution<double> time(0.0, 0.1);
    std::uniform_real_distribution<double> space(0.2, 0.8);
    for (int i = 0; i < config.n_val; ++i) {
      v.points(i, 0) = time(rng);
      for (int j = 1; j < 4; ++j) v.points(i, j) = space(rng);
    }
  } else {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < config.n_val; ++i) {
      for (int j = 0; j < 4; ++j) v.points(i, j) = unit(rng);
    }
  }
  fill_targets(GroundTruth(config.ground_truth), v.points, v.targets);
  return v;
}

}  // namespace flashmax
