#pragma once

#include "flashmax/exact_init.hpp"
#include "flashmax/metrics.hpp"
#include "flashmax/model.hpp"
#include "flashmax/sampling.hpp"
#include "flashmax/train.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace flashmax::io {

inline constexpr int kSchemaVersion = 1;

/// Checkpoint JSON: schema_version, width_half, activation, and per-branch
/// arrays under "branches" (spatial_freqs row-major, signs, out_weights,
/// biases). Optimizer moments go under "optimizer" when given.
nlohmann::json checkpoint_to_json(const ModelParams& params,
                                  const AdamState* optimizer = nullptr);
ModelParams checkpoint_from_json(const nlohmann::json& j);
std::optional<AdamState> optimizer_from_json(const nlohmann::json& j,
                                             const ModelParams& params);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Columns: step,epoch,wall_seconds_train,wall_seconds_total,loss,lr,val_rel_error
void write_train_log(std::ostream& os, const TrainLog& log);
void write_train_log(const std::filesystem::path& path, const TrainLog& log);
TrainLog read_train_log(std::istream& is);

/// Columns: t,x,y,z,E1,E2,E3,B1,B2,B3,mask (mask as six 0/1 characters,
/// component E1 first).
void write_observations(std::ostream& os, const ObservationSet& obs);
ObservationSet read_observations(std::istream& is);
std::string mask_to_string(ComponentMask m);
ComponentMask mask_from_string(const std::string& s);

/// Columns: t,x,y,z,E1,E2,E3,B1,B2,B3
void write_field_csv(std::ostream& os, const PointMatrix& points,
                     const FieldMatrix& fields);

struct ReportContext {
  std::string setup;
  std::string ground_truth;
  std::uint64_t seed = 0;
};
nlohmann::json report_to_json(const EvalReport& report,
                              const ReportContext& context);

/// Terms as [{"xi":[..3], "amp_cos":[..6], "amp_sin":[..6]}, ...]; amp_sin
/// may be omitted.
std::vector<TrigTerm> trig_terms_from_json(const nlohmann::json& j);

nlohmann::json train_config_to_json(const TrainConfig& c);
/// Missing keys keep their defaults from `base`.
TrainConfig train_config_from_json(const nlohmann::json& j,
                                   TrainConfig base = {});

}  // namespace flashmax::io
