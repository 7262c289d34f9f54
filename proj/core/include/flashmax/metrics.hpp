#pragma once

#include "flashmax/model.hpp"
#include "flashmax/types.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace flashmax {

/// RMSE(pred - gt) / RMSE(gt), pooled over all 6n components.
/// Throws UndefinedMetricError when gt is identically zero and
/// std::invalid_argument on empty or mismatched inputs.
double relative_l2(const FieldMatrix& pred, const FieldMatrix& gt);
double relative_l2(const std::vector<FieldSample>& pred,
                   const std::vector<FieldSample>& gt);

using FieldFn = std::function<FieldSample(const SpacetimePoint&)>;

/// Root mean square over all 8n residual components of a FLASH-MAX model,
/// using the analytic model_residual.
double residual_error(const ModelParams& params, const PointMatrix& points,
                      int workers = 1);

/// Same metric for an arbitrary field, differentiated with central
/// differences of step h.
double residual_error(const FieldFn& field, const std::vector<SpacetimePoint>& points,
                      double h = 1e-4);

struct EvalReport {
  double rel_l2_error = 0.0;
  std::optional<double> residual_rmse;
  std::int64_t n_points = 0;
};

}  // namespace flashmax
