#include "flashmax/metrics.hpp"

#include "flashmax/ground_truth.hpp"

#include <cmath>
#include <stdexcept>

namespace flashmax {

double relative_l2(const FieldMatrix& pred, const FieldMatrix& gt) {
  if (pred.rows() == 0 || pred.rows() != gt.rows()) {
    throw std::invalid_argument("relative_l2: inputs must be nonempty and aligned");
  }
  const double denom = gt.squaredNorm();
  if (denom == 0.0) {
    throw UndefinedMetricError("relative_l2: ground truth has zero norm");
  }
  // The 1/(6n) factors of both RMS values cancel.
  return std::sqrt((pred - gt).squaredNorm() / denom);
}

double relative_l2(const std::vector<FieldSample>& pred,
                   const std::vector<FieldSample>& gt) {
  return relative_l2(to_matrix(pred), to_matrix(gt));
}

double residual_error(const ModelParams& params, const PointMatrix& points,
                      int workers) {
  if (points.rows() == 0) throw std::invalid_argument("residual_error: no points");
  const auto r = model_residual(params, points, workers);
  return std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

double residual_error(const FieldFn& field,
                      const std::vector<SpacetimePoint>& points, double h) {
  if (points.empty()) throw std::invalid_argument("residual_error: no points");
  double sq = 0.0;
  for (const auto& x : points) sq += fd_residual(field, x, h).squaredNorm();
  return std::sqrt(sq / (8.0 * static_cast<double>(points.size())));
}

}  // namespace flashmax
