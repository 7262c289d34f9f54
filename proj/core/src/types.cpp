#include "flashmax/types.hpp"

#include <cmath>
#include <string>

namespace flashmax {

bool SpacetimePoint::finite() const {
  return std::isfinite(t) && std::isfinite(x) && std::isfinite(y) &&
         std::isfinite(z);
}

PointMatrix to_matrix(const std::vector<SpacetimePoint>& points) {
  PointMatrix m(static_cast<Eigen::Index>(points.size()), 4);
  for (std::size_t i = 0; i < points.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = points[i].vec().transpose();
  }
  return m;
}

FieldMatrix to_matrix(const std::vector<FieldSample>& fields) {
  FieldMatrix m(static_cast<Eigen::Index>(fields.size()), 6);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = fields[i].flat().transpose();
  }
  return m;
}

std::vector<FieldSample> to_fields(const FieldMatrix& m) {
  std::vector<FieldSample> out;
  out.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out.push_back(FieldSample::from(m.row(i).transpose()));
  }
  return out;
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kCos:
      return "cos";
    case Activation::kRelu:
      return "relu";
    case Activation::kSilu:
      return "silu";
    case Activation::kGelu:
      return "gelu";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  for (Activation a : {Activation::kTanh, Activation::kCos, Activation::kRelu,
                       Activation::kSilu, Activation::kGelu,
                       Activation::kSigmoid}) {
    if (name == to_string(a)) return a;
  }
  if (name == "cosine") return Activation::kCos;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

}  // namespace flashmax
