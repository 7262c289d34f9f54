#pragma once

#include "flashmax/types.hpp"

#include <Eigen/Core>

namespace flashmax {

double activate(Activation a, double x);
/// First derivative. relu'(0) is taken as 0.
double activate_derivative(Activation a, double x);

/// Overwrites `pre` with sigma(pre) and writes sigma'(pre) into `deriv`.
/// `deriv` may be null when only values are needed.
void activate_inplace(Activation a, Eigen::Ref<Eigen::ArrayXXd> pre,
                      Eigen::ArrayXXd* deriv);

}  // namespace flashmax
