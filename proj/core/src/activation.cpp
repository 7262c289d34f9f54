#include "flashmax/activation.hpp"

#include <cmath>
#include <numbers>

namespace flashmax {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

double activate(Activation a, double x) {
  switch (a) {
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kCos:
      return std::cos(x);
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
    case Activation::kSilu:
      return x * sigmoid(x);
    case Activation::kGelu:
      return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    case Activation::kSigmoid:
      return sigmoid(x);
  }
  return 0.0;
}

double activate_derivative(Activation a, double x) {
  switch (a) {
    case Activation::kTanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::kCos:
      return -std::sin(x);
    case Activation::kRelu:
      return x > 0.0 ? 1.0 : 0.0;
    case Activation::kSilu: {
      const double s = sigmoid(x);
      return s * (1.0 + x * (1.0 - s));
    }
    case Activation::kGelu:
      return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
             x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
    case Activation::kSigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
  }
  return 0.0;
}

void activate_inplace(Activation a, Eigen::Ref<Eigen::ArrayXXd> pre,
                      Eigen::ArrayXXd* deriv) {
  if (deriv != nullptr) deriv->resize(pre.rows(), pre.cols());
  switch (a) {
    case Activation::kTanh: {
      // tanh(x) = 1 - 2 / (exp(2x) + 1). Eigen vectorizes exp but not tanh.
      // The clamp keeps exp finite; tanh(20) rounds to 1 anyway.
      thread_local Eigen::ArrayXXd scratch;
      Eigen::ArrayXXd& e = deriv != nullptr ? *deriv : scratch;
      e = (2.0 * pre.min(20.0)).exp();
      pre = 1.0 - 2.0 / (e + 1.0);
      if (deriv != nullptr) *deriv = 1.0 - pre.square();
      return;
    }
    case Activation::kCos:
      if (deriv != nullptr) *deriv = -pre.sin();
      pre = pre.cos();
      return;
    case Activation::kRelu:
      if (deriv != nullptr) *deriv = (pre > 0.0).cast<double>();
      pre = pre.max(0.0);
      return;
    case Activation::kSilu: {
      const Eigen::ArrayXXd s = 1.0 / (1.0 + (-pre).exp());
      if (deriv != nullptr) *deriv = s * (1.0 + pre * (1.0 - s));
      pre = pre * s;
      return;
    }
    case Activation::kGelu: {
      const Eigen::ArrayXXd cdf = 0.5 * (1.0 + (pre * kInvSqrt2).unaryExpr(
                                                [](double v) { return std::erf(v); }));
      if (deriv != nullptr) {
        *deriv = cdf + pre * kInvSqrt2Pi * (-0.5 * pre.square()).exp();
      }
      pre = pre * cdf;
      return;
    }
    case Activation::kSigmoid: {
      pre = 1.0 / (1.0 + (-pre).exp());
      if (deriv != nullptr) *deriv = pre * (1.0 - pre);
      return;
    }
  }
}

}  // namespace flashmax
