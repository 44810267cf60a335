#include "bwhtsim/activation.hpp"

#include <algorithm>
#include <cmath>

#include "bwhtsim/errors.hpp"

namespace bwhtsim {

double soft_threshold(double x, double t) {
  const double w = std::fabs(t);
  if (x > w) return x - w;
  if (x < -w) return x + w;
  return 0.0;
}

SoftThresholdGrad soft_threshold_grad(double x, double t) {
  const double w = std::fabs(t);
  if (std::fabs(x) <= w) return {};
  const double sx = x > 0.0 ? 1.0 : -1.0;
  const double st = t < 0.0 ? -1.0 : 1.0;
  return {1.0, -sx * st};
}

ThresholdVector::ThresholdVector(std::vector<double> values, double t_max)
    : values_(std::move(values)), t_max_(t_max) {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw DomainError("ThresholdVector: t_max must be positive");
  for (auto& v : values_) {
    if (!std::isfinite(v)) throw DomainError("ThresholdVector: non-finite threshold");
    v = std::clamp(v, -t_max_, t_max_);
  }
}

void ThresholdVector::set(std::size_t i, double v) {
  if (i >= values_.size()) throw IndexError("ThresholdVector: index out of range");
  if (!std::isfinite(v)) throw DomainError("ThresholdVector: non-finite threshold");
  values_[i] = std::clamp(v, -t_max_, t_max_);
}

void ThresholdVector::apply_step(std::span<const double> grad, double step) {
  if (grad.size() != values_.size()) throw SizeError("ThresholdVector: gradient length mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    values_[i] = std::clamp(values_[i] - step * grad[i], -t_max_, t_max_);
  }
}

double ThresholdVector::g(std::size_t i) const { return std::fabs(values_[i] / t_max_); }

double ThresholdVector::mean_g() const {
  if (values_.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += g(i);
  return s / static_cast<double>(values_.size());
}

double ThresholdVector::fraction_above(double ratio) const {
  if (values_.empty()) return 0.0;
  const auto n = std::count_if(values_.begin(), values_.end(),
                               [&](double v) { return std::fabs(v) > ratio * t_max_; });
  return static_cast<double>(n) / static_cast<double>(values_.size());
}

}  // namespace bwhtsim
