#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bwhtsim {

// Soft thresholding with dead-zone half-width |t|:
//   x + |t| for x < -|t|, 0 for |x| <= |t|, x - |t| for x > |t|.
double soft_threshold(double x, double t);

struct SoftThresholdGrad {
  double dx = 0.0;
  double dt = 0.0;
};

// Zero subgradient on the dead zone including its edges. At t = 0 the
// derivative of |t| is taken as +1.
SoftThresholdGrad soft_threshold_grad(double x, double t);

/// Trainable per-channel thresholds, kept inside [-t_max, t_max].
class ThresholdVector {
 public:
  ThresholdVector(std::vector<double> values, double t_max);

  std::size_t size() const { return values_.size(); }
  double t_max() const { return t_max_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  // Sets one value, clamped to [-t_max, t_max].
  void set(std::size_t i, double v);
  // values -= step * grad, then clamp.
  void apply_step(std::span<const double> grad, double step);

  // g(T) = |T / t_max|, in [0, 1].
  double g(std::size_t i) const;
  double mean_g() const;
  double fraction_above(double ratio) const;

 private:
  std::vector<double> values_;
  double t_max_;
};

}  // namespace bwhtsim
