#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bwhtsim/crossbar.hpp"

namespace bwhtsim {

/// Geometric sharpness annealing:
///   tau(t) = min(tau_0 * growth^floor(t / step_every), tau_max).
struct TauSchedule {
  double tau_0 = 1.0;
  double growth = 2.0;
  std::size_t step_every = 1;
  double tau_max = 1e4;

  double at(std::size_t step) const;
  void validate() const;
};

struct SurrogateConfig {
  double tau = 1.0;
  int b_max = 8;  // shared with the codec bit width
  double x_max = 1.0;

  void validate() const;
};

// Logistic 1 / (1 + e^-z) without overflow for large |z|.
double stable_logistic(double z);

// tanh(tau x) and its x-derivative.
double sign_surrogate(double x, double tau);
double sign_surrogate_grad(double x, double tau);

// Smooth b-th bit of x / x_max:
//   logistic(-tau sin(2 pi 2^(b_max - b) x / x_max)),
// periodic in x with period x_max / 2^(b_max - b).
double bit_surrogate(double x, int b, const SurrogateConfig& cfg);
double bit_surrogate_grad(double x, int b, const SurrogateConfig& cfg);

struct SurrogateOutput {
  std::vector<double> y;         // one per crossbar row, in output code units
  std::vector<double> jacobian;  // rows x cols, row-major: dy_i / dx_j
  std::size_t rows = 0;
  std::size_t cols = 0;

  double d(std::size_t i, std::size_t j) const { return jacobian[i * cols + j]; }
};

/// Differentiable stand-in for f0_apply on real inputs.
///
/// Each input is clipped to [-x_max, x_max]; its sign becomes tanh(tau x) and
/// its magnitude bits come from bit_surrogate evaluated at a position shifted
/// so the sine's implicit quantizer matches the round-half-up codec. The
/// comparator becomes tanh(tau (psum - 1/2)), which reproduces the psum = 0
/// -> -1 rule on integer sums. As tau grows the forward converges to
/// f0_apply(quantize(x)) away from codec boundaries.
SurrogateOutput f0_surrogate(const SurrogateConfig& cfg, std::span<const double> x,
                             const CrossbarConfig& matrix);

}  // namespace bwhtsim
