#include "bwhtsim/surrogate.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "bwhtsim/errors.hpp"
#include "bwhtsim/fixedpoint.hpp"

namespace bwhtsim {

namespace {

double sech2(double z) {
  const double t = std::tanh(z);
  return 1.0 - t * t;
}

double bit_frequency(int b, const SurrogateConfig& cfg) {
  if (b < 1 || b > cfg.b_max) {
    throw IndexError(fmt::format("bit_surrogate: plane {} outside [1, {}]", b, cfg.b_max));
  }
  return 2.0 * std::numbers::pi * std::ldexp(1.0, cfg.b_max - b) / cfg.x_max;
}

}  // namespace

double TauSchedule::at(std::size_t step) const {
  const auto k = static_cast<double>(step / step_every);
  return std::min(tau_0 * std::pow(growth, k), tau_max);
}

void TauSchedule::validate() const {
  if (!(tau_0 > 0.0) || !std::isfinite(tau_0)) throw DomainError("tau schedule: tau_0 must be positive");
  if (!(growth > 1.0) || !std::isfinite(growth)) throw DomainError("tau schedule: growth must exceed 1");
  if (step_every == 0) throw DomainError("tau schedule: step_every must be positive");
  if (!(tau_max > 0.0) || !std::isfinite(tau_max)) throw DomainError("tau schedule: tau_max must be positive");
}

void SurrogateConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("surrogate: tau must be positive");
  if (b_max < 1 || b_max > kMaxBits) throw DomainError("surrogate: bad bit width");
  if (!(x_max > 0.0) || !std::isfinite(x_max)) throw DomainError("surrogate: x_max must be positive");
}

double stable_logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double sign_surrogate(double x, double tau) { return std::tanh(tau * x); }

double sign_surrogate_grad(double x, double tau) { return tau * sech2(tau * x); }

double bit_surrogate(double x, int b, const SurrogateConfig& cfg) {
  const double w = bit_frequency(b, cfg);
  return stable_logistic(-cfg.tau * std::sin(w * x));
}

double bit_surrogate_grad(double x, int b, const SurrogateConfig& cfg) {
  const double w = bit_frequency(b, cfg);
  const double s = stable_logistic(-cfg.tau * std::sin(w * x));
  return s * (1.0 - s) * (-cfg.tau * std::cos(w * x) * w);
}

SurrogateOutput f0_surrogate(const SurrogateConfig& cfg, std::span<const double> x,
                             const CrossbarConfig& matrix) {
  cfg.validate();
  if (x.size() != matrix.cols()) {
    throw SizeError(fmt::format("f0_surrogate: matrix has {} columns but input has {} elements",
                                matrix.cols(), x.size()));
  }
  const std::size_t n = x.size();
  const std::size_t rows = matrix.rows();
  const int nb = cfg.b_max;
  const double fs = static_cast<double>(full_scale_code(nb));
  const double levels = std::ldexp(1.0, nb);
  // Position whose binary-fraction bits equal the bits of round(|x| fs / x_max).
  const double pos_scale = fs / levels;
  const double pos_offset = 0.5 * cfg.x_max / levels;

  // Signed soft bits q[b-1][j] and their x-derivatives.
  std::vector<double> q(static_cast<std::size_t>(nb) * n);
  std::vector<double> dq(static_cast<std::size_t>(nb) * n);
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(x[j])) throw DomainError("f0_surrogate: non-finite input");
    const bool inside = std::fabs(x[j]) <= cfg.x_max;
    const double c = inside ? x[j] : std::copysign(cfg.x_max, x[j]);
    const double s = sign_surrogate(c, cfg.tau);
    const double ds = sign_surrogate_grad(c, cfg.tau);
    const double pos = std::fabs(c) * pos_scale + pos_offset;
    const double mag_sign = c < 0.0 ? -1.0 : 1.0;
    for (int b = 1; b <= nb; ++b) {
      const double beta = bit_surrogate(pos, b, cfg);
      const double dbeta = bit_surrogate_grad(pos, b, cfg) * pos_scale * mag_sign;
      const std::size_t k = static_cast<std::size_t>(b - 1) * n + j;
      q[k] = s * beta;
      dq[k] = inside ? ds * beta + s * dbeta : 0.0;
    }
  }

  SurrogateOutput out;
  out.rows = rows;
  out.cols = n;
  out.y.assign(rows, 0.0);
  out.jacobian.assign(rows * n, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto w = matrix.row(i);
    for (int b = 1; b <= nb; ++b) {
      const double* qb = q.data() + static_cast<std::size_t>(b - 1) * n;
      const double* dqb = dq.data() + static_cast<std::size_t>(b - 1) * n;
      double p = 0.0;
      for (std::size_t j = 0; j < n; ++j) p += w[j] * qb[j];
      const double weight = std::ldexp(1.0, b - 1);
      out.y[i] += weight * sign_surrogate(p - 0.5, cfg.tau);
      const double outer = weight * sign_surrogate_grad(p - 0.5, cfg.tau);
      if (outer == 0.0) continue;
      double* jrow = out.jacobian.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) jrow[j] += outer * w[j] * dqb[j];
    }
  }
  return out;
}

}  // namespace bwhtsim
