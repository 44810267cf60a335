#include "bwhtsim/earlyterm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "bwhtsim/errors.hpp"
#include "bwhtsim/random.hpp"

namespace bwhtsim {

RunningBounds::RunningBounds(int num_bits) : num_bits_(num_bits), remaining_(num_bits) {
  if (num_bits < 1 || num_bits > kMaxBits) {
    throw DomainError(fmt::format("RunningBounds: bit width {} outside [1, {}]", num_bits, kMaxBits));
  }
}

RunningBounds update_bounds(const RunningBounds& rb, int decision, int b) {
  if (decision != 1 && decision != -1) throw DomainError("update_bounds: decision must be +1 or -1");
  if (b < 1 || b > rb.num_bits_) {
    throw IndexError(fmt::format("update_bounds: plane {} outside [1, {}]", b, rb.num_bits_));
  }
  if (b > rb.remaining_) throw StateError(fmt::format("update_bounds: plane {} already processed", b));
  if (b < rb.remaining_) {
    throw StateError(fmt::format("update_bounds: plane {} arrives before plane {}", b, rb.remaining_));
  }
  RunningBounds next = rb;
  next.value_ += decision * (std::int64_t{1} << (b - 1));
  next.remaining_ = b - 1;
  return next;
}

bool should_terminate(const RunningBounds& rb, std::int64_t threshold) {
  return rb.upper() <= threshold && rb.lower() >= -threshold;
}

int TerminationTrace::array_cycles() const {
  int worst = 0;
  for (const auto& r : rows) worst = std::max(worst, r.cycles_used);
  return worst;
}

EarlyTermResult f0_with_early_term(const CrossbarConfig& cfg, const BitplaneMatrix& bp,
                                   std::span<const std::int64_t> thresholds,
                                   const std::optional<NoiseModel>& noise) {
  if (thresholds.size() != cfg.rows()) {
    throw SizeError(fmt::format("f0_with_early_term: {} thresholds for {} rows", thresholds.size(),
                                cfg.rows()));
  }
  if (cfg.cols() != bp.num_elems()) {
    throw SizeError(fmt::format("f0_with_early_term: crossbar has {} columns but input has {} elements",
                                cfg.cols(), bp.num_elems()));
  }
  if (std::any_of(thresholds.begin(), thresholds.end(), [](std::int64_t t) { return t < 0; })) {
    throw DomainError("f0_with_early_term: thresholds must be non-negative");
  }

  const int nb = bp.num_bits();
  EarlyTermResult res;
  res.outputs.assign(cfg.rows(), 0);
  res.trace.num_bits = nb;
  res.trace.rows.resize(cfg.rows());

  for (std::size_t i = 0; i < cfg.rows(); ++i) {
    const auto eps = noise ? psum_noise(*noise, i, nb, cfg.cols())
                           : std::vector<double>(static_cast<std::size_t>(nb), 0.0);
    RunningBounds rb(nb);
    RowTermination& row = res.trace.rows[i];
    for (int b = nb; b >= 1; --b) {
      const auto rec = evaluate_psum(cfg, bp, i, b, eps[static_cast<std::size_t>(b - 1)]);
      rb = update_bounds(rb, rec.decision, b);
      if (b > 1 && should_terminate(rb, thresholds[i])) {
        row.terminated_early = true;
        break;
      }
    }
    row.cycles_used = rb.cycles();
    if (!row.terminated_early) {
      row.final_value = rb.value();
      res.outputs[i] = rb.value();
    }
  }
  return res;
}

std::int64_t threshold_to_units(double threshold, int num_bits, double x_max) {
  if (!std::isfinite(threshold)) throw DomainError("threshold_to_units: non-finite threshold");
  if (!(x_max > 0.0) || !std::isfinite(x_max)) throw DomainError("threshold_to_units: bad x_max");
  if (num_bits < 1 || num_bits > kMaxBits) throw DomainError("threshold_to_units: bad bit width");
  const double fs = static_cast<double>(full_scale_code(num_bits));
  const double units = std::floor(std::fabs(threshold) * fs / x_max);
  return units >= fs ? static_cast<std::int64_t>(fs) : static_cast<std::int64_t>(units);
}

CycleHistogram cycle_histogram(std::span<const TerminationTrace> traces) {
  if (traces.empty()) throw DomainError("cycle_histogram: no traces");
  CycleHistogram h;
  h.num_bits = traces.front().num_bits;
  h.counts.assign(static_cast<std::size_t>(h.num_bits), 0);
  double cycle_sum = 0.0;
  double array_sum = 0.0;
  for (const auto& t : traces) {
    if (t.num_bits != h.num_bits) throw DomainError("cycle_histogram: traces differ in bit width");
    for (const auto& r : t.rows) {
      if (r.cycles_used < 1 || r.cycles_used > h.num_bits) {
        throw DomainError("cycle_histogram: cycle count outside [1, B]");
      }
      ++h.counts[static_cast<std::size_t>(r.cycles_used - 1)];
      cycle_sum += r.cycles_used;
      ++h.total;
    }
    array_sum += t.array_cycles();
  }
  if (h.total == 0) throw DomainError("cycle_histogram: traces hold no rows");
  h.mean = cycle_sum / static_cast<double>(h.total);
  h.array_mean = array_sum / static_cast<double>(traces.size());
  return h;
}

std::string histogram_csv(const CycleHistogram& h) {
  std::string out = "cycles,count\n";
  for (std::size_t c = 0; c < h.counts.size(); ++c) out += fmt::format("{},{}\n", c + 1, h.counts[c]);
  out += fmt::format("mean,{}\n", h.mean);
  return out;
}

ThresholdDist parse_threshold_dist(const std::string& name) {
  if (name == "zero") return ThresholdDist::kZero;
  if (name == "uniform") return ThresholdDist::kUniform;
  if (name == "bimodal_near_tmax") return ThresholdDist::kBimodalNearTmax;
  throw DomainError("unknown threshold distribution '" + name + "'");
}

std::string to_string(ThresholdDist d) {
  switch (d) {
    case ThresholdDist::kZero: return "zero";
    case ThresholdDist::kUniform: return "uniform";
    case ThresholdDist::kBimodalNearTmax: return "bimodal_near_tmax";
  }
  return "unknown";
}

void CycleStudyConfig::validate() const {
  if (num_bits < 1 || num_bits > kMaxBits) throw DomainError("cycle study: bad bit width");
  if (cols == 0 || rows == 0) throw DomainError("cycle study: rows and cols must be positive");
  if (trials == 0) throw DomainError("cycle study: trials must be positive");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw DomainError("cycle study: t_max must be positive");
  if (!(x_max > 0.0) || !std::isfinite(x_max)) throw DomainError("cycle study: x_max must be positive");
  if (!(clamp_fraction >= 0.0 && clamp_fraction <= 1.0)) {
    throw DomainError("cycle study: clamp_fraction must lie in [0, 1]");
  }
  if (!(spread >= 0.0 && spread <= 1.0)) throw DomainError("cycle study: spread must lie in [0, 1]");
}

std::vector<TerminationTrace> cycle_study(const CycleStudyConfig& cfg) {
  cfg.validate();
  const std::uint32_t fs = full_scale_code(cfg.num_bits);
  std::vector<TerminationTrace> traces;
  traces.reserve(cfg.trials);

  std::vector<std::int8_t> weights(cfg.rows * cfg.cols);
  std::vector<std::int64_t> thresholds(cfg.rows);
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    std::mt19937_64 rng(derive_seed(cfg.seed, t));
    std::bernoulli_distribution coin(0.5);
    std::uniform_int_distribution<std::uint32_t> code_dist(0, fs);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (auto& w : weights) w = coin(rng) ? 1 : -1;
    std::vector<std::uint32_t> codes(cfg.cols);
    std::vector<std::int8_t> signs(cfg.cols);
    for (std::size_t j = 0; j < cfg.cols; ++j) {
      codes[j] = code_dist(rng);
      signs[j] = coin(rng) ? 1 : -1;
    }
    for (auto& th : thresholds) {
      double value = 0.0;
      switch (cfg.dist) {
        case ThresholdDist::kZero:
          break;
        case ThresholdDist::kUniform:
          value = cfg.t_max * (2.0 * unit(rng) - 1.0);
          break;
        case ThresholdDist::kBimodalNearTmax: {
          const double sign = coin(rng) ? 1.0 : -1.0;
          const bool clamped = unit(rng) < cfg.clamp_fraction;
          const double g = clamped ? 1.0 : 1.0 - cfg.spread * unit(rng);
          value = sign * g * cfg.t_max;
          break;
        }
      }
      th = threshold_to_units(value, cfg.num_bits, cfg.x_max);
    }

    const CrossbarConfig xbar(cfg.rows, cfg.cols, weights);
    const BitplaneMatrix bp(cfg.num_bits, cfg.x_max, std::move(codes), std::move(signs));
    traces.push_back(f0_with_early_term(xbar, bp, thresholds).trace);
  }
  return traces;
}

}  // namespace bwhtsim
