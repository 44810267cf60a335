#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bwhtsim/crossbar.hpp"
#include "bwhtsim/fixedpoint.hpp"

namespace bwhtsim {

/// Running output of one row while bitplanes are consumed MSB first, with the
/// interval every completion of the remaining planes must land in.
class RunningBounds {
 public:
  explicit RunningBounds(int num_bits);

  int num_bits() const { return num_bits_; }
  // Unprocessed planes; the next plane to consume is b = remaining().
  int remaining() const { return remaining_; }
  int cycles() const { return num_bits_ - remaining_; }
  std::int64_t value() const { return value_; }
  std::int64_t slack() const { return (std::int64_t{1} << remaining_) - 1; }
  std::int64_t upper() const { return value_ + slack(); }
  std::int64_t lower() const { return value_ - slack(); }
  std::int64_t width() const { return upper() - lower(); }

  friend RunningBounds update_bounds(const RunningBounds& rb, int decision, int b);

 private:
  int num_bits_;
  int remaining_;
  std::int64_t value_ = 0;
};

// Consumes plane b with comparator decision +1/-1. Planes must arrive in MSB
// first order; a plane already consumed or one that skips ahead is a StateError.
RunningBounds update_bounds(const RunningBounds& rb, int decision, int b);

// True iff upper <= T and lower >= -T, i.e. the finished value is certain to
// fall in the soft-threshold dead zone.
bool should_terminate(const RunningBounds& rb, std::int64_t threshold);

struct RowTermination {
  int cycles_used = 0;
  bool terminated_early = false;
  std::optional<std::int64_t> final_value;  // empty when tagged zero
};

struct TerminationTrace {
  int num_bits = 0;
  std::vector<RowTermination> rows;

  // A lockstep array retires only when its slowest row does.
  int array_cycles() const;
};

struct EarlyTermResult {
  std::vector<std::int64_t> outputs;  // 0 marks a terminated row
  TerminationTrace trace;
};

/// f0_apply with per-row predictive termination against integer thresholds
/// (one per row, in output units). Rows that are not terminated early return
/// exactly the f0_apply value under the same noise model.
EarlyTermResult f0_with_early_term(const CrossbarConfig& cfg, const BitplaneMatrix& bp,
                                   std::span<const std::int64_t> thresholds,
                                   const std::optional<NoiseModel>& noise = std::nullopt);

// Converts a real threshold into output units with the codec scale
// (2^B - 1) / x_max. Rounds down so |v| <= units implies |v| <= |T| scaled.
std::int64_t threshold_to_units(double threshold, int num_bits, double x_max);

struct CycleHistogram {
  int num_bits = 0;
  std::vector<std::uint64_t> counts;  // counts[c - 1] rows finished after c cycles
  std::uint64_t total = 0;
  double mean = 0.0;
  double array_mean = 0.0;  // mean over traces of the per-trace maximum
};

// Throws DomainError for an empty set or traces with differing bit widths.
CycleHistogram cycle_histogram(std::span<const TerminationTrace> traces);

// "cycles,count" rows for 1..B followed by a "mean,<value>" line.
std::string histogram_csv(const CycleHistogram& h);

enum class ThresholdDist { kZero, kUniform, kBimodalNearTmax };

ThresholdDist parse_threshold_dist(const std::string& name);
std::string to_string(ThresholdDist d);

struct CycleStudyConfig {
  int num_bits = 8;
  std::size_t cols = 16;
  std::size_t rows = 1;
  std::size_t trials = 10000;
  ThresholdDist dist = ThresholdDist::kBimodalNearTmax;
  double t_max = 1.0;
  double x_max = 1.0;
  // Bimodal draws: this fraction sits exactly at +/-T_max (the clamp), the
  // rest has |T|/T_max uniform in [1 - spread, 1).
  double clamp_fraction = 0.8;
  double spread = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

// Random inputs, weights and thresholds per trial; one trace per trial.
std::vector<TerminationTrace> cycle_study(const CycleStudyConfig& cfg);

}  // namespace bwhtsim
