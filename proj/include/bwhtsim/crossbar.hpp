#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bwhtsim/fixedpoint.hpp"
#include "bwhtsim/hadamard.hpp"

namespace bwhtsim {

/// A rows x cols array of +1/-1 cells. cols is the mapped input length L_I.
class CrossbarConfig {
 public:
  CrossbarConfig(std::size_t rows, std::size_t cols, std::vector<std::int8_t> entries);
  explicit CrossbarConfig(const WalshMatrix& m);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  int at(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
  std::span<const std::int8_t> row(std::size_t i) const { return {entries_.data() + i * cols_, cols_}; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::int8_t> entries_;
};

/// Gaussian PSUM perturbation: PSUM + N(0, L_I * sigma_ant), plus the
/// safety margin used when counting processing failures.
struct NoiseModel {
  double sigma_ant = 0.0;
  double safety_margin = 0.0;
  std::uint64_t seed = 0;

  // Throws DomainError for negative or non-finite parameters.
  void validate() const;
};

struct PsumRecord {
  std::size_t row = 0;
  int b = 0;
  std::int64_t exact_psum = 0;
  double noisy_psum = 0.0;
  int decision = -1;
};

std::int64_t psum_row(std::span<const std::int8_t> row, const SignedBitplane& plane);

// +1 if psum > 0, otherwise -1 (ties go to -1).
constexpr int comparator(double psum) { return psum > 0.0 ? 1 : -1; }

// Noise added to row `row` for planes b = 1..B, returned as eps[b - 1]. The
// stream depends only on (seed, row), so consumers that skip planes still see
// the same draws for the planes they do evaluate.
std::vector<double> psum_noise(const NoiseModel& noise, std::size_t row, int num_bits,
                               std::size_t cols);

// One comparator evaluation for (row, plane b) with additive noise eps.
PsumRecord evaluate_psum(const CrossbarConfig& cfg, const BitplaneMatrix& bp, std::size_t row,
                         int b, double eps = 0.0);

/// Bit-serial 1-bit transform: y_i = sum_b comparator(psum_ib + eps_ib) * 2^(b-1).
/// Outputs are odd and lie in [-(2^B - 1), 2^B - 1].
std::vector<std::int64_t> f0_apply(const CrossbarConfig& cfg, const BitplaneMatrix& bp,
                                   const std::optional<NoiseModel>& noise = std::nullopt);

// All (row, plane) comparator records in row-major, MSB-first order.
std::vector<PsumRecord> psum_records(const CrossbarConfig& cfg, const BitplaneMatrix& bp,
                                     const std::optional<NoiseModel>& noise = std::nullopt);

// Full-precision product sum_j sign_j * code_j * B_ij.
std::vector<std::int64_t> exact_oracle(const CrossbarConfig& cfg, const BitplaneMatrix& bp);

struct CrossbarShape {
  std::size_t rows = 16;
  std::size_t cols = 16;
  int num_bits = 8;
};

struct FailurePoint {
  double sigma_ant = 0.0;
  double safety_margin = 0.0;
  std::size_t trials = 0;
  double failure_rate = 0.0;
};

/// Monte Carlo processing-failure rate. Each trial draws a random +1/-1
/// weight array and random sign-magnitude input codes; a (row, plane)
/// decision fails when noise flips it and |exact psum| >= L_I * SM.
/// The rate is failures / (trials * rows * B).
double failure_stats(const CrossbarShape& shape, const NoiseModel& noise, std::size_t trials);

// Evaluates every (sigma, SM) pair on the same trials and noise draws. Output
// is sorted by sigma, then SM. Throws DomainError on an empty grid.
std::vector<FailurePoint> failure_sweep(const CrossbarShape& shape, std::span<const double> sigmas,
                                        std::span<const double> margins, std::size_t trials,
                                        std::uint64_t seed);

// Header "sigma_ant,sm,trials,failure_rate".
std::string failure_csv(std::span<const FailurePoint> points);

}  // namespace bwhtsim
