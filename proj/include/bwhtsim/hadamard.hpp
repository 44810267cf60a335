#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bwhtsim {

enum class RowOrder { kNatural, kSequency };

// Largest k accepted by build_hadamard (a 2^13 x 2^13 matrix is 64 MiB of int8).
inline constexpr int kMaxHadamardOrder = 13;

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Returns log2(n); n must be a power of two.
int log2_exact(std::size_t n);

/// A 2^k x 2^k matrix of +1/-1 entries, stored row-major.
///
/// Natural order is the Sylvester construction; sequency order (the Walsh
/// matrix) has row r with exactly r sign changes.
class WalshMatrix {
 public:
  // Throws DomainError if any entry is not +1/-1 and SizeError if the entry
  // count is not 4^k.
  WalshMatrix(int order_k, RowOrder row_order, std::vector<std::int8_t> entries);

  int order() const { return order_k_; }
  std::size_t size() const { return std::size_t{1} << order_k_; }
  RowOrder row_order() const { return row_order_; }

  int at(std::size_t r, std::size_t c) const { return entries_[r * size() + c]; }
  std::span<const std::int8_t> row(std::size_t r) const {
    return {entries_.data() + r * size(), size()};
  }
  std::span<const std::int8_t> entries() const { return entries_; }

  // Row-major CSV of the integer entries, one matrix row per line.
  std::string to_csv() const;

  friend bool operator==(const WalshMatrix&, const WalshMatrix&) = default;

 private:
  int order_k_;
  RowOrder row_order_;
  std::vector<std::int8_t> entries_;
};

WalshMatrix build_hadamard(int k);

// Reorders the rows of a natural-order matrix by ascending sign-change count.
WalshMatrix to_sequency(const WalshMatrix& natural);

// Number of adjacent sign changes along a +1/-1 row.
int sign_changes(std::span<const std::int8_t> row);

// perm[s] is the natural-order row index holding sequency s, computed from the
// Gray code / bit reversal identity rather than by sorting.
std::vector<std::size_t> sequency_permutation(int k);

// Fast transform Y = W x in O(m log m). Throws SizeError unless x.size() is a power of two.
std::vector<std::int64_t> fwht(std::span<const std::int64_t> x, RowOrder order = RowOrder::kNatural);
std::vector<double> fwht(std::span<const double> x, RowOrder order = RowOrder::kNatural);

// W^T y for the matrix of the given order (H is symmetric; sequency W^T y = H P^T y).
std::vector<double> fwht_transpose(std::span<const double> y, RowOrder order = RowOrder::kNatural);

/// Blockwise transform layout: uniform power-of-two blocks, with zeros
/// appended to the last block only.
struct BwhtPlan {
  std::size_t input_dim = 0;
  std::size_t block_size = 0;
  std::size_t num_blocks = 0;
  std::size_t pad_len = 0;
  RowOrder order = RowOrder::kNatural;

  std::size_t padded_dim() const { return num_blocks * block_size; }

  friend bool operator==(const BwhtPlan&, const BwhtPlan&) = default;
};

BwhtPlan bwht_plan(std::size_t input_dim, std::size_t block_size,
                   RowOrder order = RowOrder::kNatural);

// Length input_dim -> padded_dim.
std::vector<double> bwht_forward(const BwhtPlan& plan, std::span<const double> x);

// Length padded_dim -> input_dim. Applies W^T / block_size per block and drops the padding.
std::vector<double> bwht_inverse(const BwhtPlan& plan, std::span<const double> y);

// The per-block transform matrix used by a plan.
WalshMatrix block_matrix(const BwhtPlan& plan);

}  // namespace bwhtsim
