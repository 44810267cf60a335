#include "bwhtsim/hadamard.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "bwhtsim/errors.hpp"

namespace bwhtsim {

namespace {

// In-place natural-order butterfly.
template <typename T>
void fwht_natural_inplace(std::span<T> v) {
  const std::size_t n = v.size();
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const T a = v[j];
        const T b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

template <typename T>
std::vector<T> fwht_impl(std::span<const T> x, RowOrder order) {
  if (!is_power_of_two(x.size())) {
    throw SizeError("fwht: length " + std::to_string(x.size()) + " is not a power of two");
  }
  std::vector<T> natural(x.begin(), x.end());
  fwht_natural_inplace(std::span<T>(natural));
  if (order == RowOrder::kNatural) return natural;

  const auto perm = sequency_permutation(log2_exact(x.size()));
  std::vector<T> out(natural.size());
  for (std::size_t s = 0; s < perm.size(); ++s) out[s] = natural[perm[s]];
  return out;
}

std::size_t reverse_bits(std::size_t v, int width) {
  std::size_t r = 0;
  for (int i = 0; i < width; ++i) {
    r = (r << 1) | (v & 1U);
    v >>= 1;
  }
  return r;
}

}  // namespace

int log2_exact(std::size_t n) {
  if (!is_power_of_two(n)) {
    throw SizeError("log2_exact: " + std::to_string(n) + " is not a power of two");
  }
  int k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

WalshMatrix::WalshMatrix(int order_k, RowOrder row_order, std::vector<std::int8_t> entries)
    : order_k_(order_k), row_order_(row_order), entries_(std::move(entries)) {
  if (order_k < 0 || order_k > kMaxHadamardOrder) {
    throw SizeError("WalshMatrix: order " + std::to_string(order_k) + " outside [0, " +
                    std::to_string(kMaxHadamardOrder) + "]");
  }
  if (entries_.size() != size() * size()) {
    throw SizeError("WalshMatrix: expected " + std::to_string(size() * size()) + " entries, got " +
                    std::to_string(entries_.size()));
  }
  if (!std::all_of(entries_.begin(), entries_.end(), [](std::int8_t e) { return e == 1 || e == -1; })) {
    throw DomainError("WalshMatrix: entries must be +1 or -1");
  }
}

std::string WalshMatrix::to_csv() const {
  std::ostringstream os;
  const std::size_t m = size();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      if (c) os << ',';
      os << at(r, c);
    }
    os << '\n';
  }
  return os.str();
}

WalshMatrix build_hadamard(int k) {
  if (k < 0 || k > kMaxHadamardOrder) {
    throw SizeError("build_hadamard: k = " + std::to_string(k) + " outside [0, " +
                    std::to_string(kMaxHadamardOrder) + "]");
  }
  const std::size_t m = std::size_t{1} << k;
  std::vector<std::int8_t> e(m * m);
  e[0] = 1;
  // Grow H_{s} -> H_{s+1} inside the final buffer: [[H, H], [H, -H]].
  for (std::size_t s = 1; s < m; s *= 2) {
    for (std::size_t r = 0; r < s; ++r) {
      for (std::size_t c = 0; c < s; ++c) {
        const std::int8_t v = e[r * m + c];
        e[r * m + c + s] = v;
        e[(r + s) * m + c] = v;
        e[(r + s) * m + c + s] = static_cast<std::int8_t>(-v);
      }
    }
  }
  return WalshMatrix(k, RowOrder::kNatural, std::move(e));
}

int sign_changes(std::span<const std::int8_t> row) {
  int changes = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] != row[i - 1]) ++changes;
  }
  return changes;
}

WalshMatrix to_sequency(const WalshMatrix& natural) {
  if (natural.row_order() != RowOrder::kNatural) {
    throw StateError("to_sequency: input must be in natural order");
  }
  const std::size_t m = natural.size();
  std::vector<std::size_t> rows(m);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<int> changes(m);
  for (std::size_t r = 0; r < m; ++r) changes[r] = sign_changes(natural.row(r));
  std::stable_sort(rows.begin(), rows.end(),
                   [&](std::size_t a, std::size_t b) { return changes[a] < changes[b]; });

  std::vector<std::int8_t> e;
  e.reserve(m * m);
  for (std::size_t r : rows) {
    const auto src = natural.row(r);
    e.insert(e.end(), src.begin(), src.end());
  }
  return WalshMatrix(natural.order(), RowOrder::kSequency, std::move(e));
}

std::vector<std::size_t> sequency_permutation(int k) {
  const std::size_t m = std::size_t{1} << k;
  std::vector<std::size_t> perm(m);
  for (std::size_t s = 0; s < m; ++s) perm[s] = reverse_bits(s ^ (s >> 1), k);
  return perm;
}

std::vector<std::int64_t> fwht(std::span<const std::int64_t> x, RowOrder order) {
  return fwht_impl(x, order);
}

std::vector<double> fwht(std::span<const double> x, RowOrder order) {
  return fwht_impl(x, order);
}

std::vector<double> fwht_transpose(std::span<const double> y, RowOrder order) {
  if (order == RowOrder::kNatural) return fwht(y, order);
  if (!is_power_of_two(y.size())) {
    throw SizeError("fwht_transpose: length " + std::to_string(y.size()) + " is not a power of two");
  }
  const auto perm = sequency_permutation(log2_exact(y.size()));
  std::vector<double> natural(y.size());
  for (std::size_t s = 0; s < perm.size(); ++s) natural[perm[s]] = y[s];
  fwht_natural_inplace(std::span<double>(natural));
  return natural;
}

BwhtPlan bwht_plan(std::size_t input_dim, std::size_t block_size, RowOrder order) {
  if (input_dim == 0) throw DomainError("bwht_plan: input_dim must be positive");
  if (!is_power_of_two(block_size)) {
    throw SizeError("bwht_plan: block_size " + std::to_string(block_size) +
                    " is not a power of two");
  }
  BwhtPlan plan;
  plan.input_dim = input_dim;
  plan.block_size = block_size;
  plan.num_blocks = (input_dim + block_size - 1) / block_size;
  plan.pad_len = plan.num_blocks * block_size - input_dim;
  plan.order = order;
  return plan;
}

std::vector<double> bwht_forward(const BwhtPlan& plan, std::span<const double> x) {
  if (x.size() != plan.input_dim) {
    throw SizeError("bwht_forward: expected " + std::to_string(plan.input_dim) + " values, got " +
                    std::to_string(x.size()));
  }
  std::vector<double> padded(plan.padded_dim(), 0.0);
  std::copy(x.begin(), x.end(), padded.begin());

  std::vector<double> out;
  out.reserve(plan.padded_dim());
  for (std::size_t blk = 0; blk < plan.num_blocks; ++blk) {
    const std::span<const double> block(padded.data() + blk * plan.block_size, plan.block_size);
    const auto y = fwht(block, plan.order);
    out.insert(out.end(), y.begin(), y.end());
  }
  return out;
}

std::vector<double> bwht_inverse(const BwhtPlan& plan, std::span<const double> y) {
  if (y.size() != plan.padded_dim()) {
    throw SizeError("bwht_inverse: expected " + std::to_string(plan.padded_dim()) +
                    " values, got " + std::to_string(y.size()));
  }
  const std::size_t m = plan.block_size;
  const double scale = 1.0 / static_cast<double>(m);
  std::vector<double> out;
  out.reserve(plan.padded_dim());
  for (std::size_t blk = 0; blk < plan.num_blocks; ++blk) {
    const auto z = fwht_transpose(y.subspan(blk * m, m), plan.order);
    for (double v : z) out.push_back(v * scale);
  }
  out.resize(plan.input_dim);
  return out;
}

WalshMatrix block_matrix(const BwhtPlan& plan) {
  auto h = build_hadamard(log2_exact(plan.block_size));
  return plan.order == RowOrder::kSequency ? to_sequency(h) : h;
}

}  // namespace bwhtsim
