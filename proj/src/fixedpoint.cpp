#include "bwhtsim/fixedpoint.hpp"

#include <cmath>
#include <string>

#include "bwhtsim/errors.hpp"

namespace bwhtsim {

namespace {

void check_codec(int num_bits, double x_max) {
  if (num_bits < 1 || num_bits > kMaxBits) {
    throw DomainError("bit width " + std::to_string(num_bits) + " outside [1, " +
                      std::to_string(kMaxBits) + "]");
  }
  if (!(x_max > 0.0) || !std::isfinite(x_max)) {
    throw DomainError("x_max must be positive and finite");
  }
}

}  // namespace

BitplaneMatrix::BitplaneMatrix(int num_bits, double x_max, std::vector<std::uint32_t> codes,
                               std::vector<std::int8_t> signs)
    : num_bits_(num_bits), x_max_(x_max), codes_(std::move(codes)), signs_(std::move(signs)) {
  check_codec(num_bits, x_max);
  if (codes_.size() != signs_.size()) {
    throw SizeError("BitplaneMatrix: " + std::to_string(codes_.size()) + " codes but " +
                    std::to_string(signs_.size()) + " signs");
  }
  const std::uint32_t fs = full_scale_code(num_bits);
  for (std::size_t j = 0; j < codes_.size(); ++j) {
    if (codes_[j] > fs) throw DomainError("BitplaneMatrix: code exceeds full scale");
    if (signs_[j] != 1 && signs_[j] != -1) throw DomainError("BitplaneMatrix: sign must be +1 or -1");
  }
  planes_.assign(static_cast<std::size_t>(num_bits), std::vector<std::uint8_t>(codes_.size()));
  for (int b = 1; b <= num_bits; ++b) {
    auto& plane = planes_[static_cast<std::size_t>(b - 1)];
    for (std::size_t j = 0; j < codes_.size(); ++j) {
      plane[j] = static_cast<std::uint8_t>((codes_[j] >> (b - 1)) & 1U);
    }
  }
}

std::span<const std::uint8_t> BitplaneMatrix::plane(int b) const {
  if (b < 1 || b > num_bits_) {
    throw IndexError("bitplane " + std::to_string(b) + " outside [1, " + std::to_string(num_bits_) +
                     "]");
  }
  return planes_[static_cast<std::size_t>(b - 1)];
}

BitplaneMatrix quantize(std::span<const double> x, int num_bits, double x_max) {
  check_codec(num_bits, x_max);
  const std::uint32_t fs = full_scale_code(num_bits);
  const double scale = static_cast<double>(fs) / x_max;

  std::vector<std::uint32_t> codes(x.size());
  std::vector<std::int8_t> signs(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) throw DomainError("quantize: non-finite input at index " + std::to_string(j));
    signs[j] = x[j] >= 0.0 ? 1 : -1;
    // std::round rounds halves away from zero.
    const double level = std::round(std::fabs(x[j]) * scale);
    codes[j] = level >= static_cast<double>(fs) ? fs : static_cast<std::uint32_t>(level);
  }
  return BitplaneMatrix(num_bits, x_max, std::move(codes), std::move(signs));
}

std::vector<double> dequantize(const BitplaneMatrix& bp) {
  const std::uint32_t fs = full_scale_code(bp.num_bits());
  std::vector<double> out(bp.num_elems());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double mag = bp.code(j) == fs
                           ? bp.x_max()
                           : static_cast<double>(bp.code(j)) * bp.x_max() / static_cast<double>(fs);
    out[j] = bp.sign(j) * mag;
  }
  return out;
}

SignedBitplane signed_plane(const BitplaneMatrix& bp, int b) {
  const auto bits = bp.plane(b);
  SignedBitplane sp;
  sp.b = b;
  sp.bits.assign(bits.begin(), bits.end());
  sp.signs.assign(bp.signs().begin(), bp.signs().end());
  return sp;
}

}  // namespace bwhtsim
