#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bwhtsim {

inline constexpr int kMaxBits = 30;

// Largest magnitude code for B bits, 2^B - 1.
constexpr std::uint32_t full_scale_code(int num_bits) {
  return static_cast<std::uint32_t>((std::uint64_t{1} << num_bits) - 1);
}

/// Sign-magnitude fixed-point codes of a vector, kept both as per-element
/// codes and as B bitplanes. Plane b = 1 is the LSB, b = B the MSB.
class BitplaneMatrix {
 public:
  // Builds planes from codes. Throws DomainError on a bad bit width, a
  // non-positive x_max, a code above 2^B - 1, or a sign other than +1/-1;
  // SizeError if codes and signs differ in length.
  BitplaneMatrix(int num_bits, double x_max, std::vector<std::uint32_t> codes,
                 std::vector<std::int8_t> signs);

  std::size_t num_elems() const { return codes_.size(); }
  int num_bits() const { return num_bits_; }
  double x_max() const { return x_max_; }

  std::uint32_t code(std::size_t j) const { return codes_[j]; }
  int sign(std::size_t j) const { return signs_[j]; }
  std::span<const std::uint32_t> codes() const { return codes_; }
  std::span<const std::int8_t> signs() const { return signs_; }

  // Binary plane b in [1, B]; throws IndexError otherwise.
  std::span<const std::uint8_t> plane(int b) const;

 private:
  int num_bits_;
  double x_max_;
  std::vector<std::uint32_t> codes_;
  std::vector<std::int8_t> signs_;
  std::vector<std::vector<std::uint8_t>> planes_;  // planes_[b - 1]
};

/// One bitplane with the element signs applied: values in {-1, 0, +1}.
struct SignedBitplane {
  int b = 0;
  std::vector<std::uint8_t> bits;
  std::vector<std::int8_t> signs;

  std::size_t size() const { return bits.size(); }
  int value(std::size_t j) const { return signs[j] * static_cast<int>(bits[j]); }
};

// code = round(|x| (2^B - 1) / x_max), half away from zero, clamped to full
// scale; sign = +1 for x >= 0. Throws DomainError on non-finite input.
BitplaneMatrix quantize(std::span<const double> x, int num_bits, double x_max);

std::vector<double> dequantize(const BitplaneMatrix& bp);

SignedBitplane signed_plane(const BitplaneMatrix& bp, int b);

}  // namespace bwhtsim
