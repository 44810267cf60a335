#pragma once

#include <cstdint>

namespace bwhtsim {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for sub-stream `index` of a master seed. Independent of evaluation order,
// so per-trial or per-row streams are reproducible under any scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

}  // namespace bwhtsim
