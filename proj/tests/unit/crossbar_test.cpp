#include "bwhtsim/crossbar.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bwhtsim/errors.hpp"
#include "bwhtsim/fixedpoint.hpp"
#include "bwhtsim/hadamard.hpp"

namespace bwhtsim {
namespace {

// Straight from the definition: decision per plane from codes and signs,
// weighted by 2^(b-1).
std::vector<std::int64_t> brute_force(const std::vector<std::vector<int>>& w, const std::vector<std::uint32_t>& codes,
                                      const std::vector<int>& signs, int bits) {
  std::vector<std::int64_t> y(w.size(), 0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (int b = 1; b <= bits; ++b) {
      long p = 0;
      for (std::size_t j = 0; j < codes.size(); ++j) p += w[i][j] * signs[j] * static_cast<int>((codes[j] >> (b - 1)) & 1U);
      y[i] += (p > 0 ? 1 : -1) * (std::int64_t{1} << (b - 1));
    }
  }
  return y;
}

struct Instance {
  std::vector<std::vector<int>> w;
  std::vector<std::uint32_t> codes;
  std::vector<int> signs;
  int bits;
};

Instance random_instance(std::mt19937_64& rng, std::size_t rows, std::size_t cols, int bits) {
  Instance in;
  in.bits = bits;
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<std::uint32_t> code(0, full_scale_code(bits));
  in.w.assign(rows, std::vector<int>(cols));
  for (auto& r : in.w) {
    for (auto& v : r) v = coin(rng) ? 1 : -1;
  }
  for (std::size_t j = 0; j < cols; ++j) {
    in.codes.push_back(code(rng));
    in.signs.push_back(coin(rng) ? 1 : -1);
  }
  return in;
}

CrossbarConfig to_config(const Instance& in) {
  std::vector<std::int8_t> flat;
  for (const auto& r : in.w) flat.insert(flat.end(), r.begin(), r.end());
  return CrossbarConfig(in.w.size(), in.codes.size(), std::move(flat));
}

BitplaneMatrix to_bitplanes(const Instance& in) {
  std::vector<std::int8_t> s(in.signs.begin(), in.signs.end());
  return BitplaneMatrix(in.bits, 1.0, in.codes, std::move(s));
}

TEST(PsumRow, Examples) {
  const std::vector<std::int8_t> row{1, -1};
  SignedBitplane plane{1, {1, 1}, {1, 1}};
  EXPECT_EQ(psum_row(row, plane), 0);
  SignedBitplane zero{1, {0, 0}, {1, -1}};
  EXPECT_EQ(psum_row(row, zero), 0);
  const std::vector<std::int8_t> wide{1, -1, -1, 1};
  SignedBitplane match{2, {1, 1, 1, 1}, {1, -1, -1, 1}};
  EXPECT_EQ(psum_row(wide, match), 4);
  EXPECT_THROW(psum_row(wide, plane), SizeError);
}

TEST(Comparator, ZeroMapsToMinusOne) {
  EXPECT_EQ(comparator(3.0), 1);
  EXPECT_EQ(comparator(0.0), -1);
  EXPECT_EQ(comparator(-0.2), -1);
}

TEST(F0Apply, HandExample) {
  const CrossbarConfig cfg(1, 2, {1, 1});
  const BitplaneMatrix bp(2, 1.0, {3, 1}, {1, 1});
  const auto recs = psum_records(cfg, bp);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].b, 2);
  EXPECT_EQ(recs[0].exact_psum, 1);
  EXPECT_EQ(recs[0].decision, 1);
  EXPECT_EQ(recs[1].b, 1);
  EXPECT_EQ(recs[1].exact_psum, 2);
  EXPECT_EQ(recs[1].decision, 1);
  EXPECT_EQ(f0_apply(cfg, bp), (std::vector<std::int64_t>{3}));
  EXPECT_EQ(exact_oracle(cfg, bp), (std::vector<std::int64_t>{4}));
}

TEST(F0Apply, ZeroInputGivesNegativeFullScale) {
  for (int bits : {1, 3, 8}) {
    const CrossbarConfig cfg(build_hadamard(2));
    const auto bp = quantize(std::vector<double>(4, 0.0), bits, 1.0);
    const auto y = f0_apply(cfg, bp);
    for (auto v : y) EXPECT_EQ(v, -static_cast<std::int64_t>(full_scale_code(bits)));
    for (auto v : exact_oracle(cfg, bp)) EXPECT_EQ(v, 0);
  }
}

TEST(F0Apply, EmptyCrossbar) {
  const CrossbarConfig cfg(0, 3, {});
  const auto bp = quantize(std::vector<double>{0.1, 0.2, 0.3}, 4, 1.0);
  EXPECT_TRUE(f0_apply(cfg, bp).empty());
}

TEST(F0Apply, ShapeMismatch) {
  const CrossbarConfig cfg(build_hadamard(2));
  const auto bp = quantize(std::vector<double>{0.1, 0.2}, 4, 1.0);
  EXPECT_THROW(f0_apply(cfg, bp), SizeError);
  EXPECT_THROW(evaluate_psum(cfg, quantize(std::vector<double>(4, 0.1), 4, 1.0), 4, 1), IndexError);
}

TEST(F0Apply, MatchesBruteForce) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> dim(1, 32);
  std::uniform_int_distribution<int> bits(1, 8);
  for (int trial = 0; trial < 500; ++trial) {
    const auto in = random_instance(rng, dim(rng), dim(rng), bits(rng));
    ASSERT_EQ(f0_apply(to_config(in), to_bitplanes(in)), brute_force(in.w, in.codes, in.signs, in.bits));
  }
}

TEST(F0Apply, OutputsAreOddAndBounded) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_instance(rng, 8, 8, 6);
    for (auto y : f0_apply(to_config(in), to_bitplanes(in))) {
      ASSERT_EQ(std::abs(y) % 2, 1);
      ASSERT_LE(std::abs(y), 63);
    }
  }
}

TEST(F0Apply, SingleColumnFullScaleIsExact) {
  for (int bits : {1, 4, 8}) {
    for (int w : {1, -1}) {
      for (int s : {1, -1}) {
        const CrossbarConfig cfg(1, 1, {static_cast<std::int8_t>(w)});
        const BitplaneMatrix bp(bits, 1.0, {full_scale_code(bits)}, {static_cast<std::int8_t>(s)});
        EXPECT_EQ(f0_apply(cfg, bp), exact_oracle(cfg, bp));
      }
    }
  }
}

TEST(ExactOracle, Examples) {
  const CrossbarConfig cfg(1, 2, {1, 1});
  EXPECT_EQ(exact_oracle(cfg, BitplaneMatrix(2, 1.0, {3, 1}, {1, 1})), (std::vector<std::int64_t>{4}));
  EXPECT_EQ(exact_oracle(cfg, BitplaneMatrix(2, 1.0, {0, 0}, {1, 1})), (std::vector<std::int64_t>{0}));
}

TEST(ExactOracle, MatchesDirectDotProduct) {
  std::mt19937_64 rng(8);
  const auto in = random_instance(rng, 8, 8, 8);
  const auto y = exact_oracle(to_config(in), to_bitplanes(in));
  for (std::size_t i = 0; i < 8; ++i) {
    std::int64_t want = 0;
    for (std::size_t j = 0; j < 8; ++j) want += in.w[i][j] * in.signs[j] * static_cast<std::int64_t>(in.codes[j]);
    EXPECT_EQ(y[i], want);
  }
}

TEST(Noise, ZeroSigmaMatchesNoiseless) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_instance(rng, 6, 10, 5);
    const auto cfg = to_config(in);
    const auto bp = to_bitplanes(in);
    EXPECT_EQ(f0_apply(cfg, bp, NoiseModel{0.0, 0.1, 99}), f0_apply(cfg, bp));
  }
}

TEST(Noise, DeterministicPerSeedAndRow) {
  const NoiseModel n{0.05, 0.0, 17};
  EXPECT_EQ(psum_noise(n, 3, 8, 16), psum_noise(n, 3, 8, 16));
  EXPECT_NE(psum_noise(n, 3, 8, 16), psum_noise(n, 4, 8, 16));
  EXPECT_NE(psum_noise(n, 3, 8, 16), psum_noise(NoiseModel{0.05, 0.0, 18}, 3, 8, 16));
}

TEST(Noise, StandardDeviationScalesWithColumns) {
  const NoiseModel n{0.01, 0.0, 5};
  const std::size_t cols = 32;
  double sum = 0.0;
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t row = 0; row < 4000; ++row) {
    for (double e : psum_noise(n, row, 8, cols)) {
      sum += e;
      sq += e * e;
      ++count;
    }
  }
  const double mean = sum / count;
  const double sd = std::sqrt(sq / count - mean * mean);
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(sd, cols * 0.01, 0.01);
}

TEST(Noise, Validation) {
  EXPECT_THROW((NoiseModel{-0.1, 0.0, 0}.validate()), DomainError);
  EXPECT_THROW((NoiseModel{0.1, -1.0, 0}.validate()), DomainError);
  EXPECT_THROW((NoiseModel{INFINITY, 0.0, 0}.validate()), DomainError);
}

TEST(FailureStats, ZeroSigmaNeverFails) {
  EXPECT_EQ(failure_stats({16, 16, 8}, NoiseModel{0.0, 0.0, 1}, 200), 0.0);
}

TEST(FailureStats, WideMarginNeverFails) {
  EXPECT_EQ(failure_stats({16, 16, 8}, NoiseModel{0.5, 1.01, 1}, 200), 0.0);
}

TEST(FailureStats, AgreesWithSweepPoint) {
  const CrossbarShape shape{8, 8, 6};
  const std::vector<double> sig{0.01, 0.03};
  const std::vector<double> sm{0.0, 0.125};
  const auto pts = failure_sweep(shape, sig, sm, 300, 42);
  for (const auto& p : pts) {
    EXPECT_EQ(failure_stats(shape, NoiseModel{p.sigma_ant, p.safety_margin, 42}, 300), p.failure_rate);
  }
}

TEST(FailureSweep, MonotoneTrends) {
  const std::vector<double> sig{0.02, 0.0, 0.005, 0.01, 0.05};
  const std::vector<double> sm{0.0, 0.05, 0.1, 0.2, 0.4};
  const auto pts = failure_sweep({16, 16, 8}, sig, sm, 500, 7);
  ASSERT_EQ(pts.size(), 25u);
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t c = 0; c < 5; ++c) {
      const auto& p = pts[a * 5 + c];
      if (c > 0) {
        EXPECT_GE(p.safety_margin, pts[a * 5 + c - 1].safety_margin);
        EXPECT_LE(p.failure_rate, pts[a * 5 + c - 1].failure_rate);
      }
      if (a > 0) {
        EXPECT_GE(p.sigma_ant, pts[(a - 1) * 5 + c].sigma_ant);
        EXPECT_GE(p.failure_rate, pts[(a - 1) * 5 + c].failure_rate);
      }
      if (p.sigma_ant == 0.0) {
        EXPECT_EQ(p.failure_rate, 0.0);
      }
    }
  }
  EXPECT_GT(pts[4 * 5].failure_rate, 0.0);
}

TEST(FailureSweep, CsvIsDeterministic) {
  const std::vector<double> sig{0.0, 0.01};
  const std::vector<double> sm{0.1};
  const auto a = failure_csv(failure_sweep({4, 8, 4}, sig, sm, 50, 3));
  const auto b = failure_csv(failure_sweep({4, 8, 4}, sig, sm, 50, 3));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find('\n')), "sigma_ant,sm,trials,failure_rate");
  EXPECT_NE(a.find("\n0,0.1,50,0\n"), std::string::npos);
}

TEST(FailureSweep, Errors) {
  const std::vector<double> none;
  const std::vector<double> one{0.1};
  EXPECT_THROW(failure_sweep({}, none, one, 10, 0), DomainError);
  EXPECT_THROW(failure_sweep({}, one, one, 0, 0), DomainError);
  EXPECT_THROW(failure_sweep({0, 4, 4}, one, one, 10, 0), SizeError);
}

}  // namespace
}  // namespace bwhtsim
