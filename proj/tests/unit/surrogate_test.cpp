#include "bwhtsim/surrogate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bwhtsim/crossbar.hpp"
#include "bwhtsim/errors.hpp"
#include "bwhtsim/fixedpoint.hpp"
#include "bwhtsim/hadamard.hpp"

namespace bwhtsim {
namespace {

CrossbarConfig random_crossbar(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::bernoulli_distribution coin(0.5);
  std::vector<std::int8_t> w(rows * cols);
  for (auto& v : w) v = coin(rng) ? 1 : -1;
  return CrossbarConfig(rows, cols, std::move(w));
}

TEST(SignSurrogate, Examples) {
  EXPECT_EQ(sign_surrogate(0.0, 3.0), 0.0);
  EXPECT_NEAR(sign_surrogate(5.0, 10.0), 1.0, 1e-15);
  EXPECT_NEAR(sign_surrogate(-5.0, 10.0), -1.0, 1e-15);
  EXPECT_EQ(sign_surrogate_grad(0.0, 4.0), 4.0);
}

TEST(SignSurrogate, ConvergesAwayFromZero) {
  for (double delta : {0.001, 0.01, 0.5}) {
    const double tau = 8.0 / delta;
    for (double x = delta; x < 3.0; x += 0.01) {
      ASSERT_LT(std::fabs(sign_surrogate(x, tau) - 1.0), 1e-6);
      ASSERT_LT(std::fabs(sign_surrogate(-x, tau) + 1.0), 1e-6);
    }
  }
}

TEST(BitSurrogate, Examples) {
  const SurrogateConfig cfg{10.0, 4, 1.0};
  for (int b = 1; b <= 4; ++b) EXPECT_EQ(bit_surrogate(0.0, b, cfg), 0.5);
  EXPECT_THROW(bit_surrogate(0.1, 0, cfg), IndexError);
  EXPECT_THROW(bit_surrogate(0.1, 5, cfg), IndexError);
}

TEST(BitSurrogate, Periodic) {
  const SurrogateConfig cfg{7.0, 6, 2.0};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(0.0, 2.0);
  for (int b = 1; b <= 6; ++b) {
    const double period = cfg.x_max / std::ldexp(1.0, cfg.b_max - b);
    for (int i = 0; i < 50; ++i) {
      const double x = dist(rng);
      EXPECT_NEAR(bit_surrogate(x + period, b, cfg), bit_surrogate(x, b, cfg), 1e-9);
    }
  }
}

TEST(BitSurrogate, SharpLimitReadsBinaryFraction) {
  // With large tau the surrogate of plane b reads bit b of floor(x 2^B / x_max).
  const SurrogateConfig cfg{1e4, 5, 1.0};
  for (int k = 0; k < 32; ++k) {
    const double x = (k + 0.5) / 32.0;
    for (int b = 1; b <= 5; ++b) {
      EXPECT_NEAR(bit_surrogate(x, b, cfg), static_cast<double>((k >> (b - 1)) & 1), 1e-9) << k << " " << b;
    }
  }
}

TEST(Surrogates, GradientsMatchFiniteDifferences) {
  const SurrogateConfig cfg{10.0, 4, 1.0};
  const double h = 1e-6;
  for (double x = -0.97; x < 1.0; x += 0.0731) {
    const double ns = (sign_surrogate(x + h, cfg.tau) - sign_surrogate(x - h, cfg.tau)) / (2 * h);
    EXPECT_NEAR(sign_surrogate_grad(x, cfg.tau), ns, 1e-4 * std::max(1.0, std::fabs(ns)));
    for (int b = 1; b <= 4; ++b) {
      const double nb = (bit_surrogate(x + h, b, cfg) - bit_surrogate(x - h, b, cfg)) / (2 * h);
      EXPECT_NEAR(bit_surrogate_grad(x, b, cfg), nb, 1e-4 * std::max(1.0, std::fabs(nb)));
    }
  }
}

TEST(StableLogistic, Extremes) {
  EXPECT_EQ(stable_logistic(0.0), 0.5);
  EXPECT_EQ(stable_logistic(-1e6), 0.0);
  EXPECT_EQ(stable_logistic(1e6), 1.0);
  EXPECT_NEAR(stable_logistic(2.0) + stable_logistic(-2.0), 1.0, 1e-15);
}

TEST(F0Surrogate, EmptyCrossbar) {
  const CrossbarConfig cfg(0, 2, {});
  const auto out = f0_surrogate(SurrogateConfig{}, std::vector<double>{0.1, 0.2}, cfg);
  EXPECT_TRUE(out.y.empty());
  EXPECT_TRUE(out.jacobian.empty());
}

TEST(F0Surrogate, Errors) {
  const CrossbarConfig cfg(build_hadamard(1));
  EXPECT_THROW(f0_surrogate(SurrogateConfig{}, std::vector<double>{0.1}, cfg), SizeError);
  EXPECT_THROW(f0_surrogate(SurrogateConfig{0.0, 4, 1.0}, std::vector<double>{0.1, 0.2}, cfg), DomainError);
  EXPECT_THROW(f0_surrogate(SurrogateConfig{}, std::vector<double>{0.1, NAN}, cfg), DomainError);
}

TEST(F0Surrogate, SharpLimitMatchesBitplanePath) {
  std::mt19937_64 rng(2);
  for (int bits : {2, 4, 6}) {
    const double x_max = 1.5;
    const SurrogateConfig cfg{1e4, bits, x_max};
    const double fs = static_cast<double>(full_scale_code(bits));
    std::uniform_int_distribution<int> level(-static_cast<int>(fs), static_cast<int>(fs));
    for (int trial = 0; trial < 30; ++trial) {
      const auto xbar = random_crossbar(rng, 6, 8);
      std::vector<double> x(8);
      for (auto& v : x) v = level(rng) * x_max / fs;
      const auto exact = f0_apply(xbar, quantize(x, bits, x_max));
      const auto soft = f0_surrogate(cfg, x, xbar);
      for (std::size_t i = 0; i < 6; ++i) ASSERT_NEAR(soft.y[i], static_cast<double>(exact[i]), 1e-6);
    }
  }
}

TEST(F0Surrogate, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-0.95, 0.95);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const SurrogateConfig cfg{10.0, 3, 1.0};
    const auto xbar = random_crossbar(rng, 4, 5);
    std::vector<double> x(5);
    for (auto& v : x) {
      do {
        v = dist(rng);
      } while (std::fabs(v) < 1e-3);
    }
    const auto out = f0_surrogate(cfg, x, xbar);
    for (std::size_t j = 0; j < 5; ++j) {
      auto xp = x;
      auto xm = x;
      xp[j] += h;
      xm[j] -= h;
      const auto yp = f0_surrogate(cfg, xp, xbar).y;
      const auto ym = f0_surrogate(cfg, xm, xbar).y;
      for (std::size_t i = 0; i < 4; ++i) {
        const double num = (yp[i] - ym[i]) / (2 * h);
        EXPECT_NEAR(out.d(i, j), num, 1e-3 * std::max({std::fabs(num), std::fabs(out.d(i, j)), 1e-3}));
      }
    }
  }
}

TEST(F0Surrogate, ClippedInputsHaveZeroGradient) {
  const CrossbarConfig xbar(build_hadamard(1));
  const auto out = f0_surrogate(SurrogateConfig{5.0, 4, 1.0}, std::vector<double>{2.0, -0.3}, xbar);
  EXPECT_EQ(out.d(0, 0), 0.0);
  EXPECT_EQ(out.d(1, 0), 0.0);
  const auto at_edge = f0_surrogate(SurrogateConfig{5.0, 4, 1.0}, std::vector<double>{1.0, -0.3}, xbar);
  EXPECT_EQ(out.y, at_edge.y);
}

TEST(F0Surrogate, FiniteForExtremeSettings) {
  std::mt19937_64 rng(4);
  const auto xbar = random_crossbar(rng, 16, 16);
  std::uniform_real_distribution<double> dist(-100.0, 100.0);
  std::vector<double> x(16);
  for (auto& v : x) v = dist(rng);
  for (double tau : {1e-3, 1.0, 1e4, 1e8}) {
    const auto out = f0_surrogate(SurrogateConfig{tau, 8, 1.0}, x, xbar);
    for (double v : out.y) ASSERT_TRUE(std::isfinite(v));
    for (double v : out.jacobian) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(TauSchedule, GrowsGeometricallyAndCaps) {
  const TauSchedule s{1.0, 2.0, 3, 10.0};
  EXPECT_EQ(s.at(0), 1.0);
  EXPECT_EQ(s.at(2), 1.0);
  EXPECT_EQ(s.at(3), 2.0);
  EXPECT_EQ(s.at(9), 8.0);
  EXPECT_EQ(s.at(12), 10.0);
  EXPECT_EQ(s.at(1000), 10.0);
  double prev = 0.0;
  for (std::size_t k = 0; k < 100; ++k) {
    EXPECT_GE(s.at(k), prev);
    prev = s.at(k);
  }
}

TEST(TauSchedule, Validation) {
  EXPECT_THROW((TauSchedule{0.0, 2.0, 1, 10.0}.validate()), DomainError);
  EXPECT_THROW((TauSchedule{1.0, 1.0, 1, 10.0}.validate()), DomainError);
  EXPECT_THROW((TauSchedule{1.0, 2.0, 0, 10.0}.validate()), DomainError);
  EXPECT_NO_THROW((TauSchedule{}.validate()));
}

}  // namespace
}  // namespace bwhtsim
