#include "bwhtsim/crossbar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>

#include <fmt/format.h>

#include "bwhtsim/errors.hpp"
#include "bwhtsim/random.hpp"

namespace bwhtsim {

namespace {

void check_shape(const CrossbarConfig& cfg, const BitplaneMatrix& bp) {
  if (cfg.cols() != bp.num_elems()) {
    throw SizeError(fmt::format("crossbar has {} columns but input has {} elements", cfg.cols(),
                                bp.num_elems()));
  }
}

std::int64_t psum_of(const CrossbarConfig& cfg, const BitplaneMatrix& bp, std::size_t row, int b) {
  const auto bits = bp.plane(b);
  const auto w = cfg.row(row);
  std::int64_t acc = 0;
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if (bits[j]) acc += bp.sign(j) * w[j];
  }
  return acc;
}

}  // namespace

CrossbarConfig::CrossbarConfig(std::size_t rows, std::size_t cols, std::vector<std::int8_t> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (cols == 0) throw SizeError("CrossbarConfig: cols must be positive");
  if (entries_.size() != rows * cols) {
    throw SizeError(fmt::format("CrossbarConfig: expected {} entries, got {}", rows * cols,
                                entries_.size()));
  }
  if (!std::all_of(entries_.begin(), entries_.end(), [](std::int8_t e) { return e == 1 || e == -1; })) {
    throw DomainError("CrossbarConfig: entries must be +1 or -1");
  }
}

CrossbarConfig::CrossbarConfig(const WalshMatrix& m)
    : CrossbarConfig(m.size(), m.size(), std::vector<std::int8_t>(m.entries().begin(), m.entries().end())) {}

void NoiseModel::validate() const {
  if (!(sigma_ant >= 0.0) || !std::isfinite(sigma_ant)) {
    throw DomainError("sigma_ant must be finite and non-negative");
  }
  if (!(safety_margin >= 0.0) || !std::isfinite(safety_margin)) {
    throw DomainError("safety margin must be finite and non-negative");
  }
}

std::int64_t psum_row(std::span<const std::int8_t> row, const SignedBitplane& plane) {
  if (row.size() != plane.size() || plane.signs.size() != plane.size()) {
    throw SizeError(fmt::format("psum_row: row length {} vs plane length {}", row.size(), plane.size()));
  }
  std::int64_t acc = 0;
  for (std::size_t j = 0; j < row.size(); ++j) acc += plane.value(j) * row[j];
  return acc;
}

std::vector<double> psum_noise(const NoiseModel& noise, std::size_t row, int num_bits,
                               std::size_t cols) {
  noise.validate();
  std::vector<double> eps(static_cast<std::size_t>(num_bits), 0.0);
  if (noise.sigma_ant == 0.0) return eps;
  std::mt19937_64 rng(derive_seed(noise.seed, row));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double stddev = static_cast<double>(cols) * noise.sigma_ant;
  // Drawn MSB first, matching execution order.
  for (int b = num_bits; b >= 1; --b) eps[static_cast<std::size_t>(b - 1)] = stddev * normal(rng);
  return eps;
}

PsumRecord evaluate_psum(const CrossbarConfig& cfg, const BitplaneMatrix& bp, std::size_t row, int b,
                         double eps) {
  check_shape(cfg, bp);
  if (row >= cfg.rows()) throw IndexError(fmt::format("row {} outside crossbar of {} rows", row, cfg.rows()));
  PsumRecord rec;
  rec.row = row;
  rec.b = b;
  rec.exact_psum = psum_of(cfg, bp, row, b);
  rec.noisy_psum = static_cast<double>(rec.exact_psum) + eps;
  rec.decision = comparator(rec.noisy_psum);
  return rec;
}

std::vector<PsumRecord> psum_records(const CrossbarConfig& cfg, const BitplaneMatrix& bp,
                                     const std::optional<NoiseModel>& noise) {
  check_shape(cfg, bp);
  const int nb = bp.num_bits();
  std::vector<PsumRecord> out;
  out.reserve(cfg.rows() * static_cast<std::size_t>(nb));
  for (std::size_t i = 0; i < cfg.rows(); ++i) {
    const auto eps = noise ? psum_noise(*noise, i, nb, cfg.cols())
                           : std::vector<double>(static_cast<std::size_t>(nb), 0.0);
    for (int b = nb; b >= 1; --b) {
      out.push_back(evaluate_psum(cfg, bp, i, b, eps[static_cast<std::size_t>(b - 1)]));
    }
  }
  return out;
}

std::vector<std::int64_t> f0_apply(const CrossbarConfig& cfg, const BitplaneMatrix& bp,
                                   const std::optional<NoiseModel>& noise) {
  std::vector<std::int64_t> y(cfg.rows(), 0);
  for (const auto& rec : psum_records(cfg, bp, noise)) {
    y[rec.row] += rec.decision * (std::int64_t{1} << (rec.b - 1));
  }
  return y;
}

std::vector<std::int64_t> exact_oracle(const CrossbarConfig& cfg, const BitplaneMatrix& bp) {
  check_shape(cfg, bp);
  std::vector<std::int64_t> y(cfg.rows(), 0);
  for (std::size_t i = 0; i < cfg.rows(); ++i) {
    const auto w = cfg.row(i);
    std::int64_t acc = 0;
    for (std::size_t j = 0; j < cfg.cols(); ++j) {
      acc += static_cast<std::int64_t>(bp.code(j)) * bp.sign(j) * w[j];
    }
    y[i] = acc;
  }
  return y;
}

std::vector<FailurePoint> failure_sweep(const CrossbarShape& shape, std::span<const double> sigmas,
                                        std::span<const double> margins, std::size_t trials,
                                        std::uint64_t seed) {
  if (sigmas.empty() || margins.empty()) throw DomainError("failure_sweep: empty sigma or SM grid");
  if (trials == 0) throw DomainError("failure_sweep: trials must be positive");
  if (shape.rows == 0 || shape.cols == 0) throw SizeError("failure_sweep: empty crossbar shape");
  if (shape.num_bits < 1 || shape.num_bits > kMaxBits) throw DomainError("failure_sweep: bad bit width");

  std::vector<double> sig(sigmas.begin(), sigmas.end());
  std::vector<double> sms(margins.begin(), margins.end());
  for (double s : sig) NoiseModel{s, 0.0, seed}.validate();
  for (double m : sms) NoiseModel{0.0, m, seed}.validate();
  std::sort(sig.begin(), sig.end());
  std::sort(sms.begin(), sms.end());

  const auto cols_d = static_cast<double>(shape.cols);
  const std::uint32_t fs = full_scale_code(shape.num_bits);
  std::vector<std::uint64_t> failures(sig.size() * sms.size(), 0);

  std::vector<std::int8_t> weights(shape.rows * shape.cols);
  std::vector<std::uint32_t> codes(shape.cols);
  std::vector<std::int8_t> signs(shape.cols);
  for (std::size_t t = 0; t < trials; ++t) {
    std::mt19937_64 rng(derive_seed(seed, t));
    std::uniform_int_distribution<std::uint32_t> code_dist(0, fs);
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& w : weights) w = coin(rng) ? 1 : -1;
    for (std::size_t j = 0; j < shape.cols; ++j) {
      codes[j] = code_dist(rng);
      signs[j] = coin(rng) ? 1 : -1;
    }
    for (std::size_t i = 0; i < shape.rows; ++i) {
      const std::int8_t* w = weights.data() + i * shape.cols;
      for (int b = shape.num_bits; b >= 1; --b) {
        std::int64_t p = 0;
        for (std::size_t j = 0; j < shape.cols; ++j) {
          if ((codes[j] >> (b - 1)) & 1U) p += signs[j] * w[j];
        }
        // One standard normal per decision, scaled per grid point, so every
        // grid point sees the same draws.
        const double z = normal(rng);
        const double pd = static_cast<double>(p);
        const int clean = comparator(pd);
        for (std::size_t a = 0; a < sig.size(); ++a) {
          if (comparator(pd + cols_d * sig[a] * z) == clean) continue;
          for (std::size_t c = 0; c < sms.size(); ++c) {
            if (std::fabs(pd) >= cols_d * sms[c]) ++failures[a * sms.size() + c];
          }
        }
      }
    }
  }

  const double decisions =
      static_cast<double>(trials) * static_cast<double>(shape.rows) * static_cast<double>(shape.num_bits);
  std::vector<FailurePoint> out;
  out.reserve(failures.size());
  for (std::size_t a = 0; a < sig.size(); ++a) {
    for (std::size_t c = 0; c < sms.size(); ++c) {
      out.push_back({sig[a], sms[c], trials,
                     static_cast<double>(failures[a * sms.size() + c]) / decisions});
    }
  }
  return out;
}

double failure_stats(const CrossbarShape& shape, const NoiseModel& noise, std::size_t trials) {
  noise.validate();
  const double sigma[] = {noise.sigma_ant};
  const double margin[] = {noise.safety_margin};
  return failure_sweep(shape, sigma, margin, trials, noise.seed).front().failure_rate;
}

std::string failure_csv(std::span<const FailurePoint> points) {
  std::string out = "sigma_ant,sm,trials,failure_rate\n";
  for (const auto& p : points) {
    out += fmt::format("{},{},{},{}\n", p.sigma_ant, p.safety_margin, p.trials, p.failure_rate);
  }
  return out;
}

}  // namespace bwhtsim
