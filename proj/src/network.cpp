#include "bwhtsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "bwhtsim/errors.hpp"
#include "bwhtsim/fixedpoint.hpp"
#include "bwhtsim/random.hpp"

namespace bwhtsim {

namespace {

CrossbarConfig transposed(const WalshMatrix& w) {
  const std::size_t m = w.size();
  std::vector<std::int8_t> e(m * m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) e[c * m + r] = static_cast<std::int8_t>(w.at(r, c));
  }
  return CrossbarConfig(m, m, std::move(e));
}

std::vector<double> scaled(std::span<const std::int64_t> y, double step) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = static_cast<double>(y[i]) * step;
  return out;
}

double code_step(const ExecContext& ctx) {
  return ctx.x_max / static_cast<double>(full_scale_code(ctx.num_bits));
}

// Transform of one block, u = W a in the mode's units.
std::vector<double> forward_block(const BwhtLayer& layer, std::span<const double> a, std::size_t blk,
                                  const ExecContext& ctx, LayerCache* cache) {
  const auto& plan = layer.plan();
  const std::size_t m = plan.block_size;
  switch (ctx.mode) {
    case ExecMode::kFloat:
      return fwht(a, plan.order);
    case ExecMode::kBitplaneExact: {
      const auto bp = quantize(a, ctx.num_bits, ctx.x_max);
      return scaled(exact_oracle(layer.forward_array(), bp), code_step(ctx));
    }
    case ExecMode::kBitplane1Bit: {
      const auto bp = quantize(a, ctx.num_bits, ctx.x_max);
      if (!ctx.early_termination) return scaled(f0_apply(layer.forward_array(), bp), code_step(ctx));
      std::vector<std::int64_t> units(m);
      for (std::size_t k = 0; k < m; ++k) {
        units[k] = threshold_to_units(layer.thresholds()[blk * m + k], ctx.num_bits, ctx.x_max);
      }
      auto res = f0_with_early_term(layer.forward_array(), bp, units);
      if (cache) cache->traces.push_back(std::move(res.trace));
      return scaled(res.outputs, code_step(ctx));
    }
    case ExecMode::kSurrogate: {
      const SurrogateConfig sc{ctx.tau, ctx.num_bits, ctx.x_max};
      auto out = f0_surrogate(sc, a, layer.forward_array());
      const double step = code_step(ctx);
      for (auto& v : out.y) v *= step;
      if (cache) {
        for (auto& v : out.jacobian) v *= step;
        cache->forward_jacobians.push_back(std::move(out.jacobian));
      }
      return std::move(out.y);
    }
  }
  throw StateError("unknown exec mode");
}

// Inverse transform of one block, z ~ W^T v / m.
std::vector<double> inverse_block(const BwhtLayer& layer, std::span<const double> v, const ExecContext& ctx,
                                  LayerCache* cache) {
  const auto& plan = layer.plan();
  const auto m = static_cast<double>(plan.block_size);
  switch (ctx.mode) {
    case ExecMode::kFloat: {
      auto z = fwht_transpose(v, plan.order);
      for (auto& e : z) e /= m;
      return z;
    }
    case ExecMode::kBitplaneExact: {
      // Coefficients span [-m x_max, m x_max]; widen the codec to match.
      const double coeff_max = m * ctx.x_max;
      const auto bp = quantize(v, ctx.num_bits, coeff_max);
      const double step = coeff_max / static_cast<double>(full_scale_code(ctx.num_bits)) / m;
      return scaled(exact_oracle(layer.inverse_array(), bp), step);
    }
    case ExecMode::kBitplane1Bit: {
      const auto bp = quantize(v, ctx.num_bits, ctx.x_max);
      return scaled(f0_apply(layer.inverse_array(), bp), code_step(ctx));
    }
    case ExecMode::kSurrogate: {
      const SurrogateConfig sc{ctx.tau, ctx.num_bits, ctx.x_max};
      auto out = f0_surrogate(sc, v, layer.inverse_array());
      const double step = code_step(ctx);
      for (auto& e : out.y) e *= step;
      if (cache) {
        for (auto& e : out.jacobian) e *= step;
        cache->inverse_jacobians.push_back(std::move(out.jacobian));
      }
      return std::move(out.y);
    }
  }
  throw StateError("unknown exec mode");
}

// y = J^T d for a row-major m x m Jacobian.
std::vector<double> jacobian_transpose_apply(const std::vector<double>& jac, std::span<const double> d) {
  const std::size_t m = d.size();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (d[i] == 0.0) continue;
    const double* row = jac.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) out[j] += row[j] * d[i];
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(logits[k] - mx);
    sum += p[k];
  }
  for (auto& v : p) v /= sum;
  return p;
}

double cross_entropy(std::span<const double> logits, int label) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  return std::log(sum) + mx - logits[static_cast<std::size_t>(label)];
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

LayerMode parse_layer_mode(const std::string& name) {
  if (name == "expand") return LayerMode::kExpand;
  if (name == "project") return LayerMode::kProject;
  throw DomainError("unknown layer mode '" + name + "'");
}

ExecMode parse_exec_mode(const std::string& name) {
  if (name == "float") return ExecMode::kFloat;
  if (name == "bitplane_exact") return ExecMode::kBitplaneExact;
  if (name == "bitplane_1bit") return ExecMode::kBitplane1Bit;
  if (name == "surrogate") return ExecMode::kSurrogate;
  throw DomainError("unknown exec mode '" + name + "'");
}

std::string to_string(LayerMode m) { return m == LayerMode::kExpand ? "expand" : "project"; }

std::string to_string(ExecMode m) {
  switch (m) {
    case ExecMode::kFloat: return "float";
    case ExecMode::kBitplaneExact: return "bitplane_exact";
    case ExecMode::kBitplane1Bit: return "bitplane_1bit";
    case ExecMode::kSurrogate: return "surrogate";
  }
  return "unknown";
}

void ExecContext::validate() const {
  if (num_bits < 1 || num_bits > kMaxBits) throw DomainError("exec: bad bit width");
  if (!(x_max > 0.0) || !std::isfinite(x_max)) throw DomainError("exec: x_max must be positive");
  if (mode == ExecMode::kSurrogate && (!(tau > 0.0) || !std::isfinite(tau))) {
    throw DomainError("exec: tau must be positive");
  }
}

BwhtLayer::BwhtLayer(LayerMode mode, std::size_t input_dim, std::size_t target_dim, std::size_t block_size,
                     ThresholdVector thresholds, RowOrder order)
    : mode_(mode),
      input_dim_(input_dim),
      target_dim_(target_dim),
      plan_(bwht_plan(mode == LayerMode::kExpand ? target_dim : input_dim, block_size, order)),
      thresholds_(std::move(thresholds)),
      forward_array_(block_matrix(plan_)),
      inverse_array_(transposed(block_matrix(plan_))) {
  if (input_dim == 0 || target_dim == 0) throw DomainError("BwhtLayer: dimensions must be positive");
  if (mode == LayerMode::kExpand && target_dim < input_dim) {
    throw SizeError(fmt::format("BwhtLayer: expand target {} below input {}", target_dim, input_dim));
  }
  if (mode == LayerMode::kProject && target_dim > plan_.padded_dim()) {
    throw SizeError(fmt::format("BwhtLayer: project target {} above transformed width {}", target_dim,
                                plan_.padded_dim()));
  }
  if (thresholds_.size() != plan_.padded_dim()) {
    throw SizeError(fmt::format("BwhtLayer: {} thresholds for {} channels", thresholds_.size(),
                                plan_.padded_dim()));
  }
}

BwhtLayer make_layer(LayerMode mode, std::size_t input_dim, std::size_t target_dim, std::size_t block_size,
                     double t_max, std::uint64_t seed, double init_scale) {
  const auto plan = bwht_plan(mode == LayerMode::kExpand ? target_dim : input_dim, block_size);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-init_scale * t_max, init_scale * t_max);
  std::vector<double> t(plan.padded_dim());
  for (auto& v : t) v = dist(rng);
  return BwhtLayer(mode, input_dim, target_dim, block_size, ThresholdVector(std::move(t), t_max));
}

std::vector<double> layer_forward(const BwhtLayer& layer, std::span<const double> x, const ExecContext& ctx,
                                  LayerCache* cache) {
  ctx.validate();
  if (x.size() != layer.input_dim()) {
    throw SizeError(fmt::format("layer_forward: expected {} inputs, got {}", layer.input_dim(), x.size()));
  }
  const auto& plan = layer.plan();
  const std::size_t m = plan.block_size;
  const std::size_t width = plan.padded_dim();

  std::vector<double> padded(width, 0.0);
  std::copy(x.begin(), x.end(), padded.begin());

  std::vector<double> coeffs;
  coeffs.reserve(width);
  for (std::size_t blk = 0; blk < plan.num_blocks; ++blk) {
    const auto u = forward_block(layer, std::span<const double>(padded).subspan(blk * m, m), blk, ctx, cache);
    coeffs.insert(coeffs.end(), u.begin(), u.end());
  }

  std::vector<double> activated(width);
  for (std::size_t c = 0; c < width; ++c) activated[c] = soft_threshold(coeffs[c], layer.thresholds()[c]);

  std::vector<double> out;
  out.reserve(width);
  for (std::size_t blk = 0; blk < plan.num_blocks; ++blk) {
    const auto z = inverse_block(layer, std::span<const double>(activated).subspan(blk * m, m), ctx, cache);
    out.insert(out.end(), z.begin(), z.end());
  }
  out.resize(layer.output_dim());

  if (cache) {
    cache->coeffs = std::move(coeffs);
    cache->activated = std::move(activated);
  }
  return out;
}

LayerGrad layer_backward(const BwhtLayer& layer, const LayerCache& cache, std::span<const double> d_output,
                         const ExecContext& ctx) {
  if (ctx.mode != ExecMode::kFloat && ctx.mode != ExecMode::kSurrogate) {
    throw StateError("layer_backward: " + to_string(ctx.mode) + " has no gradient");
  }
  if (d_output.size() != layer.output_dim()) throw SizeError("layer_backward: gradient length mismatch");
  const auto& plan = layer.plan();
  const std::size_t m = plan.block_size;
  const std::size_t width = plan.padded_dim();
  if (cache.coeffs.size() != width) throw StateError("layer_backward: cache does not match layer");
  if (ctx.mode == ExecMode::kSurrogate &&
      (cache.forward_jacobians.size() != plan.num_blocks || cache.inverse_jacobians.size() != plan.num_blocks)) {
    throw StateError("layer_backward: cache lacks surrogate Jacobians");
  }

  std::vector<double> dz(width, 0.0);
  std::copy(d_output.begin(), d_output.end(), dz.begin());

  LayerGrad grad;
  grad.d_thresholds.assign(width, 0.0);
  std::vector<double> d_padded;
  d_padded.reserve(width);
  for (std::size_t blk = 0; blk < plan.num_blocks; ++blk) {
    const std::span<const double> dz_blk(dz.data() + blk * m, m);
    std::vector<double> dv;
    if (ctx.mode == ExecMode::kFloat) {
      dv = fwht(dz_blk, plan.order);
      for (auto& e : dv) e /= static_cast<double>(m);
    } else {
      dv = jacobian_transpose_apply(cache.inverse_jacobians[blk], dz_blk);
    }
    std::vector<double> du(m);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t c = blk * m + k;
      const auto g = soft_threshold_grad(cache.coeffs[c], layer.thresholds()[c]);
      grad.d_thresholds[c] = dv[k] * g.dt;
      du[k] = dv[k] * g.dx;
    }
    const auto da = ctx.mode == ExecMode::kFloat ? fwht_transpose(du, plan.order)
                                                 : jacobian_transpose_apply(cache.forward_jacobians[blk], du);
    d_padded.insert(d_padded.end(), da.begin(), da.end());
  }
  d_padded.resize(layer.input_dim());
  grad.d_input = std::move(d_padded);
  return grad;
}

RegularizerDirection parse_direction(const std::string& name) {
  if (name == "as_written") return RegularizerDirection::kAsWritten;
  if (name == "sparsity_intent") return RegularizerDirection::kSparsityIntent;
  throw DomainError("unknown regularizer direction '" + name + "'");
}

std::string to_string(RegularizerDirection d) {
  return d == RegularizerDirection::kAsWritten ? "as_written" : "sparsity_intent";
}

void LossConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("loss: lambda must be non-negative");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw DomainError("loss: t_max must be positive");
}

double threshold_log_term(std::span<const double> thresholds, double t_max) {
  double sum = 0.0;
  for (double t : thresholds) {
    const double g = std::clamp(std::fabs(t / t_max), kMinG, 1.0);
    sum += 1.5 * std::log(g) + 0.5 * g;
  }
  return sum;
}

double loss_mod(double acc_loss, std::span<const double> thresholds, const LossConfig& cfg) {
  cfg.validate();
  if (cfg.lambda == 0.0) return acc_loss;
  const double term = cfg.lambda * threshold_log_term(thresholds, cfg.t_max);
  return cfg.direction == RegularizerDirection::kAsWritten ? acc_loss + term : acc_loss - term;
}

std::vector<double> penalty_gradient(std::span<const double> thresholds, const LossConfig& cfg) {
  cfg.validate();
  const double dir = cfg.direction == RegularizerDirection::kAsWritten ? 1.0 : -1.0;
  std::vector<double> grad(thresholds.size(), 0.0);
  if (cfg.lambda == 0.0) return grad;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const double t = thresholds[i];
    const double g = std::clamp(std::fabs(t / cfg.t_max), kMinG, 1.0);
    const double sign = t < 0.0 ? -1.0 : 1.0;
    grad[i] = dir * cfg.lambda * (1.5 / g + 0.5) * sign / cfg.t_max;
  }
  return grad;
}

std::vector<double> LinearHead::apply(std::span<const double> h) const {
  if (h.size() != in_dim) throw SizeError("LinearHead: input length mismatch");
  std::vector<double> out(bias);
  for (std::size_t o = 0; o < out_dim; ++o) {
    const double* w = weights.data() + o * in_dim;
    for (std::size_t i = 0; i < in_dim; ++i) out[o] += w[i] * h[i];
  }
  return out;
}

std::size_t Model::input_dim() const { return layers.empty() ? head.in_dim : layers.front().input_dim(); }

std::vector<double> Model::all_thresholds() const {
  std::vector<double> t;
  for (const auto& l : layers) t.insert(t.end(), l.thresholds().values().begin(), l.thresholds().values().end());
  return t;
}

double Model::t_max() const { return layers.empty() ? 1.0 : layers.front().thresholds().t_max(); }

Model make_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.input_dim == 0 || spec.num_classes < 2) throw DomainError("make_model: degenerate dimensions");
  Model model;
  if (spec.expand_dim == 0) {
    model.layers.push_back(make_layer(LayerMode::kProject, spec.input_dim, spec.input_dim, spec.block_size,
                                      spec.t_max, derive_seed(seed, 0), spec.threshold_init_scale));
  } else {
    model.layers.push_back(make_layer(LayerMode::kExpand, spec.input_dim, spec.expand_dim, spec.block_size,
                                      spec.t_max, derive_seed(seed, 0), spec.threshold_init_scale));
    model.layers.push_back(make_layer(LayerMode::kProject, spec.expand_dim, spec.input_dim, spec.block_size,
                                      spec.t_max, derive_seed(seed, 1), spec.threshold_init_scale));
  }
  auto& head = model.head;
  head.in_dim = model.layers.back().output_dim();
  head.out_dim = spec.num_classes;
  head.weights.resize(head.in_dim * head.out_dim);
  head.bias.assign(head.out_dim, 0.0);
  std::mt19937_64 rng(derive_seed(seed, 1000));
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(head.in_dim)));
  for (auto& w : head.weights) w = normal(rng);
  return model;
}

std::vector<double> model_logits(const Model& model, std::span<const double> x, const ExecContext& ctx,
                                 std::vector<LayerCache>* caches, std::vector<double>* features) {
  std::vector<double> h(x.begin(), x.end());
  if (caches) caches->assign(model.layers.size(), LayerCache{});
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    h = layer_forward(model.layers[l], h, ctx, caches ? &(*caches)[l] : nullptr);
  }
  auto logits = model.head.apply(h);
  if (features) *features = std::move(h);
  return logits;
}

Dataset make_toy_dataset(std::size_t num_classes, std::size_t dim, std::size_t samples_per_class,
                         std::uint64_t seed, double x_max) {
  if (num_classes < 2) throw DomainError("make_toy_dataset: need at least two classes");
  if (dim < num_classes) throw DomainError("make_toy_dataset: dim must be at least num_classes");
  if (samples_per_class == 0) throw DomainError("make_toy_dataset: samples_per_class must be positive");
  if (!(x_max > 0.0) || !std::isfinite(x_max)) throw DomainError("make_toy_dataset: x_max must be positive");

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> noise(0.0, 0.2 * x_max);

  std::vector<std::vector<double>> means(num_classes, std::vector<double>(dim));
  for (auto& mu : means) {
    for (auto& v : mu) v = (coin(rng) ? 0.45 : -0.45) * x_max;
  }

  Dataset data;
  data.dim = dim;
  data.num_classes = num_classes;
  data.features.reserve(num_classes * samples_per_class * dim);
  data.labels.reserve(num_classes * samples_per_class);
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t s = 0; s < samples_per_class; ++s) {
      for (std::size_t d = 0; d < dim; ++d) {
        data.features.push_back(std::clamp(means[c][d] + noise(rng), -x_max, x_max));
      }
      data.labels.push_back(static_cast<int>(c));
    }
  }

  const double probe = linear_probe_accuracy(data);
  if (probe < 0.95) {
    throw DomainError(fmt::format("make_toy_dataset: linear probe accuracy {} below 0.95", probe));
  }
  return data;
}

double linear_probe_accuracy(const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto d = static_cast<Eigen::Index>(data.dim);
  const auto k = static_cast<Eigen::Index>(data.num_classes);
  Eigen::MatrixXd a(n, d + 1);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = data.sample(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = s[static_cast<std::size_t>(j)];
    a(i, d) = 1.0;
    y(i, data.labels[static_cast<std::size_t>(i)]) = 1.0;
  }
  const Eigen::MatrixXd w = a.colPivHouseholderQr().solve(y);
  const Eigen::MatrixXd scores = a * w;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    scores.row(i).maxCoeff(&best);
    if (best == data.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

void TrainOptions::validate() const {
  if (batch_size == 0) throw DomainError("train: batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw DomainError("train: learning_rate must be positive");
  }
  if (!std::isfinite(threshold_grad_clip)) throw DomainError("train: threshold_grad_clip must be finite");
  if (train_exec != ExecMode::kFloat && train_exec != ExecMode::kSurrogate) {
    throw DomainError("train: train_exec must be float or surrogate");
  }
  ExecContext{eval_exec, num_bits, x_max, 1.0, false}.validate();
  TauSchedule s = schedule;
  if (s.step_every == 0) s.step_every = 1;
  s.validate();
  loss.validate();
}

EvalMetrics evaluate(const Model& model, const Dataset& data, const ExecContext& ctx, const LossConfig& loss) {
  if (data.size() == 0) throw DomainError("evaluate: empty dataset");
  ExecContext et{ExecMode::kBitplane1Bit, ctx.num_bits, ctx.x_max, ctx.tau, true};
  const bool shared = ctx.mode == ExecMode::kBitplane1Bit;

  double ce = 0.0;
  std::size_t correct = 0;
  std::vector<TerminationTrace> traces;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<LayerCache> caches;
    // Early termination never changes a noiseless post-threshold value, so
    // the 1-bit evaluation can also supply the cycle traces.
    const auto logits = model_logits(model, data.sample(i), shared ? et : ctx, shared ? &caches : nullptr);
    if (!shared) model_logits(model, data.sample(i), et, &caches);
    for (auto& c : caches) traces.insert(traces.end(), c.traces.begin(), c.traces.end());
    ce += cross_entropy(logits, data.labels[i]);
    if (static_cast<int>(argmax(logits)) == data.labels[i]) ++correct;
  }
  const auto n = static_cast<double>(data.size());
  EvalMetrics m;
  m.loss = loss_mod(ce / n, model.all_thresholds(), loss);
  m.accuracy = static_cast<double>(correct) / n;
  m.mean_cycles = traces.empty() ? 0.0 : cycle_histogram(traces).mean;
  return m;
}

TrainReport train(Model& model, const Dataset& data, const TrainOptions& opts) {
  opts.validate();
  if (data.size() == 0) throw DomainError("train: empty dataset");
  if (data.dim != model.input_dim()) throw SizeError("train: dataset dim does not match model input");
  if (data.num_classes != model.num_classes()) throw SizeError("train: class count does not match head");
  for (int label : data.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= data.num_classes) throw DomainError("train: bad label");
  }

  const std::size_t n = data.size();
  const std::size_t steps_per_epoch = (n + opts.batch_size - 1) / opts.batch_size;
  TauSchedule schedule = opts.schedule;
  if (schedule.step_every == 0) schedule.step_every = steps_per_epoch;

  LossConfig loss = opts.loss;
  loss.t_max = model.t_max();
  const ExecContext eval_ctx{opts.eval_exec, opts.num_bits, opts.x_max, schedule.at(0), false};

  auto record = [&](std::size_t epoch, double tau) {
    const auto m = evaluate(model, data, eval_ctx, loss);
    EpochReport r;
    r.epoch = epoch;
    r.loss = m.loss;
    r.accuracy = m.accuracy;
    r.tau = tau;
    double g_sum = 0.0;
    double above = 0.0;
    std::size_t count = 0;
    for (const auto& l : model.layers) {
      const auto& t = l.thresholds();
      g_sum += t.mean_g() * static_cast<double>(t.size());
      above += t.fraction_above(0.8) * static_cast<double>(t.size());
      count += t.size();
    }
    r.mean_g = count ? g_sum / static_cast<double>(count) : 0.0;
    r.frac_above = count ? above / static_cast<double>(count) : 0.0;
    r.mean_cycles = m.mean_cycles;
    return r;
  };

  TrainReport report;
  report.epochs.push_back(record(0, schedule.at(0)));

  std::mt19937_64 rng(derive_seed(opts.seed, 0));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto& head = model.head;
  std::size_t step = 0;
  double tau = schedule.at(0);
  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += opts.batch_size, ++step) {
      tau = schedule.at(step);
      const ExecContext ctx{opts.train_exec, opts.num_bits, opts.x_max, tau, false};
      const std::size_t stop = std::min(n, start + opts.batch_size);
      const auto batch = static_cast<double>(stop - start);

      std::vector<double> dw(head.weights.size(), 0.0);
      std::vector<double> db(head.bias.size(), 0.0);
      std::vector<std::vector<double>> dt(model.layers.size());
      for (std::size_t l = 0; l < model.layers.size(); ++l) dt[l].assign(model.layers[l].channels(), 0.0);

      for (std::size_t s = start; s < stop; ++s) {
        const std::size_t idx = order[s];
        std::vector<LayerCache> caches;
        std::vector<double> h;
        const auto logits = model_logits(model, data.sample(idx), ctx, &caches, &h);
        auto g = softmax(logits);
        g[static_cast<std::size_t>(data.labels[idx])] -= 1.0;

        std::vector<double> dh(head.in_dim, 0.0);
        for (std::size_t o = 0; o < head.out_dim; ++o) {
          db[o] += g[o];
          for (std::size_t i = 0; i < head.in_dim; ++i) {
            dw[o * head.in_dim + i] += g[o] * h[i];
            dh[i] += head.weights[o * head.in_dim + i] * g[o];
          }
        }
        for (std::size_t l = model.layers.size(); l-- > 0;) {
          auto lg = layer_backward(model.layers[l], caches[l], dh, ctx);
          for (std::size_t c = 0; c < lg.d_thresholds.size(); ++c) dt[l][c] += lg.d_thresholds[c];
          dh = std::move(lg.d_input);
        }
      }

      const double lr = opts.learning_rate;
      for (std::size_t k = 0; k < dw.size(); ++k) head.weights[k] -= lr * dw[k] / batch;
      for (std::size_t k = 0; k < db.size(); ++k) head.bias[k] -= lr * db[k] / batch;
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto& th = model.layers[l].thresholds();
        const auto pen = penalty_gradient(th.values(), loss);
        for (std::size_t c = 0; c < dt[l].size(); ++c) {
          double gc = dt[l][c] / batch + pen[c];
          if (opts.threshold_grad_clip > 0.0) {
            gc = std::clamp(gc, -opts.threshold_grad_clip, opts.threshold_grad_clip);
          }
          dt[l][c] = gc;
        }
        th.apply_step(dt[l], lr);
      }
    }
    report.epochs.push_back(record(epoch, tau));
  }
  return report;
}

std::string report_csv(const TrainReport& report) {
  std::string out = "epoch,loss,accuracy,tau,mean_g,frac_t_above_0.8,mean_cycles\n";
  for (const auto& e : report.epochs) {
    out += fmt::format("{},{},{},{},{},{},{}\n", e.epoch, e.loss, e.accuracy, e.tau, e.mean_g, e.frac_above,
                       e.mean_cycles);
  }
  return out;
}

void save_checkpoint(const Model& model, std::ostream& os) {
  os << "bwhtsim-checkpoint 1\n";
  os << "layers " << model.layers.size() << '\n';
  for (const auto& l : model.layers) {
    os << fmt::format("layer {} {} {} {} {} {}\n", to_string(l.mode()), l.input_dim(), l.output_dim(),
                      l.plan().block_size, l.plan().order == RowOrder::kSequency ? "sequency" : "natural",
                      l.thresholds().t_max());
    os << "thresholds " << l.thresholds().size();
    for (double t : l.thresholds().values()) os << fmt::format(" {}", t);
    os << '\n';
  }
  const auto& h = model.head;
  os << "head " << h.in_dim << ' ' << h.out_dim << '\n';
  os << "weights";
  for (double w : h.weights) os << fmt::format(" {}", w);
  os << "\nbias";
  for (double b : h.bias) os << fmt::format(" {}", b);
  os << '\n';
}

Model load_checkpoint(std::istream& is) {
  auto expect = [&](const std::string& word) {
    std::string tok;
    if (!(is >> tok) || tok != word) throw DomainError("checkpoint: expected '" + word + "'");
  };
  auto read_size = [&]() {
    std::size_t v = 0;
    if (!(is >> v)) throw DomainError("checkpoint: expected an integer");
    return v;
  };
  auto read_double = [&]() {
    double v = 0.0;
    if (!(is >> v)) throw DomainError("checkpoint: expected a number");
    return v;
  };

  expect("bwhtsim-checkpoint");
  if (read_size() != 1) throw DomainError("checkpoint: unsupported version");
  expect("layers");
  const std::size_t num_layers = read_size();
  Model model;
  for (std::size_t l = 0; l < num_layers; ++l) {
    expect("layer");
    std::string mode;
    std::string order;
    is >> mode;
    const std::size_t in = read_size();
    const std::size_t out = read_size();
    const std::size_t block = read_size();
    is >> order;
    const double t_max = read_double();
    if (order != "natural" && order != "sequency") throw DomainError("checkpoint: bad row order");
    expect("thresholds");
    const std::size_t count = read_size();
    std::vector<double> t(count);
    for (auto& v : t) v = read_double();
    model.layers.emplace_back(parse_layer_mode(mode), in, out, block, ThresholdVector(std::move(t), t_max),
                              order == "sequency" ? RowOrder::kSequency : RowOrder::kNatural);
  }
  expect("head");
  auto& h = model.head;
  h.in_dim = read_size();
  h.out_dim = read_size();
  expect("weights");
  h.weights.resize(h.in_dim * h.out_dim);
  for (auto& w : h.weights) w = read_double();
  expect("bias");
  h.bias.resize(h.out_dim);
  for (auto& b : h.bias) b = read_double();
  if (!model.layers.empty() && model.layers.back().output_dim() != h.in_dim) {
    throw SizeError("checkpoint: head width does not match last layer");
  }
  return model;
}

}  // namespace bwhtsim
