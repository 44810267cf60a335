#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bwhtsim/activation.hpp"
#include "bwhtsim/crossbar.hpp"
#include "bwhtsim/earlyterm.hpp"
#include "bwhtsim/hadamard.hpp"
#include "bwhtsim/surrogate.hpp"

namespace bwhtsim {

enum class LayerMode { kExpand, kProject };

// How a layer evaluates its two transforms:
//   kFloat          exact real transform (W, then W^T / m)
//   kBitplaneExact  quantized inputs, exact integer products
//   kBitplane1Bit   quantized inputs, one comparator bit per plane (f0_apply)
//   kSurrogate      differentiable f0_surrogate, used for training
enum class ExecMode { kFloat, kBitplaneExact, kBitplane1Bit, kSurrogate };

LayerMode parse_layer_mode(const std::string& name);
ExecMode parse_exec_mode(const std::string& name);
std::string to_string(LayerMode m);
std::string to_string(ExecMode m);

/// Codec and surrogate settings shared by every transform evaluation.
struct ExecContext {
  ExecMode mode = ExecMode::kFloat;
  int num_bits = 4;
  double x_max = 1.0;
  double tau = 1.0;                 // surrogate sharpness
  bool early_termination = false;   // 1-bit path only; records traces

  void validate() const;
};

/// Transform -> per-channel soft threshold -> inverse transform.
///
/// Expand zero-pads the input to target_dim before transforming; project
/// transforms the input as is and keeps the first target_dim outputs.
class BwhtLayer {
 public:
  BwhtLayer(LayerMode mode, std::size_t input_dim, std::size_t target_dim, std::size_t block_size,
            ThresholdVector thresholds, RowOrder order = RowOrder::kNatural);

  LayerMode mode() const { return mode_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return target_dim_; }
  std::size_t channels() const { return plan_.padded_dim(); }
  const BwhtPlan& plan() const { return plan_; }
  const ThresholdVector& thresholds() const { return thresholds_; }
  ThresholdVector& thresholds() { return thresholds_; }
  const CrossbarConfig& forward_array() const { return forward_array_; }
  const CrossbarConfig& inverse_array() const { return inverse_array_; }

 private:
  LayerMode mode_;
  std::size_t input_dim_;
  std::size_t target_dim_;
  BwhtPlan plan_;
  ThresholdVector thresholds_;
  CrossbarConfig forward_array_;  // W
  CrossbarConfig inverse_array_;  // W^T
};

// Thresholds drawn uniformly from [-init_scale * t_max, init_scale * t_max].
BwhtLayer make_layer(LayerMode mode, std::size_t input_dim, std::size_t target_dim,
                     std::size_t block_size, double t_max, std::uint64_t seed,
                     double init_scale = 0.1);

/// Intermediate values kept for the backward pass.
struct LayerCache {
  std::vector<double> coeffs;     // transform output u, one per channel
  std::vector<double> activated;  // S_T(u)
  std::vector<std::vector<double>> forward_jacobians;  // surrogate mode, per block (m x m)
  std::vector<std::vector<double>> inverse_jacobians;
  std::vector<TerminationTrace> traces;  // 1-bit path with early termination, per block
};

std::vector<double> layer_forward(const BwhtLayer& layer, std::span<const double> x,
                                  const ExecContext& ctx, LayerCache* cache = nullptr);

struct LayerGrad {
  std::vector<double> d_input;
  std::vector<double> d_thresholds;
};

// Backpropagates d_output through a forward pass run with kFloat or
// kSurrogate. Other modes have no gradient and throw StateError.
LayerGrad layer_backward(const BwhtLayer& layer, const LayerCache& cache,
                         std::span<const double> d_output, const ExecContext& ctx);

enum class RegularizerDirection { kAsWritten, kSparsityIntent };

RegularizerDirection parse_direction(const std::string& name);
std::string to_string(RegularizerDirection d);

struct LossConfig {
  double lambda = 0.0;
  double t_max = 1.0;
  RegularizerDirection direction = RegularizerDirection::kSparsityIntent;

  void validate() const;
};

inline constexpr double kMinG = 1e-6;

// Sum over thresholds of (3/2) ln g + g / 2 with g = |T / t_max| clamped to [kMinG, 1].
double threshold_log_term(std::span<const double> thresholds, double t_max);

// Regularized loss. as_written adds lambda * log_term; sparsity_intent
// subtracts it, so minimizing drives |T| toward t_max.
double loss_mod(double acc_loss, std::span<const double> thresholds, const LossConfig& cfg);

// d(loss_mod - acc_loss) / dT.
std::vector<double> penalty_gradient(std::span<const double> thresholds, const LossConfig& cfg);

/// Dense classification head: logits = W h + b.
struct LinearHead {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weights;  // out_dim x in_dim, row-major
  std::vector<double> bias;

  std::vector<double> apply(std::span<const double> h) const;
};

struct Model {
  std::vector<BwhtLayer> layers;
  LinearHead head;

  std::size_t input_dim() const;
  std::size_t num_classes() const { return head.out_dim; }
  std::vector<double> all_thresholds() const;
  double t_max() const;
};

struct ModelSpec {
  std::size_t input_dim = 16;
  std::size_t num_classes = 2;
  std::size_t block_size = 16;
  // Hidden width of an expand -> project pair; 0 means a single project
  // layer that keeps the input width.
  std::size_t expand_dim = 0;
  double t_max = 1.0;
  double threshold_init_scale = 0.1;
};

Model make_model(const ModelSpec& spec, std::uint64_t seed);

std::vector<double> model_logits(const Model& model, std::span<const double> x, const ExecContext& ctx,
                                 std::vector<LayerCache>* caches = nullptr,
                                 std::vector<double>* features = nullptr);

struct Dataset {
  std::size_t dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;  // size() x dim, row-major
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> sample(std::size_t i) const { return {features.data() + i * dim, dim}; }
};

/// Gaussian clusters inside [-x_max, x_max]^dim, one per class. Throws
/// DomainError for degenerate parameters, or if a least-squares linear probe
/// reaches less than 95% training accuracy.
Dataset make_toy_dataset(std::size_t num_classes, std::size_t dim, std::size_t samples_per_class,
                         std::uint64_t seed, double x_max = 1.0);

// Training accuracy of the closed-form least-squares one-hot probe.
double linear_probe_accuracy(const Dataset& data);

struct TrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 0.05;
  // Element-wise clip on threshold gradients before each step; <= 0 disables.
  double threshold_grad_clip = 1.0;
  ExecMode train_exec = ExecMode::kSurrogate;  // kFloat or kSurrogate
  ExecMode eval_exec = ExecMode::kBitplane1Bit;
  int num_bits = 4;
  double x_max = 1.0;
  // step_every == 0 means one increase per epoch.
  TauSchedule schedule{1.0, 2.0, 0, 1e4};
  LossConfig loss;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochReport {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double tau = 0.0;
  double mean_g = 0.0;
  double frac_above = 0.0;  // fraction of |T| > 0.8 t_max
  double mean_cycles = 0.0;
};

struct TrainReport {
  std::vector<EpochReport> epochs;  // epochs[0] holds the initial metrics
};

struct EvalMetrics {
  double loss = 0.0;  // mean cross-entropy plus the threshold penalty
  double accuracy = 0.0;
  double mean_cycles = 0.0;
};

// Cross-entropy and accuracy under ctx; cycles come from the 1-bit path
// with early termination.
EvalMetrics evaluate(const Model& model, const Dataset& data, const ExecContext& ctx,
                     const LossConfig& loss);

/// Minibatch SGD on the head weights and all thresholds. Thresholds are
/// clamped to [-t_max, t_max] after every step. Deterministic per seed.
TrainReport train(Model& model, const Dataset& data, const TrainOptions& opts);

std::string report_csv(const TrainReport& report);

// Versioned text record of layer dims, thresholds and head weights.
void save_checkpoint(const Model& model, std::ostream& os);
Model load_checkpoint(std::istream& is);

}  // namespace bwhtsim
