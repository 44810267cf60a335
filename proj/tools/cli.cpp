#include "cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "bwhtsim/crossbar.hpp"
#include "bwhtsim/earlyterm.hpp"
#include "bwhtsim/errors.hpp"
#include "bwhtsim/hadamard.hpp"
#include "bwhtsim/network.hpp"
#include "bwhtsim/random.hpp"

namespace bwhtsim::cli {

namespace {

// Bad input files and inconsistent arguments, reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TransformArgs {
  std::string input;
  std::size_t dim = 0;
  std::size_t block = 0;
  std::string order = "natural";
  std::string mode = "forward";
  std::string out;
};

struct SweepArgs {
  std::vector<double> sigmas{0.0, 0.002, 0.005, 0.01, 0.02};
  std::vector<double> margins{0.0, 0.05, 0.1, 0.2, 0.4};
  std::size_t rows = 16;
  std::size_t cols = 16;
  int bits = 8;
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  std::string out;
};

struct EarlyTermArgs {
  CycleStudyConfig study;
  std::string dist = "bimodal_near_tmax";
  std::string out;
};

struct TrainArgs {
  std::size_t classes = 2;
  std::size_t dim = 16;
  std::size_t samples = 100;
  std::size_t block = 16;
  std::size_t expand = 0;
  std::string exec = "surrogate";
  std::string direction = "sparsity_intent";
  double t_max = 1.0;
  TrainOptions opts;
  std::uint64_t seed = 1;
  std::string out;
  std::string checkpoint;
};

std::vector<double> read_vector_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open input file '" + path + "'");
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    const std::string cell = line.substr(first, last - first + 1);
    if (line_no == 1 && cell == "value") continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
      throw UsageError(fmt::format("{}:{}: malformed value '{}'", path, line_no, cell));
    }
    values.push_back(v);
  }
  if (values.empty()) throw UsageError("input file '" + path + "' holds no values");
  return values;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open output file '" + path + "'");
  f << text;
  if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p *= 2;
  return p;
}

void run_transform(const TransformArgs& a, std::ostream& out) {
  const auto values = read_vector_csv(a.input);
  RowOrder order;
  if (a.order == "natural") {
    order = RowOrder::kNatural;
  } else if (a.order == "sequency") {
    order = RowOrder::kSequency;
  } else {
    throw UsageError("unknown row order '" + a.order + "'");
  }

  const bool inverse = a.mode == "inverse";
  if (!inverse && a.mode != "forward" && a.mode != "roundtrip") {
    throw UsageError("unknown transform mode '" + a.mode + "'");
  }
  // For forward and roundtrip the file holds the signal; for inverse it holds
  // the padded coefficients and --dim names the signal length.
  const std::size_t dim = a.dim ? a.dim : values.size();
  if (!inverse && a.dim && a.dim != values.size()) {
    throw UsageError(fmt::format("--dim {} but input holds {} values", a.dim, values.size()));
  }
  const std::size_t block = a.block ? a.block : next_power_of_two(dim);
  const auto plan = bwht_plan(dim, block, order);

  std::vector<double> result;
  if (a.mode == "forward") {
    result = bwht_forward(plan, values);
  } else if (inverse) {
    if (values.size() != plan.padded_dim()) {
      throw UsageError(fmt::format("inverse expects {} coefficients, input holds {}", plan.padded_dim(),
                                   values.size()));
    }
    result = bwht_inverse(plan, values);
  } else {
    result = bwht_inverse(plan, bwht_forward(plan, values));
  }

  std::string text = "value\n";
  for (double v : result) text += fmt::format("{}\n", v);
  emit(a.out, text, out);
}

void run_sweep(const SweepArgs& a, std::ostream& out) {
  if (a.sigmas.empty() || a.margins.empty()) throw UsageError("sigma and SM grids must be non-empty");
  const CrossbarShape shape{a.rows, a.cols, a.bits};
  const auto points = failure_sweep(shape, a.sigmas, a.margins, a.trials, a.seed);
  emit(a.out, failure_csv(points), out);
}

void run_earlyterm(EarlyTermArgs a, std::ostream& out) {
  a.study.dist = parse_threshold_dist(a.dist);
  const auto traces = cycle_study(a.study);
  emit(a.out, histogram_csv(cycle_histogram(traces)), out);
}

void run_train(TrainArgs a, std::ostream& out) {
  a.opts.train_exec = parse_exec_mode(a.exec);
  if (a.opts.train_exec == ExecMode::kSurrogate) {
    a.opts.eval_exec = ExecMode::kBitplane1Bit;
  } else if (a.opts.train_exec == ExecMode::kFloat) {
    a.opts.eval_exec = ExecMode::kFloat;
  } else {
    throw UsageError("--exec must be surrogate or float");
  }
  a.opts.loss.direction = parse_direction(a.direction);
  a.opts.loss.t_max = a.t_max;
  a.opts.seed = a.seed;
  a.opts.validate();

  const auto data = make_toy_dataset(a.classes, a.dim, a.samples, derive_seed(a.seed, 1), a.opts.x_max);
  ModelSpec spec;
  spec.input_dim = a.dim;
  spec.num_classes = a.classes;
  spec.block_size = a.block;
  spec.expand_dim = a.expand;
  spec.t_max = a.t_max;
  auto model = make_model(spec, derive_seed(a.seed, 2));
  const auto report = train(model, data, a.opts);
  emit(a.out, report_csv(report), out);
  if (!a.checkpoint.empty()) {
    std::ostringstream os;
    save_checkpoint(model, os);
    emit(a.checkpoint, os.str(), out);
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Behavioral simulator for 1-bit bitplane Walsh-Hadamard processing"};
  app.set_config("--config", "", "Key-value config file with one [section] per command");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();  // lets --config follow the subcommand name

  TransformArgs ta;
  auto* transform = app.add_subcommand("transform", "Blockwise Walsh-Hadamard transform of a vector file");
  transform->add_option("--input", ta.input, "One value per line")->required();
  transform->add_option("--dim", ta.dim, "Signal length (required for --mode inverse with padding)");
  transform->add_option("--block", ta.block, "Block size (power of two); default covers the whole vector")
      ->check(CLI::PositiveNumber);
  transform->add_option("--order", ta.order, "natural | sequency")->capture_default_str();
  transform->add_option("--mode", ta.mode, "forward | inverse | roundtrip")->capture_default_str();
  transform->add_option("--out", ta.out, "Output CSV path, '-' for stdout");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep-ant", "Processing failure over a sigma_ANT x SM grid");
  sweep->add_option("--sigmas", sa.sigmas, "sigma_ANT values")->delimiter(',')->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sweep->add_option("--sms", sa.margins, "Safety margins")->delimiter(',')->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sweep->add_option("--rows", sa.rows, "Crossbar rows")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--cols", sa.cols, "Crossbar columns L_I")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--bits", sa.bits, "Input bits")->check(CLI::Range(1, kMaxBits))->capture_default_str();
  sweep->add_option("--trials", sa.trials, "Random trials per grid point")->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep->add_option("--seed", sa.seed, "Master seed")->capture_default_str();
  sweep->add_option("--out", sa.out, "Output CSV path, '-' for stdout");

  EarlyTermArgs ea;
  ea.study.seed = 1;
  auto* early = app.add_subcommand("earlyterm", "Cycle histogram under predictive early termination");
  early->add_option("--bits", ea.study.num_bits, "Input bits")->check(CLI::Range(1, kMaxBits))->capture_default_str();
  early->add_option("--cols", ea.study.cols, "Input length L_I")->check(CLI::PositiveNumber)->capture_default_str();
  early->add_option("--rows", ea.study.rows, "Output rows per trial")->check(CLI::PositiveNumber)
      ->capture_default_str();
  early->add_option("--trials", ea.study.trials, "Random trials")->check(CLI::PositiveNumber)->capture_default_str();
  early->add_option("--dist", ea.dist, "zero | uniform | bimodal_near_tmax")->capture_default_str();
  early->add_option("--t-max", ea.study.t_max, "Threshold clamp T_max")->check(CLI::PositiveNumber)
      ->capture_default_str();
  early->add_option("--x-max", ea.study.x_max, "Codec full scale")->check(CLI::PositiveNumber)->capture_default_str();
  early->add_option("--clamp-fraction", ea.study.clamp_fraction, "Bimodal mass exactly at +/-T_max")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  early->add_option("--spread", ea.study.spread, "Bimodal |T|/T_max spread below 1")->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  early->add_option("--seed", ea.study.seed, "Master seed")->capture_default_str();
  early->add_option("--out", ea.out, "Output CSV path, '-' for stdout");

  TrainArgs tr;
  tr.opts.loss.lambda = 0.0;
  auto* trainc = app.add_subcommand("train", "Train thresholds and a linear head on a toy task");
  trainc->add_option("--classes", tr.classes, "Classes")->check(CLI::Range(2, 64))->capture_default_str();
  trainc->add_option("--dim", tr.dim, "Input dimension")->check(CLI::PositiveNumber)->capture_default_str();
  trainc->add_option("--samples", tr.samples, "Samples per class")->check(CLI::PositiveNumber)->capture_default_str();
  trainc->add_option("--block", tr.block, "Block size")->check(CLI::PositiveNumber)->capture_default_str();
  trainc->add_option("--expand", tr.expand, "Hidden width of an expand/project pair; 0 = single layer")
      ->capture_default_str();
  trainc->add_option("--epochs", tr.opts.epochs, "Epochs")->capture_default_str();
  trainc->add_option("--batch", tr.opts.batch_size, "Minibatch size")->check(CLI::PositiveNumber)
      ->capture_default_str();
  trainc->add_option("--lr", tr.opts.learning_rate, "Learning rate")->check(CLI::PositiveNumber)
      ->capture_default_str();
  trainc->add_option("--clip", tr.opts.threshold_grad_clip, "Threshold gradient clip, <= 0 disables")
      ->capture_default_str();
  trainc->add_option("--bits", tr.opts.num_bits, "Input bits")->check(CLI::Range(1, kMaxBits))->capture_default_str();
  trainc->add_option("--x-max", tr.opts.x_max, "Codec full scale")->check(CLI::PositiveNumber)->capture_default_str();
  trainc->add_option("--t-max", tr.t_max, "Threshold clamp T_max")->check(CLI::PositiveNumber)->capture_default_str();
  trainc->add_option("--lambda", tr.opts.loss.lambda, "Threshold regularizer strength")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  trainc->add_option("--direction", tr.direction, "sparsity_intent | as_written")->capture_default_str();
  trainc->add_option("--exec", tr.exec, "surrogate (1-bit eval) | float")->capture_default_str();
  trainc->add_option("--tau0", tr.opts.schedule.tau_0, "Initial tau")->check(CLI::PositiveNumber)
      ->capture_default_str();
  trainc->add_option("--growth", tr.opts.schedule.growth, "Tau growth factor (> 1)")->capture_default_str();
  trainc->add_option("--tau-step", tr.opts.schedule.step_every, "SGD steps per tau increase; 0 = one epoch")
      ->capture_default_str();
  trainc->add_option("--tau-max", tr.opts.schedule.tau_max, "Tau cap")->check(CLI::PositiveNumber)
      ->capture_default_str();
  trainc->add_option("--seed", tr.seed, "Seed")->capture_default_str();
  trainc->add_option("--out", tr.out, "Per-epoch CSV path, '-' for stdout");
  trainc->add_option("--checkpoint", tr.checkpoint, "Checkpoint output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*transform) run_transform(ta, out);
    if (*sweep) run_sweep(sa, out);
    if (*early) run_earlyterm(ea, out);
    if (*trainc) run_train(tr, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {  // SizeError
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace bwhtsim::cli
