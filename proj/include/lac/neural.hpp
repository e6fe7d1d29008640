#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lac::nn {

// Sequences are stored column-per-time-step: a D x T matrix holds T steps of
// width D. All arithmetic is double precision.

enum class Activation : std::uint8_t { linear = 0, sigmoid = 1, tanh = 2 };

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::linear;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out, Activation act = Activation::linear);

  std::size_t input_size() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t output_size() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t parameter_count() const { return output_size() * input_size() + output_size(); }
};

/// Gate rows are stacked input, forget, output, candidate; each H x (D + H)
/// block acts on the concatenation [x_t; h_{t-1}].
struct LstmLayer {
  Eigen::MatrixXd weights;  // 4H x (D + H)
  Eigen::VectorXd bias;     // 4H

  LstmLayer() = default;
  LstmLayer(std::size_t input_size, std::size_t hidden_size);

  std::size_t hidden_size() const { return static_cast<std::size_t>(bias.size()) / 4; }
  std::size_t input_size() const {
    return static_cast<std::size_t>(weights.cols()) - hidden_size();
  }
  std::size_t parameter_count() const {
    return 4 * (hidden_size() * (input_size() + hidden_size()) + hidden_size());
  }
};

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;

  static LstmState zeros(std::size_t hidden);
};

struct LstmCache {
  Eigen::MatrixXd input;   // D x T
  Eigen::MatrixXd hidden;  // H x (T + 1); column 0 is the initial state
  Eigen::MatrixXd cell;    // H x (T + 1)
  Eigen::MatrixXd gates;   // 4H x T, after the non-linearities
};

struct LstmForward {
  Eigen::MatrixXd outputs;  // H x T
  LstmState final_state;
  LstmCache cache;
};

/// Throws DataError on a width mismatch, NumericError on non-finite input.
LstmForward lstm_forward(const LstmLayer& layer, const Eigen::MatrixXd& seq,
                         const LstmState& initial);

struct LstmBackward {
  LstmLayer grads;
  Eigen::MatrixXd d_input;  // D x T
};

/// Gradients given dL/dh_t for every step. The initial state is treated as a
/// constant (truncated BPTT across chunks).
LstmBackward lstm_backward(const LstmLayer& layer, const LstmCache& cache,
                           const Eigen::MatrixXd& d_outputs);

/// Layer widths. The defaults are the reference network:
/// Lstm(22->128), Dense(128->64), Dense(64->22) | Dense(22->64),
/// Lstm(64->128), sigmoid Dense(128->22).
struct Architecture {
  std::size_t input_width = 22;
  std::size_t encoder_hidden = 128;
  std::size_t encoder_projection = 64;
  std::size_t code_width = 22;
  std::size_t decoder_projection = 64;
  std::size_t decoder_hidden = 128;

  friend bool operator==(const Architecture&, const Architecture&) = default;
  std::string describe() const;
};

class AutoencoderModel {
 public:
  /// All parameters zero.
  explicit AutoencoderModel(const Architecture& arch = {});

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases except
  /// the forget gates (1.0).
  static AutoencoderModel initialized(const Architecture& arch, std::uint64_t seed);

  const Architecture& architecture() const { return arch_; }
  std::size_t parameter_count() const;

  /// Every weight matrix and bias vector as flat storage, in file order.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::vector<std::string> tensor_names() const;

  /// Bumped whenever parameters are replaced wholesale (optimizer step,
  /// load). Forward caches remember it so stale caches are detected.
  std::uint64_t revision() const { return revision_; }
  void touch() { ++revision_; }

  LstmLayer encoder_lstm;
  DenseLayer encoder_projection;
  DenseLayer encoder_code;
  DenseLayer decoder_projection;
  LstmLayer decoder_lstm;
  DenseLayer output_head;

 private:
  Architecture arch_;
  std::uint64_t revision_ = 0;
};

struct SequenceState {
  LstmState encoder;
  LstmState decoder;

  static SequenceState zeros(const Architecture& arch);
};

struct ForwardCache {
  const AutoencoderModel* model = nullptr;
  std::uint64_t revision = 0;
  LstmCache encoder;
  Eigen::MatrixXd projection;  // encoder_projection output
  Eigen::MatrixXd code;        // bottleneck
  Eigen::MatrixXd decoder_in;  // decoder_projection output
  LstmCache decoder;
  Eigen::MatrixXd output;

  bool empty() const { return model == nullptr; }
};

struct ForwardPass {
  Eigen::MatrixXd output;  // input_width x T, entries in (0, 1)
  SequenceState final_state;
  ForwardCache cache;
};

/// Full forward pass with caches for backward(). Throws NumericError naming
/// the first layer that produced a non-finite value.
ForwardPass forward(const AutoencoderModel& model, const Eigen::MatrixXd& seq,
                    const SequenceState* initial = nullptr);

/// Cache-free forward in blocks of `block` steps; use for long sequences.
Eigen::MatrixXd reconstruct(const AutoencoderModel& model, const Eigen::MatrixXd& seq,
                            SequenceState* state = nullptr, std::size_t block = 1024);

/// Mean over all elements of the squared difference.
double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

/// Exact gradients of mse_loss(forward(seq).output, target). Throws
/// DataError when the cache is missing, stale or shaped differently.
AutoencoderModel backward(const AutoencoderModel& model, const ForwardCache& cache,
                          const Eigen::MatrixXd& target);

struct AdamConfig {
  double learning_rate = 0.01;
  double decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(const AdamConfig& cfg, std::span<const std::size_t> tensor_sizes);
  explicit AdamState(const AutoencoderModel& model, const AdamConfig& cfg = {});

  /// lr / (1 + decay * step) for the next update.
  double effective_learning_rate() const;
};

/// One bias-corrected Adam update. Throws NumericError (and changes
/// nothing) if any gradient is non-finite.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state);
void adam_step(AutoencoderModel& model, const AutoencoderModel& grads, AdamState& state);

struct TrainConfig {
  std::size_t epochs = 50;
  /// Stop once an epoch improves the loss by less than this.
  double min_improvement = 1e-6;
  /// Consecutive epochs allowed to miss min_improvement against the best
  /// loss so far before stopping; 1 stops at the first miss.
  std::size_t patience = 5;
  /// Sequences longer than chunk_threshold are trained in chunks of
  /// chunk_length with (h, c) carried between chunks.
  std::size_t chunk_length = 512;
  std::size_t chunk_threshold = 2048;
  AdamConfig adam;
};

struct TrainReport {
  std::vector<double> epoch_losses;
  double final_loss = 0.0;
  std::size_t epochs_run = 0;
  bool early_stopped = false;
  bool diverged = false;
  std::string failure;
  double wall_seconds = 0.0;
};

/// Trains in place on one sequence (input_width x T, T >= 1). On divergence
/// the parameters of the last finite epoch are restored.
TrainReport train(AutoencoderModel& model, const Eigen::MatrixXd& seq,
                  const TrainConfig& config);

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const AutoencoderModel& model, const std::filesystem::path& path);
AutoencoderModel load_model(const std::filesystem::path& path);
/// Also rejects files whose architecture differs from `expected`.
AutoencoderModel load_model(const std::filesystem::path& path, const Architecture& expected);

}  // namespace lac::nn
