#include "lac/neural.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <fstream>

#include "lac/binary_io.hpp"
#include "lac/error.hpp"
#include "lac/random.hpp"

namespace lac::nn {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index idx(std::size_t n) { return static_cast<Index>(n); }

void apply_activation(MatrixXd& z, Activation act) {
  switch (act) {
    case Activation::linear: break;
    case Activation::sigmoid: z = (1.0 + (-z.array()).exp()).inverse().matrix(); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
  }
}

MatrixXd dense_forward(const DenseLayer& layer, const MatrixXd& x) {
  MatrixXd z(layer.weights.rows(), x.cols());
  z.noalias() = layer.weights * x;
  z.colwise() += layer.bias;
  apply_activation(z, layer.activation);
  return z;
}

// Returns dL/dx; accumulates parameter gradients into `grads`.
MatrixXd dense_backward(const DenseLayer& layer, const MatrixXd& x, const MatrixXd& y,
                        const MatrixXd& dy, DenseLayer& grads) {
  MatrixXd dz;
  switch (layer.activation) {
    case Activation::linear: dz = dy; break;
    case Activation::sigmoid: dz = (dy.array() * y.array() * (1.0 - y.array())).matrix(); break;
    case Activation::tanh: dz = (dy.array() * (1.0 - y.array().square())).matrix(); break;
  }
  grads.weights.noalias() = dz * x.transpose();
  grads.bias = dz.rowwise().sum();
  MatrixXd dx(layer.weights.cols(), dy.cols());
  dx.noalias() = layer.weights.transpose() * dz;
  return dx;
}

void require_finite(const MatrixXd& m, const char* layer) {
  if (!m.allFinite()) {
    throw NumericError(std::string("non-finite values in ") + layer);
  }
}

// One LSTM step on pre-activations already holding Wx x_t + b.
inline void lstm_cell(Eigen::Ref<VectorXd> a, const Eigen::Ref<const MatrixXd>& wh,
                      const Eigen::Ref<const VectorXd>& h_prev,
                      const Eigen::Ref<const VectorXd>& c_prev, Eigen::Ref<VectorXd> h,
                      Eigen::Ref<VectorXd> c, Index hidden) {
  a.noalias() += wh * h_prev;
  auto sig = a.head(3 * hidden);
  sig = (1.0 + (-sig.array()).exp()).inverse().matrix();
  auto g = a.tail(hidden);
  g = g.array().tanh().matrix();
  c = (a.segment(hidden, hidden).array() * c_prev.array() +
       a.head(hidden).array() * g.array()).matrix();
  h = (a.segment(2 * hidden, hidden).array() * c.array().tanh()).matrix();
}

void init_uniform(Eigen::Ref<MatrixXd> m, double scale, Rng& rng) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-scale, scale);
  }
}

}  // namespace

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Activation act)
    : weights(MatrixXd::Zero(idx(out), idx(in))),
      bias(VectorXd::Zero(idx(out))),
      activation(act) {}

LstmLayer::LstmLayer(std::size_t input_size, std::size_t hidden_size)
    : weights(MatrixXd::Zero(idx(4 * hidden_size), idx(input_size + hidden_size))),
      bias(VectorXd::Zero(idx(4 * hidden_size))) {}

LstmState LstmState::zeros(std::size_t hidden) {
  return LstmState{VectorXd::Zero(idx(hidden)), VectorXd::Zero(idx(hidden))};
}

LstmForward lstm_forward(const LstmLayer& layer, const MatrixXd& seq,
                         const LstmState& initial) {
  const Index d = idx(layer.input_size());
  const Index h = idx(layer.hidden_size());
  if (seq.rows() != d) {
    throw DataError("LSTM input width " + std::to_string(seq.rows()) + " != " +
                    std::to_string(d));
  }
  if (initial.h.size() != h || initial.c.size() != h) {
    throw DataError("LSTM initial state has the wrong size");
  }
  if (!seq.allFinite()) throw NumericError("non-finite LSTM input");

  const Index steps = seq.cols();
  LstmForward out;
  LstmCache& cache = out.cache;
  cache.input = seq;
  cache.hidden.resize(h, steps + 1);
  cache.cell.resize(h, steps + 1);
  cache.hidden.col(0) = initial.h;
  cache.cell.col(0) = initial.c;
  cache.gates.resize(4 * h, steps);
  cache.gates.noalias() = layer.weights.leftCols(d) * seq;
  cache.gates.colwise() += layer.bias;
  const auto wh = layer.weights.rightCols(h);
  for (Index t = 0; t < steps; ++t) {
    lstm_cell(cache.gates.col(t), wh, cache.hidden.col(t), cache.cell.col(t),
              cache.hidden.col(t + 1), cache.cell.col(t + 1), h);
  }
  out.outputs = cache.hidden.rightCols(steps);
  out.final_state = LstmState{cache.hidden.col(steps), cache.cell.col(steps)};
  return out;
}

LstmBackward lstm_backward(const LstmLayer& layer, const LstmCache& cache,
                           const MatrixXd& d_outputs) {
  const Index d = idx(layer.input_size());
  const Index h = idx(layer.hidden_size());
  const Index steps = cache.gates.cols();
  if (d_outputs.rows() != h || d_outputs.cols() != steps || cache.input.rows() != d) {
    throw DataError("LSTM backward: gradient shape does not match the cache");
  }
  MatrixXd da(4 * h, steps);
  VectorXd dh_next = VectorXd::Zero(h);
  VectorXd dc_next = VectorXd::Zero(h);
  VectorXd dh(h), dc(h), tc(h);
  const auto wh = layer.weights.rightCols(h);
  for (Index t = steps - 1; t >= 0; --t) {
    const auto gates = cache.gates.col(t);
    const auto i = gates.head(h).array();
    const auto f = gates.segment(h, h).array();
    const auto o = gates.segment(2 * h, h).array();
    const auto g = gates.tail(h).array();
    tc = cache.cell.col(t + 1).array().tanh().matrix();
    dh = d_outputs.col(t) + dh_next;
    dc = (dh.array() * o * (1.0 - tc.array().square()) + dc_next.array()).matrix();
    auto col = da.col(t);
    col.head(h) = (dc.array() * g * i * (1.0 - i)).matrix();
    col.segment(h, h) = (dc.array() * cache.cell.col(t).array() * f * (1.0 - f)).matrix();
    col.segment(2 * h, h) = (dh.array() * tc.array() * o * (1.0 - o)).matrix();
    col.tail(h) = (dc.array() * i * (1.0 - g.square())).matrix();
    dc_next = (dc.array() * f).matrix();
    dh_next.noalias() = wh.transpose() * col;
  }
  LstmBackward out;
  out.grads = LstmLayer(layer.input_size(), layer.hidden_size());
  out.grads.weights.leftCols(d).noalias() = da * cache.input.transpose();
  out.grads.weights.rightCols(h).noalias() = da * cache.hidden.leftCols(steps).transpose();
  out.grads.bias = da.rowwise().sum();
  out.d_input.resize(d, steps);
  out.d_input.noalias() = layer.weights.leftCols(d).transpose() * da;
  return out;
}

std::string Architecture::describe() const {
  return "Lstm(" + std::to_string(input_width) + "->" + std::to_string(encoder_hidden) +
         "), Dense(" + std::to_string(encoder_hidden) + "->" +
         std::to_string(encoder_projection) + "), Dense(" +
         std::to_string(encoder_projection) + "->" + std::to_string(code_width) +
         "), Dense(" + std::to_string(code_width) + "->" +
         std::to_string(decoder_projection) + "), Lstm(" +
         std::to_string(decoder_projection) + "->" + std::to_string(decoder_hidden) +
         "), Dense(" + std::to_string(decoder_hidden) + "->" + std::to_string(input_width) +
         ", sigmoid)";
}

AutoencoderModel::AutoencoderModel(const Architecture& arch)
    : encoder_lstm(arch.input_width, arch.encoder_hidden),
      encoder_projection(arch.encoder_hidden, arch.encoder_projection),
      encoder_code(arch.encoder_projection, arch.code_width),
      decoder_projection(arch.code_width, arch.decoder_projection),
      decoder_lstm(arch.decoder_projection, arch.decoder_hidden),
      output_head(arch.decoder_hidden, arch.input_width, Activation::sigmoid),
      arch_(arch) {
  if (arch.input_width == 0 || arch.encoder_hidden == 0 || arch.encoder_projection == 0 ||
      arch.code_width == 0 || arch.decoder_projection == 0 || arch.decoder_hidden == 0) {
    throw UsageError("architecture widths must be positive");
  }
}

AutoencoderModel AutoencoderModel::initialized(const Architecture& arch, std::uint64_t seed) {
  AutoencoderModel model(arch);
  std::uint64_t stream = 0;
  auto init_dense = [&](DenseLayer& layer) {
    Rng rng(derive_seed(seed, stream++));
    init_uniform(layer.weights, 1.0 / std::sqrt(static_cast<double>(layer.input_size())), rng);
  };
  auto init_lstm = [&](LstmLayer& layer) {
    Rng rng(derive_seed(seed, stream++));
    const double fan_in = static_cast<double>(layer.input_size() + layer.hidden_size());
    init_uniform(layer.weights, 1.0 / std::sqrt(fan_in), rng);
    layer.bias.segment(idx(layer.hidden_size()), idx(layer.hidden_size())).setOnes();
  };
  init_lstm(model.encoder_lstm);
  init_dense(model.encoder_projection);
  init_dense(model.encoder_code);
  init_dense(model.decoder_projection);
  init_lstm(model.decoder_lstm);
  init_dense(model.output_head);
  return model;
}

std::size_t AutoencoderModel::parameter_count() const {
  return encoder_lstm.parameter_count() + encoder_projection.parameter_count() +
         encoder_code.parameter_count() + decoder_projection.parameter_count() +
         decoder_lstm.parameter_count() + output_head.parameter_count();
}

std::vector<std::span<double>> AutoencoderModel::tensors() {
  auto s = [](auto& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  return {s(encoder_lstm.weights),       s(encoder_lstm.bias),
          s(encoder_projection.weights), s(encoder_projection.bias),
          s(encoder_code.weights),       s(encoder_code.bias),
          s(decoder_projection.weights), s(decoder_projection.bias),
          s(decoder_lstm.weights),       s(decoder_lstm.bias),
          s(output_head.weights),        s(output_head.bias)};
}

std::vector<std::span<const double>> AutoencoderModel::tensors() const {
  auto s = [](const auto& m) {
    return std::span<const double>(m.data(), static_cast<std::size_t>(m.size()));
  };
  return {s(encoder_lstm.weights),       s(encoder_lstm.bias),
          s(encoder_projection.weights), s(encoder_projection.bias),
          s(encoder_code.weights),       s(encoder_code.bias),
          s(decoder_projection.weights), s(decoder_projection.bias),
          s(decoder_lstm.weights),       s(decoder_lstm.bias),
          s(output_head.weights),        s(output_head.bias)};
}

std::vector<std::string> AutoencoderModel::tensor_names() const {
  return {"encoder_lstm.weights",       "encoder_lstm.bias",
          "encoder_projection.weights", "encoder_projection.bias",
          "encoder_code.weights",       "encoder_code.bias",
          "decoder_projection.weights", "decoder_projection.bias",
          "decoder_lstm.weights",       "decoder_lstm.bias",
          "output_head.weights",        "output_head.bias"};
}

SequenceState SequenceState::zeros(const Architecture& arch) {
  return SequenceState{LstmState::zeros(arch.encoder_hidden),
                       LstmState::zeros(arch.decoder_hidden)};
}

ForwardPass forward(const AutoencoderModel& model, const MatrixXd& seq,
                    const SequenceState* initial) {
  const Architecture& arch = model.architecture();
  if (seq.rows() != idx(arch.input_width)) {
    throw DataError("model input must have " + std::to_string(arch.input_width) +
                    " rows, got " + std::to_string(seq.rows()));
  }
  const SequenceState start = initial ? *initial : SequenceState::zeros(arch);
  ForwardPass pass;
  ForwardCache& cache = pass.cache;
  cache.model = &model;
  cache.revision = model.revision();

  auto enc = lstm_forward(model.encoder_lstm, seq, start.encoder);
  require_finite(enc.outputs, "encoder_lstm");
  cache.projection = dense_forward(model.encoder_projection, enc.outputs);
  require_finite(cache.projection, "encoder_projection");
  cache.code = dense_forward(model.encoder_code, cache.projection);
  require_finite(cache.code, "encoder_code");
  cache.decoder_in = dense_forward(model.decoder_projection, cache.code);
  require_finite(cache.decoder_in, "decoder_projection");
  auto dec = lstm_forward(model.decoder_lstm, cache.decoder_in, start.decoder);
  require_finite(dec.outputs, "decoder_lstm");
  cache.output = dense_forward(model.output_head, dec.outputs);
  require_finite(cache.output, "output_head");

  cache.encoder = std::move(enc.cache);
  cache.decoder = std::move(dec.cache);
  pass.final_state = SequenceState{enc.final_state, dec.final_state};
  pass.output = cache.output;
  return pass;
}

namespace {

// Inference-only LSTM over one block; advances `state`.
MatrixXd lstm_run(const LstmLayer& layer, const MatrixXd& seq, LstmState& state) {
  const Index d = idx(layer.input_size());
  const Index h = idx(layer.hidden_size());
  MatrixXd gates(4 * h, seq.cols());
  gates.noalias() = layer.weights.leftCols(d) * seq;
  gates.colwise() += layer.bias;
  MatrixXd out(h, seq.cols());
  const auto wh = layer.weights.rightCols(h);
  VectorXd c_next(h);
  for (Index t = 0; t < seq.cols(); ++t) {
    if (t == 0) {
      lstm_cell(gates.col(0), wh, state.h, state.c, out.col(0), c_next, h);
    } else {
      lstm_cell(gates.col(t), wh, out.col(t - 1), state.c, out.col(t), c_next, h);
    }
    state.c = c_next;
  }
  if (seq.cols() > 0) state.h = out.col(seq.cols() - 1);
  return out;
}

}  // namespace

MatrixXd reconstruct(const AutoencoderModel& model, const MatrixXd& seq,
                     SequenceState* state, std::size_t block) {
  const Architecture& arch = model.architecture();
  if (seq.rows() != idx(arch.input_width)) {
    throw DataError("model input must have " + std::to_string(arch.input_width) + " rows");
  }
  if (!seq.allFinite()) throw NumericError("non-finite model input");
  SequenceState local = state ? *state : SequenceState::zeros(arch);
  MatrixXd out(seq.rows(), seq.cols());
  block = std::max<std::size_t>(block, 1);
  for (Index start = 0; start < seq.cols(); start += idx(block)) {
    const Index len = std::min(idx(block), seq.cols() - start);
    const MatrixXd x = seq.middleCols(start, len);
    MatrixXd y = lstm_run(model.encoder_lstm, x, local.encoder);
    require_finite(y, "encoder_lstm");
    y = dense_forward(model.encoder_projection, y);
    y = dense_forward(model.encoder_code, y);
    y = dense_forward(model.decoder_projection, y);
    require_finite(y, "decoder_projection");
    y = lstm_run(model.decoder_lstm, y, local.decoder);
    require_finite(y, "decoder_lstm");
    out.middleCols(start, len) = dense_forward(model.output_head, y);
  }
  require_finite(out, "output_head");
  if (state) *state = std::move(local);
  return out;
}

double mse_loss(const MatrixXd& pred, const MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DataError("mse_loss: shape mismatch");
  }
  if (pred.size() == 0) throw DataError("mse_loss: empty input");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

AutoencoderModel backward(const AutoencoderModel& model, const ForwardCache& cache,
                          const MatrixXd& target) {
  if (cache.empty()) throw DataError("backward: missing forward cache");
  if (cache.model != &model || cache.revision != model.revision()) {
    throw DataError("backward: forward cache is stale");
  }
  if (target.rows() != cache.output.rows() || target.cols() != cache.output.cols()) {
    throw DataError("backward: target shape does not match the forward pass");
  }
  if (target.size() == 0) throw DataError("backward: empty sequence");

  AutoencoderModel grads(model.architecture());
  const MatrixXd d_out =
      (2.0 / static_cast<double>(target.size())) * (cache.output - target);
  const MatrixXd& dec_h = cache.decoder.hidden;
  const MatrixXd dec_out = dec_h.rightCols(dec_h.cols() - 1);
  const MatrixXd d_dec = dense_backward(model.output_head, dec_out, cache.output, d_out,
                                        grads.output_head);
  auto dec_back = lstm_backward(model.decoder_lstm, cache.decoder, d_dec);
  grads.decoder_lstm = std::move(dec_back.grads);
  const MatrixXd d_code = dense_backward(model.decoder_projection, cache.code,
                                         cache.decoder_in, dec_back.d_input,
                                         grads.decoder_projection);
  const MatrixXd d_proj = dense_backward(model.encoder_code, cache.projection, cache.code,
                                         d_code, grads.encoder_code);
  const MatrixXd& enc_h = cache.encoder.hidden;
  const MatrixXd enc_out = enc_h.rightCols(enc_h.cols() - 1);
  const MatrixXd d_enc = dense_backward(model.encoder_projection, enc_out, cache.projection,
                                        d_proj, grads.encoder_projection);
  grads.encoder_lstm = lstm_backward(model.encoder_lstm, cache.encoder, d_enc).grads;
  return grads;
}

AdamState::AdamState(const AdamConfig& cfg, std::span<const std::size_t> tensor_sizes)
    : config(cfg) {
  for (std::size_t n : tensor_sizes) {
    first_moment.emplace_back(n, 0.0);
    second_moment.emplace_back(n, 0.0);
  }
}

AdamState::AdamState(const AutoencoderModel& model, const AdamConfig& cfg) : config(cfg) {
  for (const auto& t : model.tensors()) {
    first_moment.emplace_back(t.size(), 0.0);
    second_moment.emplace_back(t.size(), 0.0);
  }
}

double AdamState::effective_learning_rate() const {
  return config.learning_rate / (1.0 + config.decay * static_cast<double>(step));
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw DataError("adam_step: tensor count mismatch");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size() ||
        params[k].size() != state.first_moment[k].size()) {
      throw DataError("adam_step: tensor shape mismatch");
    }
    for (double g : grads[k]) {
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");
    }
  }
  const AdamConfig& c = state.config;
  const double lr = state.effective_learning_rate();
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double g = grads[k][i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      params[k][i] -= lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

void adam_step(AutoencoderModel& model, const AutoencoderModel& grads, AdamState& state) {
  if (model.architecture() != grads.architecture()) {
    throw DataError("adam_step: gradient architecture mismatch");
  }
  const auto p = model.tensors();
  const auto g = grads.tensors();
  adam_step(p, g, state);
  model.touch();
}

namespace {

std::vector<double> snapshot(const AutoencoderModel& model) {
  std::vector<double> flat;
  flat.reserve(model.parameter_count());
  for (const auto& t : model.tensors()) flat.insert(flat.end(), t.begin(), t.end());
  return flat;
}

void restore(AutoencoderModel& model, const std::vector<double>& flat) {
  std::size_t pos = 0;
  for (auto t : model.tensors()) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), t.size(), t.begin());
    pos += t.size();
  }
  model.touch();
}

bool params_finite(const AutoencoderModel& model) {
  for (const auto& t : model.tensors()) {
    for (double x : t) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

}  // namespace

TrainReport train(AutoencoderModel& model, const MatrixXd& seq, const TrainConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  if (seq.cols() < 1) throw DataError("train: empty sequence");
  if (seq.rows() != idx(model.architecture().input_width)) {
    throw DataError("train: sequence width does not match the model");
  }
  const Index steps = seq.cols();
  const Index chunk = (static_cast<std::size_t>(steps) > config.chunk_threshold &&
                       config.chunk_length > 0)
                          ? idx(config.chunk_length)
                          : steps;

  TrainReport report;
  AdamState adam(model, config.adam);
  std::vector<double> last_good = snapshot(model);
  double best = std::numeric_limits<double>::infinity();
  std::size_t misses = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    SequenceState state = SequenceState::zeros(model.architecture());
    double weighted = 0.0;
    try {
      for (Index start = 0; start < steps; start += chunk) {
        const Index len = std::min(chunk, steps - start);
        const MatrixXd x = seq.middleCols(start, len);
        ForwardPass pass = forward(model, x, &state);
        const double loss = mse_loss(pass.output, x);
        if (!std::isfinite(loss)) throw NumericError("non-finite loss");
        weighted += loss * static_cast<double>(len);
        const AutoencoderModel grads = backward(model, pass.cache, x);
        adam_step(model, grads, adam);
        state = std::move(pass.final_state);
      }
      if (!params_finite(model)) throw NumericError("non-finite parameters");
    } catch (const NumericError& e) {
      restore(model, last_good);
      report.diverged = true;
      report.failure = "epoch " + std::to_string(epoch + 1) + ": " + e.what();
      break;
    }
    const double epoch_loss = weighted / static_cast<double>(steps);
    report.epoch_losses.push_back(epoch_loss);
    report.epochs_run = epoch + 1;
    last_good = snapshot(model);
    if (best - epoch_loss >= config.min_improvement) {
      best = epoch_loss;
      misses = 0;
    } else if (++misses >= std::max<std::size_t>(config.patience, 1)) {
      report.early_stopped = true;
      break;
    }
  }
  report.final_loss = mse_loss(reconstruct(model, seq), seq);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

namespace {

constexpr char kModelMagic[8] = {'L', 'A', 'C', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint8_t kLstmKind = 1;
constexpr std::uint8_t kDenseKind = 2;

struct LayerHeader {
  std::uint8_t kind;
  std::uint8_t activation;
  std::uint32_t input;
  std::uint32_t output;

  friend bool operator==(const LayerHeader&, const LayerHeader&) = default;
};

std::vector<LayerHeader> layer_headers(const AutoencoderModel& m) {
  auto lstm = [](const LstmLayer& l) {
    return LayerHeader{kLstmKind, 0, static_cast<std::uint32_t>(l.input_size()),
                       static_cast<std::uint32_t>(l.hidden_size())};
  };
  auto dense = [](const DenseLayer& l) {
    return LayerHeader{kDenseKind, static_cast<std::uint8_t>(l.activation),
                       static_cast<std::uint32_t>(l.input_size()),
                       static_cast<std::uint32_t>(l.output_size())};
  };
  return {lstm(m.encoder_lstm),       dense(m.encoder_projection),
          dense(m.encoder_code),      dense(m.decoder_projection),
          lstm(m.decoder_lstm),       dense(m.output_head)};
}

std::string describe(const std::vector<LayerHeader>& layers) {
  std::string s;
  for (const auto& l : layers) {
    if (!s.empty()) s += ", ";
    s += (l.kind == kLstmKind ? "Lstm(" : "Dense(") + std::to_string(l.input) + "->" +
         std::to_string(l.output) + ")";
  }
  return s;
}

// Row-major copy of a column-major matrix and back.
template <typename Derived>
void write_matrix(BinaryWriter& w, const Eigen::DenseBase<Derived>& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) w.put(m(i, j));
  }
}

template <typename Derived>
void read_matrix(BinaryReader& r, Eigen::DenseBase<Derived>& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = r.get<double>();
  }
}

}  // namespace

void save_model(const AutoencoderModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  BinaryWriter w(out);
  w.put_bytes(kModelMagic, sizeof kModelMagic);
  w.put(kModelFormatVersion);
  const auto layers = layer_headers(model);
  w.put(static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    w.put(l.kind);
    w.put(l.activation);
    w.put(std::uint16_t{0});
    w.put(l.input);
    w.put(l.output);
  }
  auto put_lstm = [&](const LstmLayer& l) {
    write_matrix(w, l.weights);
    write_matrix(w, l.bias);
  };
  auto put_dense = [&](const DenseLayer& l) {
    write_matrix(w, l.weights);
    write_matrix(w, l.bias);
  };
  put_lstm(model.encoder_lstm);
  put_dense(model.encoder_projection);
  put_dense(model.encoder_code);
  put_dense(model.decoder_projection);
  put_lstm(model.decoder_lstm);
  put_dense(model.output_head);
  if (!out) throw DataError("write failed: " + path.string());
}

AutoencoderModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  BinaryReader r(in, path.string());
  char magic[8];
  r.get_bytes(magic, sizeof magic);
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kModelMagic))) {
    throw DataError(path.string() + ": not a model file");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion) {
    throw DataError(path.string() + ": unsupported model version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>();
  if (count != 6) {
    throw DataError(path.string() + ": expected 6 layers, found " + std::to_string(count));
  }
  std::vector<LayerHeader> found;
  for (std::uint32_t k = 0; k < count; ++k) {
    LayerHeader l{};
    l.kind = r.get<std::uint8_t>();
    l.activation = r.get<std::uint8_t>();
    r.get<std::uint16_t>();
    l.input = r.get<std::uint32_t>();
    l.output = r.get<std::uint32_t>();
    found.push_back(l);
  }
  Architecture arch;
  arch.input_width = found[0].input;
  arch.encoder_hidden = found[0].output;
  arch.encoder_projection = found[1].output;
  arch.code_width = found[2].output;
  arch.decoder_projection = found[3].output;
  arch.decoder_hidden = found[4].output;
  if (arch.input_width == 0 || arch.encoder_hidden == 0 || arch.encoder_projection == 0 ||
      arch.code_width == 0 || arch.decoder_projection == 0 || arch.decoder_hidden == 0 ||
      arch.input_width > 4096 || arch.encoder_hidden > 4096 || arch.decoder_hidden > 4096 ||
      arch.encoder_projection > 4096 || arch.code_width > 4096 ||
      arch.decoder_projection > 4096) {
    throw DataError(path.string() + ": implausible layer sizes " + describe(found));
  }
  AutoencoderModel model(arch);
  if (layer_headers(model) != found) {
    throw DataError(path.string() + ": inconsistent layer stack " + describe(found) +
                    ", expected " + describe(layer_headers(model)));
  }
  auto get_lstm = [&](LstmLayer& l) {
    read_matrix(r, l.weights);
    read_matrix(r, l.bias);
  };
  auto get_dense = [&](DenseLayer& l) {
    read_matrix(r, l.weights);
    read_matrix(r, l.bias);
  };
  get_lstm(model.encoder_lstm);
  get_dense(model.encoder_projection);
  get_dense(model.encoder_code);
  get_dense(model.decoder_projection);
  get_lstm(model.decoder_lstm);
  get_dense(model.output_head);
  if (!r.at_end()) throw DataError(path.string() + ": trailing bytes after parameters");
  model.touch();
  return model;
}

AutoencoderModel load_model(const std::filesystem::path& path, const Architecture& expected) {
  AutoencoderModel model = load_model(path);
  if (model.architecture() != expected) {
    throw DataError(path.string() + ": architecture mismatch: expected " +
                    expected.describe() + ", found " + model.architecture().describe());
  }
  return model;
}

}  // namespace lac::nn
