#include "splicernn/model.hpp"

#include <algorithm>
#include <cmath>

#include "splicernn/numerics.hpp"

namespace splicernn {

namespace {

constexpr double kProbEps = 1e-7;

void append_cell_tensors(std::vector<NamedTensor>& out, CellParams& cell,
                         const std::string& prefix) {
  visit_cell_tensors(cell, [&](const char* name, Tensor& t) {
    out.push_back({prefix + name, &t});
  });
}

}  // namespace

void ModelConfig::validate() const {
  std::string problems;
  auto complain = [&](const std::string& msg) {
    if (!problems.empty()) problems += "; ";
    problems += msg;
  };
  if (layer_sizes.empty()) complain("layer_sizes must not be empty");
  for (const std::size_t h : layer_sizes)
    if (h == 0) complain("layer sizes must be positive");
  if (num_classes != 2 && num_classes != 3)
    complain("num_classes must be 2 or 3, got " + std::to_string(num_classes));
  if (window_length < 2 || window_length % 2 != 0)
    complain("window_length must be even and >= 2, got " + std::to_string(window_length));
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    complain("dropout_rate must lie in [0, 1), got " + std::to_string(dropout_rate));
  if (irnn_scale <= 0.0) complain("irnn_scale must be positive");
  if (!problems.empty()) throw ValidationError("model config: " + problems);
}

SpliceModel SpliceModel::create(const ModelConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, "init"));

  SpliceModel model;
  model.config = config;

  if (config.one_hot_input) {
    model.embedding.value =
        init_matrix(kEmbeddingDim, kEmbeddingDim, Initializer::identity_scaled(1.0), rng);
    model.embedding.grad = Matrix(kEmbeddingDim, kEmbeddingDim);
  } else {
    model.embedding.value =
        init_matrix(kEmbeddingDim, kEmbeddingDim, Initializer::uniform_scaled(), rng);
    model.embedding.grad = Matrix(kEmbeddingDim, kEmbeddingDim);
  }

  std::size_t input_dim = kEmbeddingDim;
  for (const std::size_t hidden : config.layer_sizes) {
    model.layers.push_back(
        make_cell_params(config.cell_kind, input_dim, hidden, config.irnn_scale, rng));
    input_dim = hidden;
  }

  model.w_out.value = init_matrix(config.num_classes, input_dim, Initializer::uniform_scaled(), rng);
  model.w_out.grad = Matrix(config.num_classes, input_dim);
  model.b_out = Tensor(config.num_classes, 1);
  return model;
}

std::vector<NamedTensor> SpliceModel::trainable_parameters() {
  std::vector<NamedTensor> out;
  if (!config.one_hot_input) out.push_back({"embedding", &embedding});
  for (std::size_t l = 0; l < layers.size(); ++l)
    append_cell_tensors(out, layers[l], "layer" + std::to_string(l) + ".");
  out.push_back({"out.W", &w_out});
  out.push_back({"out.b", &b_out});
  return out;
}

std::vector<NamedTensor> SpliceModel::state_tensors() {
  std::vector<NamedTensor> out;
  out.push_back({"embedding", &embedding});
  for (std::size_t l = 0; l < layers.size(); ++l)
    append_cell_tensors(out, layers[l], "layer" + std::to_string(l) + ".");
  out.push_back({"out.W", &w_out});
  out.push_back({"out.b", &b_out});
  return out;
}

std::size_t SpliceModel::parameter_count() const {
  std::size_t count = config.one_hot_input ? 0 : embedding.size();
  for (const CellParams& layer : layers) count += cell_param_count(layer);
  count += w_out.size() + b_out.size();
  return count;
}

void SpliceModel::zero_grads() {
  for (const NamedTensor& nt : state_tensors()) nt.tensor->zero_grad();
}

ForwardTrace forward(const SpliceModel& model, const LabeledWindow& window, RunMode mode,
                     Rng* rng) {
  const ModelConfig& cfg = model.config;
  if (window.bases.size() != cfg.window_length)
    throw ValidationError("forward: window length " + std::to_string(window.bases.size()) +
                          " does not match configured length " +
                          std::to_string(cfg.window_length));
  for (const std::uint8_t code : window.bases)
    if (code >= kAlphabetSize) throw ValidationError("forward: window contains N");

  const std::size_t T = cfg.window_length;
  const bool training = mode == RunMode::train;
  const bool use_dropout = training && cfg.dropout_rate > 0.0;
  if (use_dropout && rng == nullptr)
    throw ValidationError("forward: train mode with dropout requires an rng");

  ForwardTrace trace;
  trace.training = training;
  trace.codes = window.bases;

  // embedding lookup
  std::vector<Vec> inputs(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto row = model.embedding.value.row(window.bases[t]);
    inputs[t].assign(row.begin(), row.end());
  }

  if (training) trace.layers.resize(model.layers.size());
  StepCache scratch;

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const CellParams& layer = model.layers[l];
    const std::size_t h = cell_hidden_dim(layer);
    CellState state = make_cell_state(kind_of(layer), h);

    std::vector<Vec> outputs(T);
    if (training) {
      trace.layers[l].steps.resize(T);
      for (std::size_t t = 0; t < T; ++t) {
        cell_step(layer, inputs[t], state, trace.layers[l].steps[t]);
        outputs[t] = state.h;
      }
    } else {
      for (std::size_t t = 0; t < T; ++t) {
        cell_step(layer, inputs[t], state, scratch);
        outputs[t] = state.h;
      }
    }

    if (use_dropout) {
      Matrix mask = dropout_mask(h, T, cfg.dropout_rate, *rng);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < h; ++k) outputs[t][k] *= mask(k, t);
      trace.layers[l].mask = std::move(mask);
    }

    inputs = std::move(outputs);
  }

  trace.h_top = inputs.back();

  const std::size_t K = cfg.num_classes;
  trace.logits.assign(model.b_out.value.data.begin(), model.b_out.value.data.end());
  matvec_acc<double>(trace.logits, model.w_out.value, trace.h_top);
  trace.y_hat.resize(K);
  trace.probs.resize(K);
  double sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    trace.y_hat[k] = sigmoid(trace.logits[k]);
    trace.probs[k] = std::clamp(trace.y_hat[k], kProbEps, 1.0 - kProbEps);
    sum += trace.probs[k];
  }
  for (std::size_t k = 0; k < K; ++k) trace.probs[k] /= sum;
  return trace;
}

double log_loss(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
    throw ValidationError("loss: label " + std::to_string(label) + " out of range for " +
                          std::to_string(probs.size()) + " classes");
  return -std::log(probs[label]);
}

double loss(const ForwardTrace& trace, int label) { return log_loss(trace.probs, label); }

void backward(SpliceModel& model, const ForwardTrace& trace, int label) {
  if (!trace.training || trace.layers.size() != model.layers.size())
    throw ValidationError("backward: no caches (trace must come from a train-mode forward)");
  const std::size_t K = model.config.num_classes;
  if (label < 0 || static_cast<std::size_t>(label) >= K)
    throw ValidationError("backward: label out of range");
  const std::size_t T = model.config.window_length;

  // loss -> clipped/normalized probabilities -> sigmoid outputs
  double clip_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    clip_sum += std::clamp(trace.y_hat[k], kProbEps, 1.0 - kProbEps);

  Vec d_logits(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double clipped = std::clamp(trace.y_hat[k], kProbEps, 1.0 - kProbEps);
    double d_clipped = 1.0 / clip_sum;  // d(-ln(c_l / S)) / d c_k = 1/S - delta_kl / c_l
    if (static_cast<int>(k) == label) d_clipped -= 1.0 / clipped;
    const bool inside = trace.y_hat[k] > kProbEps && trace.y_hat[k] < 1.0 - kProbEps;
    const double d_y = inside ? d_clipped : 0.0;
    d_logits[k] = d_y * trace.y_hat[k] * (1.0 - trace.y_hat[k]);
  }

  outer_acc<double>(model.w_out.grad, d_logits, trace.h_top);
  for (std::size_t k = 0; k < K; ++k) model.b_out.grad.data[k] += d_logits[k];

  const std::size_t h_top_dim = trace.h_top.size();
  std::vector<Vec> upstream(T, Vec(h_top_dim, 0.0));
  matvec_transposed_acc<double>(std::span<double>(upstream[T - 1]), model.w_out.value, d_logits);

  // walk the stack top-down; each layer's mask gates the gradient reaching
  // its raw hidden outputs
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const LayerTrace& lt = trace.layers[l];
    if (lt.mask.size() != 0) {
      const std::size_t h = lt.mask.rows;
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < h; ++k) upstream[t][k] *= lt.mask(k, t);
    }
    upstream = cell_backward(model.layers[l], lt.steps, upstream);
  }

  // scatter into the embedding rows (frozen one-hot embeddings skip this)
  if (!model.config.one_hot_input) {
    for (std::size_t t = 0; t < T; ++t) {
      auto grow = model.embedding.grad.row(trace.codes[t]);
      for (std::size_t j = 0; j < kEmbeddingDim; ++j) grow[j] += upstream[t][j];
    }
  }
}

Prediction predict(const SpliceModel& model, const LabeledWindow& window) {
  const ForwardTrace trace = forward(model, window, RunMode::infer);
  Prediction pred;
  pred.probs = trace.probs;
  pred.label = 0;
  for (std::size_t k = 1; k < trace.probs.size(); ++k)
    if (trace.probs[k] > trace.probs[pred.label]) pred.label = static_cast<int>(k);
  return pred;
}

}  // namespace splicernn
