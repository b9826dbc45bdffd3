#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "splicernn/cells.hpp"
#include "splicernn/matrix.hpp"
#include "splicernn/rng.hpp"
#include "splicernn/windows.hpp"

namespace splicernn {

// Every nucleotide code maps to a learnable 4-d dense vector, so the network
// input width is fixed at 4.
inline constexpr std::size_t kEmbeddingDim = 4;

struct ModelConfig {
  CellKind cell_kind = CellKind::lstm;
  std::vector<std::size_t> layer_sizes = {60, 30};  // hidden widths, bottom to top
  std::size_t num_classes = 3;                      // 3: acceptor/non-site/donor, 2: site/non-site
  std::size_t window_length = 60;
  double dropout_rate = 0.0;
  double irnn_scale = 1.0;       // recurrent identity scale for irnn cells
  bool one_hot_input = false;    // freeze the embedding at the identity
  std::uint64_t seed = 1;

  void validate() const;  // throws ValidationError listing every problem
};

// Embedding -> stacked recurrent layers -> K-unit sigmoid output layer.
struct SpliceModel {
  ModelConfig config;
  Tensor embedding;  // 4 x 4, row k is the dense vector for code k
  std::vector<CellParams> layers;
  Tensor w_out;  // K x h_last
  Tensor b_out;  // K x 1

  static SpliceModel create(const ModelConfig& config);

  // Tensors the optimizer updates, in canonical order. A frozen one-hot
  // embedding is excluded here but still part of state_tensors().
  std::vector<NamedTensor> trainable_parameters();
  std::vector<NamedTensor> state_tensors();

  std::size_t parameter_count() const;  // trainable values
  void zero_grads();
};

enum class RunMode { train, infer };

struct LayerTrace {
  std::vector<StepCache> steps;
  Matrix mask;  // h x T inverted-dropout mask; empty when dropout is off
};

// Activations of one forward pass. Step caches are kept only in train mode.
struct ForwardTrace {
  bool training = false;
  std::vector<std::uint8_t> codes;
  std::vector<LayerTrace> layers;
  Vec h_top;   // top hidden state at the final step (after dropout)
  Vec logits;  // W_out h_top + b_out
  Vec y_hat;   // sigmoid(logits)
  Vec probs;   // clipped and normalized, sums to 1
};

// Runs the window through embedding lookup, the stacked recurrent layers and
// the sigmoid output layer. In train mode each layer's output sequence is
// multiplied by an inverted-dropout mask drawn from `rng`; classification
// reads the final step's top hidden state. Sigmoid outputs are clipped to
// [eps, 1-eps] (eps = 1e-7) and normalized into probabilities.
ForwardTrace forward(const SpliceModel& model, const LabeledWindow& window, RunMode mode,
                     Rng* rng = nullptr);

// Multi-class log loss -ln p[label].
double log_loss(std::span<const double> probs, int label);
double loss(const ForwardTrace& trace, int label);

// Accumulates exact gradients of loss(trace, label) into every parameter's
// grad buffer, including the embedding rows touched by the window.
// Requires a train-mode trace.
void backward(SpliceModel& model, const ForwardTrace& trace, int label);

struct Prediction {
  int label = 0;
  Vec probs;
};

// argmax of the class probabilities; ties break toward the lowest index
Prediction predict(const SpliceModel& model, const LabeledWindow& window);

}  // namespace splicernn
