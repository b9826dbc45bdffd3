#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "splicernn/model.hpp"
#include "splicernn/optim.hpp"

namespace splicernn {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 64;
  OptimizerConfig optimizer;
  double dropout_rate = 0.0;
  std::uint64_t seed = 1;
  bool shuffle = true;
  double clip_norm = 0.0;  // global-norm gradient clip; 0 disables
  int threads = 1;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;       // 1-based
  double loss = 0.0;   // mean training loss
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double seconds = 0.0;  // wall clock, the one non-deterministic field
};

// K x K counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes)
      : k_(num_classes), counts_(num_classes * num_classes, 0) {}

  void add(std::size_t truth, std::size_t predicted) { ++counts_[truth * k_ + predicted]; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * k_ + predicted];
  }
  std::uint64_t& at(std::size_t truth, std::size_t predicted) {
    return counts_[truth * k_ + predicted];
  }
  std::size_t num_classes() const { return k_; }

  std::uint64_t total() const;
  std::uint64_t diagonal() const;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

// Rebuilds the matrix under a class merge: class k of the input becomes
// class_map[k] of the output.
ConfusionMatrix remap_classes(const ConfusionMatrix& cm, std::span<const std::size_t> class_map,
                              std::size_t new_num_classes);

struct EvalReport {
  ConfusionMatrix confusion{0};
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::vector<double> f1_per_class;
  std::vector<bool> f1_undefined;  // true where TP+FP+FN == 0 (F1 pinned to 0)
};

// Per-class one-vs-rest F1 = 2*TP / (2*TP + FP + FN); macro-F1 is their
// unweighted mean, micro-F1 pools the counts.
EvalReport report_from_confusion(const ConfusionMatrix& cm);

EvalReport evaluate(const SpliceModel& model, std::span<const LabeledWindow> data);

// Returning false stops training after the current epoch.
using EpochCallback = std::function<bool(const EpochMetrics&, const SpliceModel&)>;

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  Optimizer optimizer;
};

// Mini-batch training. Each epoch shuffles under a per-epoch derived seed,
// averages per-example gradients over the batch and applies one optimizer
// step per batch (the last, possibly short, batch included). Per-example
// gradients are summed in example order, so results are bit-identical for
// any thread count. Aborts with NumericError on a non-finite loss.
TrainResult train(SpliceModel& model, std::span<const LabeledWindow> data,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// CSV: header epoch,loss,accuracy,macro_f1,seconds; locale-independent
// formatting; LF line endings.
void emit_metrics(std::span<const EpochMetrics> metrics, std::ostream& out);
void save_metrics(const std::string& path, std::span<const EpochMetrics> metrics);

}  // namespace splicernn
