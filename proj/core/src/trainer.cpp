#include "splicernn/trainer.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <thread>

#include "splicernn/errors.hpp"

namespace splicernn {

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct ExampleResult {
  double loss = 0.0;
  int predicted = 0;
};

}  // namespace

void TrainConfig::validate() const {
  std::string problems;
  auto complain = [&](const std::string& msg) {
    if (!problems.empty()) problems += "; ";
    problems += msg;
  };
  if (epochs < 1) complain("epochs must be >= 1, got " + std::to_string(epochs));
  if (batch_size < 1) complain("batch_size must be >= 1, got " + std::to_string(batch_size));
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    complain("dropout_rate must lie in [0, 1), got " + std::to_string(dropout_rate));
  if (clip_norm < 0.0) complain("clip_norm must be >= 0");
  if (threads < 1) complain("threads must be >= 1, got " + std::to_string(threads));
  if (!problems.empty()) throw ValidationError("train config: " + problems);
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t sum = 0;
  for (const std::uint64_t c : counts_) sum += c;
  return sum;
}

std::uint64_t ConfusionMatrix::diagonal() const {
  std::uint64_t sum = 0;
  for (std::size_t k = 0; k < k_; ++k) sum += at(k, k);
  return sum;
}

ConfusionMatrix remap_classes(const ConfusionMatrix& cm, std::span<const std::size_t> class_map,
                              std::size_t new_num_classes) {
  if (class_map.size() != cm.num_classes())
    throw ValidationError("remap_classes: map covers " + std::to_string(class_map.size()) +
                          " classes, matrix has " + std::to_string(cm.num_classes()));
  ConfusionMatrix out(new_num_classes);
  for (std::size_t t = 0; t < cm.num_classes(); ++t)
    for (std::size_t p = 0; p < cm.num_classes(); ++p)
      out.at(class_map[t], class_map[p]) += cm.at(t, p);
  return out;
}

EvalReport report_from_confusion(const ConfusionMatrix& cm) {
  const std::size_t K = cm.num_classes();
  EvalReport report;
  report.confusion = cm;
  report.f1_per_class.resize(K, 0.0);
  report.f1_undefined.resize(K, false);

  const std::uint64_t total = cm.total();
  report.accuracy = total == 0 ? 0.0
                               : static_cast<double>(cm.diagonal()) / static_cast<double>(total);

  std::uint64_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
  double macro = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const std::uint64_t tp = cm.at(k, k);
    std::uint64_t fp = 0, fn = 0;
    for (std::size_t j = 0; j < K; ++j) {
      if (j == k) continue;
      fp += cm.at(j, k);
      fn += cm.at(k, j);
    }
    tp_sum += tp;
    fp_sum += fp;
    fn_sum += fn;
    const std::uint64_t denom = 2 * tp + fp + fn;
    if (denom == 0) {
      report.f1_undefined[k] = true;
      report.f1_per_class[k] = 0.0;
    } else {
      report.f1_per_class[k] = 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    }
    macro += report.f1_per_class[k];
  }
  report.macro_f1 = K == 0 ? 0.0 : macro / static_cast<double>(K);
  const std::uint64_t micro_denom = 2 * tp_sum + fp_sum + fn_sum;
  report.micro_f1 =
      micro_denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp_sum) / static_cast<double>(micro_denom);
  return report;
}

EvalReport evaluate(const SpliceModel& model, std::span<const LabeledWindow> data) {
  if (data.empty()) throw ValidationError("evaluate: empty dataset");
  const std::size_t K = model.config.num_classes;
  ConfusionMatrix cm(K);
  for (const LabeledWindow& window : data) {
    if (window.label < 0 || static_cast<std::size_t>(window.label) >= K)
      throw ValidationError("evaluate: label " + std::to_string(window.label) +
                            " out of range for a " + std::to_string(K) + "-class model");
    const Prediction pred = predict(model, window);
    cm.add(static_cast<std::size_t>(window.label), static_cast<std::size_t>(pred.label));
  }
  return report_from_confusion(cm);
}

TrainResult train(SpliceModel& model, std::span<const LabeledWindow> data,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (data.empty()) throw ValidationError("train: empty dataset");
  const std::size_t K = model.config.num_classes;
  for (const LabeledWindow& w : data) {
    if (w.bases.size() != model.config.window_length)
      throw ValidationError("train: window length " + std::to_string(w.bases.size()) +
                            " does not match model window length " +
                            std::to_string(model.config.window_length));
    if (w.label < 0 || static_cast<std::size_t>(w.label) >= K)
      throw ValidationError("train: label " + std::to_string(w.label) +
                            " out of range for a " + std::to_string(K) + "-class model");
  }

  // the train-time dropout rate governs the forward passes below
  model.config.dropout_rate = config.dropout_rate;

  const std::vector<NamedTensor> named = model.trainable_parameters();
  std::vector<Tensor*> params;
  params.reserve(named.size());
  for (const NamedTensor& nt : named) params.push_back(nt.tensor);

  TrainResult result;
  result.optimizer = Optimizer(config.optimizer, params);

  const std::uint64_t shuffle_base = derive_seed(config.seed, "shuffle");
  const std::uint64_t dropout_base = derive_seed(config.seed, "dropout");

  const std::size_t n = data.size();
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  // one gradient slot per batch position; slots are summed in example order
  // at the end of each batch, which keeps results independent of threading
  std::vector<std::vector<Matrix>> slots(std::min(batch_size, n));
  for (auto& slot : slots) {
    slot.reserve(params.size());
    for (const Tensor* p : params) slot.emplace_back(p->value.rows, p->value.cols);
  }
  std::vector<ExampleResult> example_results(slots.size());

  model.zero_grads();

  const int worker_count =
      static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(config.threads),
                                             slots.size()));
  std::vector<SpliceModel> worker_models;  // worker 0 runs on `model` itself
  for (int w = 1; w < worker_count; ++w) worker_models.push_back(model);

  // stable per-worker tensor pointer lists, index 0 is the master model
  std::vector<std::vector<Tensor*>> worker_params(static_cast<std::size_t>(worker_count));
  worker_params[0] = params;
  for (int w = 1; w < worker_count; ++w) {
    const std::vector<NamedTensor> wn =
        worker_models[static_cast<std::size_t>(w - 1)].trainable_parameters();
    for (const NamedTensor& nt : wn)
      worker_params[static_cast<std::size_t>(w)].push_back(nt.tensor);
  }

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    if (config.shuffle) {
      Rng shuffle_rng(derive_seed(shuffle_base, static_cast<std::uint64_t>(epoch)));
      shuffle_rng.shuffle(order.begin(), order.end());
    }

    double epoch_loss = 0.0;
    ConfusionMatrix train_cm(K);

    for (std::size_t batch_start = 0; batch_start < n; batch_start += batch_size) {
      const std::size_t b = std::min(batch_size, n - batch_start);

      auto run_slice = [&](SpliceModel& worker, const std::vector<Tensor*>& wp,
                           std::size_t begin, std::size_t stride, std::string& error_out) {
        try {
          for (std::size_t s = begin; s < b; s += stride) {
            const LabeledWindow& window = data[order[batch_start + s]];
            Rng example_rng(derive_seed(dropout_base, static_cast<std::uint64_t>(epoch),
                                        static_cast<std::uint64_t>(batch_start + s)));
            const ForwardTrace trace = forward(worker, window, RunMode::train, &example_rng);
            const double l = loss(trace, window.label);
            if (!std::isfinite(l))
              throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_start / batch_size) +
                                 ", example " + std::to_string(s));
            backward(worker, trace, window.label);

            example_results[s].loss = l;
            int arg = 0;
            for (std::size_t k = 1; k < trace.probs.size(); ++k)
              if (trace.probs[k] > trace.probs[arg]) arg = static_cast<int>(k);
            example_results[s].predicted = arg;

            for (std::size_t j = 0; j < wp.size(); ++j) {
              slots[s][j].data.assign(wp[j]->grad.data.begin(), wp[j]->grad.data.end());
              wp[j]->zero_grad();
            }
          }
        } catch (const Error& e) {
          error_out = e.what();
        }
      };

      std::vector<std::string> errors(static_cast<std::size_t>(worker_count));
      if (worker_count <= 1) {
        run_slice(model, worker_params[0], 0, 1, errors[0]);
      } else {
        // refresh clones with the post-update parameter values
        for (int w = 1; w < worker_count; ++w)
          for (std::size_t j = 0; j < params.size(); ++j)
            worker_params[static_cast<std::size_t>(w)][j]->value = params[j]->value;
        std::vector<std::thread> pool;
        for (int w = 1; w < worker_count; ++w)
          pool.emplace_back([&, w] {
            run_slice(worker_models[static_cast<std::size_t>(w - 1)],
                      worker_params[static_cast<std::size_t>(w)], static_cast<std::size_t>(w),
                      static_cast<std::size_t>(worker_count),
                      errors[static_cast<std::size_t>(w)]);
          });
        run_slice(model, worker_params[0], 0, static_cast<std::size_t>(worker_count), errors[0]);
        for (std::thread& th : pool) th.join();
      }
      for (const std::string& err : errors)
        if (!err.empty()) throw NumericError(err);

      // ordered merge: batch mean, then one optimizer step
      const double inv_b = 1.0 / static_cast<double>(b);
      for (std::size_t j = 0; j < params.size(); ++j) {
        Matrix& g = params[j]->grad;
        g.fill(0.0);
        for (std::size_t s = 0; s < b; ++s) {
          const Matrix& slot = slots[s][j];
          for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] += slot.data[k];
        }
        for (double& v : g.data) v *= inv_b;
      }

      if (config.clip_norm > 0.0) {
        double sq = 0.0;
        for (const Tensor* p : params)
          for (const double v : p->grad.data) sq += v * v;
        const double norm = std::sqrt(sq);
        if (norm > config.clip_norm) {
          const double scale = config.clip_norm / norm;
          for (Tensor* p : params)
            for (double& v : p->grad.data) v *= scale;
        }
      }

      result.optimizer.step(params);
      model.zero_grads();

      for (std::size_t s = 0; s < b; ++s) {
        const LabeledWindow& window = data[order[batch_start + s]];
        epoch_loss += example_results[s].loss;
        train_cm.add(static_cast<std::size_t>(window.label),
                     static_cast<std::size_t>(example_results[s].predicted));
      }
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.loss = epoch_loss / static_cast<double>(n);
    const EvalReport train_report = report_from_confusion(train_cm);
    metrics.accuracy = train_report.accuracy;
    metrics.macro_f1 = train_report.macro_f1;
    metrics.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    result.metrics.push_back(metrics);

    if (on_epoch && !on_epoch(metrics, model)) break;
  }

  return result;
}

void emit_metrics(std::span<const EpochMetrics> metrics, std::ostream& out) {
  if (metrics.empty()) throw ValidationError("emit_metrics: empty metric list");
  out << "epoch,loss,accuracy,macro_f1,seconds\n";
  for (const EpochMetrics& m : metrics)
    out << m.epoch << ',' << format_double(m.loss) << ',' << format_double(m.accuracy) << ','
        << format_double(m.macro_f1) << ',' << format_double(m.seconds) << '\n';
}

void save_metrics(const std::string& path, std::span<const EpochMetrics> metrics) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write metrics file: " + path);
  emit_metrics(metrics, out);
  out.flush();
  if (!out) throw IoError("failed while writing metrics file: " + path);
}

}  // namespace splicernn
