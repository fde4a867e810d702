#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stgraph/data_io.hpp"
#include "stgraph/model.hpp"

namespace stgraph {

// Z-score normalization statistics over all training-set entries.
struct Scaler {
  double mean = 0.0;
  double std_dev = 1.0;  // falls back to 1 for constant data
};

Scaler zscore_fit(const Matrix& train_values);
Matrix zscore_apply(const Matrix& x, const Scaler& s);
Matrix zscore_invert(const Matrix& x, const Scaler& s);

struct MetricSummary {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
};

// Streaming accumulator so window-by-window evaluation needs no giant
// flattened buffers.
class MetricAccumulator {
 public:
  void add(const Matrix& pred, const Matrix& target);
  MetricSummary summary() const;
  long long count() const { return count_; }

 private:
  double abs_sum_ = 0.0;
  double sq_sum_ = 0.0;
  long long count_ = 0;
};

MetricSummary metrics(const std::vector<double>& pred,
                      const std::vector<double>& target);

// Mean squared error over all entries of the prediction sequence,
// differentiable through the predictions.
Value mse_loss(const std::vector<Value>& pred_seq,
               const std::vector<Matrix>& target_seq);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected adaptive-moment state for one parameter list.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const std::vector<Param*>& params, AdamOptions opts);

  // One update from the gradients currently stored in the params.
  // Throws NumericError naming the parameter if a gradient is NaN.
  void step(const std::vector<Param*>& params);

  long long step_count() const { return step_count_; }
  const AdamOptions& options() const { return opts_; }

 private:
  AdamOptions opts_;
  std::vector<Matrix> m_, v_;
  long long step_count_ = 0;
};

struct TrainOptions {
  AdamOptions adam;
  int batch_size = 8;
  int max_epochs = 50;
  int patience = 10;       // early stopping on validation MSE
  int window_stride = 1;   // stride for training windows
  double train_frac = 0.7;
  double val_frac = 0.1;
  // Scheduled sampling: teacher ratio decays linearly from 1 to 0 across
  // this many epochs (0 = across the whole run).
  int teacher_decay_epochs = 0;
  // Global L2 gradient-norm clip applied before each optimizer step
  // (0 disables).
  double grad_clip = 5.0;
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // MSE on normalized values
  double val_mae = 0.0;     // validation metrics on denormalized values
  double val_mse = 0.0;
  double val_rmse = 0.0;
  double seconds = 0.0;
  std::size_t peak_mem_bytes = 0;
};

struct TrainResult {
  ModelParams params;  // best-validation parameters
  Scaler scaler;
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_mse = 0.0;
  int train_rows = 0;  // time split actually used
  int val_rows = 0;
  int test_rows = 0;
};

// Trains on time-ordered splits (train/val/test fractions, no shuffling
// across the boundaries) with mini-batches, scheduled sampling with linear
// teacher-ratio decay, per-epoch validation, and early stopping.
TrainResult train_loop(const ModelConfig& config, const SeriesDataset& ds,
                       const Graph& graph, const TrainOptions& opts);

void save_history_csv(const std::vector<EpochRecord>& history,
                      const std::string& path);

// Peak resident set size of this process in bytes (0 where unsupported).
std::size_t peak_rss_bytes();

}  // namespace stgraph
