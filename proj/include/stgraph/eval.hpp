#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "stgraph/training.hpp"

namespace stgraph {

// ---------------------------------------------------------------------------
// Historical-average baseline

// Predicts, for every node, the mean of its training history at the same
// step-of-period. Constant per (node, phase).
class HaBaseline {
 public:
  // train_series rows are time; throws DataError when the period exceeds
  // the training length.
  explicit HaBaseline(const Matrix& train_series,
                      int period = kSynthPeriodSteps);

  // Prediction for an absolute time index (training series starts at 0).
  Vector predict(int abs_t) const;
  int period() const { return period_; }

 private:
  Matrix phase_means_;  // period×N
  int period_;
};

// ---------------------------------------------------------------------------
// Evaluation reports

struct EvalRow {
  std::string name;
  int horizon = 0;  // 0 = all horizons pooled, k >= 1 per decoder step
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
};

struct EvalReport {
  std::string dataset_tag;
  std::vector<EvalRow> rows;
};

// Produces denormalized predictions (t_out frames of N×F_out) for a window.
using WindowPredictor =
    std::function<std::vector<Matrix>(const WindowSample&)>;

// Appends an overall row plus one row per horizon for this predictor.
void append_eval(EvalReport& report, const std::string& name,
                 const WindowPredictor& predict,
                 const std::vector<WindowSample>& windows);

// Model and HA front-ends for append_eval.
WindowPredictor model_predictor(ModelParams& params, const GraphContext& ctx,
                                const Scaler& scaler);
WindowPredictor ha_predictor(const HaBaseline& ha, int t_in);

void save_eval_csv(const EvalReport& report, const std::string& path);

// ---------------------------------------------------------------------------
// Cost model

// Analytic cost of one forward pass over a full window.
//   mac_count: multiply-accumulates of the recurrent computation, i.e. the
//     per-timestep encoder/decoder work summed over t_in + t_out steps. The
//     static per-window setup (assignment pyramid, pooled operators) is
//     reported separately in setup_macs because it is sequence-length
//     independent.
//   peak_activation_floats: doubles resident on the tape after the forward
//     pass — exactly what reverse mode keeps alive — including the setup.
struct CostEstimate {
  unsigned long long mac_count = 0;
  unsigned long long setup_macs = 0;
  unsigned long long peak_activation_floats = 0;
};

// Closed-form estimate obtained by walking the forward pass at shape level.
// peak_activation_floats matches Tape::data_floats() of a real pass exactly.
CostEstimate flop_estimate(const ModelConfig& config);

// ---------------------------------------------------------------------------
// Cluster inspection

struct ClusterRow {
  int cluster = 0;
  std::vector<std::string> members;
};

// Hard assignment by per-row argmax; ties break toward the lowest cluster
// index. Empty clusters are reported with empty member lists.
std::vector<ClusterRow> cluster_report(const Matrix& assignment,
                                       const std::vector<std::string>& node_ids);

// One row per node: node_id,cluster.
void save_clusters_csv(const Matrix& assignment,
                       const std::vector<std::string>& node_ids,
                       const std::string& path);

// ---------------------------------------------------------------------------
// Sweeps and benches

struct SweepRun {
  int m1 = 0;
  int m2 = 0;
  std::vector<EpochRecord> history;
  double best_val_mse = 0.0;
};

// Trains the base config once per (m1, m2) setting with an identical seed
// and budget.
std::vector<SweepRun> pool_sweep(const ModelConfig& base,
                                 const SeriesDataset& ds, const Graph& graph,
                                 const std::vector<std::pair<int, int>>& settings,
                                 const TrainOptions& opts);

void save_sweep_csv(const std::vector<SweepRun>& runs, const std::string& path);

struct TimingRow {
  ModelConfig config;
  int repetitions = 0;
  double median_seconds = 0.0;  // one forward+backward pass over a window
};

// Median wall time of forward+backward on seeded random frames.
// repetitions must be >= 3. Runs single-threaded.
std::vector<TimingRow> wallclock_bench(const std::vector<ModelConfig>& configs,
                                       int repetitions, std::uint64_t seed);

void save_timing_csv(const std::vector<TimingRow>& rows,
                     const std::string& path);

struct MemoryRow {
  int n = 0;
  CostEstimate pooled;  // 50%-25% schedule
  CostEstimate nopool;
  std::size_t measured_pooled_bytes = 0;  // 0 when not measured
  std::size_t measured_nopool_bytes = 0;
};

// Analytic footprint per graph size on the 50%-25% schedule. Sizes whose
// estimated footprint stays below measure_limit_floats are also measured by
// running a real forward pass and reading the tape.
std::vector<MemoryRow> memory_bench(const std::vector<int>& n_list,
                                    ModelConfig base,
                                    std::size_t measure_limit_floats = 0);

void save_memory_csv(const std::vector<MemoryRow>& rows,
                     const std::string& path);

// ---------------------------------------------------------------------------
// Published reference errors

// Error table reported for the Shenzhen flow task, used as a consistency
// regression: for each row the loss column should reproduce sqrt(MSE).
struct BaselineErrorRow {
  std::string name;
  double loss = 0.0;
  double mae = 0.0;
  double mse = 0.0;
};

const std::vector<BaselineErrorRow>& published_baseline_errors();
double loss_rmse_gap(const BaselineErrorRow& row);

}  // namespace stgraph
