#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stgraph/graph.hpp"

namespace stgraph {

// T×N observation matrix with node identifiers and timestamp metadata.
// Values contain no NaN after ingestion (missing cells are imputed).
struct SeriesDataset {
  Matrix values;  // rows are timestamps
  std::vector<std::string> node_ids;
  std::vector<std::string> timestamps;
  int interval_minutes = 5;

  int t() const { return static_cast<int>(values.rows()); }
  int n() const { return static_cast<int>(values.cols()); }
};

// One (input, target) pair cut from the series; y starts exactly where x
// ends. Frames are per-step N×1 column matrices.
struct WindowSample {
  int t0 = 0;  // absolute index of the first input row
  std::vector<Matrix> x;
  std::vector<Matrix> y;
};

// Series CSV: header "timestamp,<id1>,<id2>,...", one row per interval.
// Empty cells are imputed by forward fill; leading gaps use the column mean.
SeriesDataset load_series_csv(const std::string& path);
void save_series_csv(const SeriesDataset& ds, const std::string& path);

// Edges CSV: header "src,dst,weight", undirected (mirrored on load).
Graph load_edges_csv(const std::string& path,
                     const std::vector<std::string>& node_ids);
void save_edges_csv(const Graph& g, const std::string& path);

// Distance CSV: header "src,dst,meters", symmetric completion on load.
// Pairs absent from the file are unreachable (+inf).
Matrix load_dist_csv(const std::string& path,
                     const std::vector<std::string>& node_ids);

// Contiguous non-wrapping windows; count = (T − t_in − t_out)/stride + 1.
std::vector<WindowSample> make_windows(const SeriesDataset& ds, int t_in,
                                       int t_out, int stride = 1);

// Desk-scale synthetic benchmark on a ring of four cliques. Every node
// carries a diurnal sinusoid (period 288 steps; clique-level phase and
// amplitude with small per-node jitter). On top of it rides a disturbance
// that one lazy-diffusion step carries forward from the previous value's
// departure from the daily pattern, excited by seeded Gaussian noise whose
// variance is half clique-shared. Recent observations therefore stay
// informative beyond the periodic mean, and the informative structure is
// hierarchical.
//
//   x(t) = s(t) + d(t),   d(t) = coeff·R·d(t−1) + noise(t),
//   R = self·I + (1−self)·rownorm(A)
//
// which gives the observable invariant (zero noise, t ≥ 2):
//   u(t) := x(t) − coeff·R·x(t−1) satisfies
//   u(t+1) = 2cos(2π/period)·u(t) − u(t−1).
inline constexpr int kSynthPeriodSteps = 288;
inline constexpr double kSynthDiffusionCoeff = 0.95;
inline constexpr double kSynthSelfWeight = 0.75;
std::pair<SeriesDataset, Graph> synth_diffusion(int n, int t,
                                                std::uint64_t seed,
                                                double noise_sigma = 0.05);

}  // namespace stgraph
