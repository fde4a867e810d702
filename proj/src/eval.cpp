#include "stgraph/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace stgraph {

HaBaseline::HaBaseline(const Matrix& train_series, int period)
    : period_(period) {
  if (period < 1)
    throw ParameterError("HaBaseline: period must be >= 1");
  if (train_series.rows() < period)
    throw DataError("HaBaseline: period " + std::to_string(period) +
                    " exceeds training length " +
                    std::to_string(train_series.rows()));
  const int n = static_cast<int>(train_series.cols());
  phase_means_ = Matrix::Zero(period, n);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(period);
  for (int t = 0; t < train_series.rows(); ++t) {
    phase_means_.row(t % period) += train_series.row(t);
    ++counts(t % period);
  }
  for (int p = 0; p < period; ++p) phase_means_.row(p) /= counts(p);
}

Vector HaBaseline::predict(int abs_t) const {
  if (abs_t < 0) throw ParameterError("HaBaseline: negative time index");
  return phase_means_.row(abs_t % period_).transpose();
}

void append_eval(EvalReport& report, const std::string& name,
                 const WindowPredictor& predict,
                 const std::vector<WindowSample>& windows) {
  if (windows.empty()) throw DataError("append_eval: no evaluation windows");
  const int horizon = static_cast<int>(windows.front().y.size());
  MetricAccumulator overall;
  std::vector<MetricAccumulator> per_step(horizon);
  for (const WindowSample& w : windows) {
    const std::vector<Matrix> preds = predict(w);
    if (static_cast<int>(preds.size()) != horizon)
      throw ContractError("append_eval: predictor returned " +
                          std::to_string(preds.size()) + " frames for a " +
                          std::to_string(horizon) + "-step window");
    for (int k = 0; k < horizon; ++k) {
      overall.add(preds[k], w.y[k]);
      per_step[k].add(preds[k], w.y[k]);
    }
  }
  auto push = [&](int h, const MetricSummary& m) {
    report.rows.push_back({name, h, m.mae, m.mse, m.rmse});
  };
  push(0, overall.summary());
  for (int k = 0; k < horizon; ++k) push(k + 1, per_step[k].summary());
}

WindowPredictor model_predictor(ModelParams& params, const GraphContext& ctx,
                                const Scaler& scaler) {
  return [&params, &ctx, scaler](const WindowSample& w) {
    Tape tape;
    std::vector<Matrix> x_norm;
    x_norm.reserve(w.x.size());
    for (const Matrix& f : w.x) x_norm.push_back(zscore_apply(f, scaler));
    std::vector<Value> preds = forward(tape, params, ctx, x_norm);
    std::vector<Matrix> out;
    out.reserve(preds.size());
    for (const Value& p : preds) out.push_back(zscore_invert(p.data(), scaler));
    return out;
  };
}

WindowPredictor ha_predictor(const HaBaseline& ha, int t_in) {
  return [&ha, t_in](const WindowSample& w) {
    std::vector<Matrix> out;
    out.reserve(w.y.size());
    for (std::size_t k = 0; k < w.y.size(); ++k)
      out.push_back(ha.predict(w.t0 + t_in + static_cast<int>(k)));
    return out;
  };
}

void save_eval_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  out << "dataset,name,horizon,mae,mse,rmse\n";
  char buf[256];
  for (const EvalRow& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.17g,%.17g,%.17g\n",
                  report.dataset_tag.c_str(), r.name.c_str(), r.horizon, r.mae,
                  r.mse, r.rmse);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// Cost model: walks the forward pass at shape level, mirroring the node and
// matmul structure of bind_model/encode/decode one-to-one.

namespace {

struct ShapeSim {
  unsigned long long macs = 0;
  unsigned long long floats = 0;

  struct S {
    long long r = 0, c = 0;
  };

  S node(long long r, long long c) {
    floats += static_cast<unsigned long long>(r) * c;
    return {r, c};
  }
  S mm(S a, S b) {
    macs += static_cast<unsigned long long>(a.r) * a.c * b.c;
    return node(a.r, b.c);
  }
  S ew(S a) { return node(a.r, a.c); }
  S cat(S a, S b) { return node(a.r, a.c + b.c); }

  S gru(S h, S x) {
    S c = cat(h, x);
    S w{c.c, h.c};
    ew(ew(mm(c, w)));  // update gate: matmul, bias, sigmoid
    ew(ew(mm(c, w)));  // reset gate
    ew(h);             // r ⊙ h
    S cr = cat(h, x);
    ew(ew(mm(cr, w)));  // candidate: matmul, bias, tanh
    ew(h);              // 1 − z
    ew(h);              // (1−z) ⊙ h
    ew(h);              // z ⊙ h̃
    return ew(h);       // sum
  }

  // Convolutions are built with the linear activation, so the matmul output
  // is the last node of each conv.
  S cheb_conv(S lap, S x, S theta, int k_order) {
    if (k_order >= 2) mm(lap, x);
    for (int k = 2; k < k_order; ++k) {
      ew(ew(mm(lap, x)));  // matmul, scale, sub
    }
    S stacked = x;
    for (int k = 1; k < k_order; ++k) stacked = cat(stacked, x);
    return mm(stacked, theta);
  }

  S dense_conv(S op, S x, S theta) { return mm(mm(op, x), theta); }

  S assignment(S op, S xs, S w) { return ew(ew(mm(mm(op, xs), w))); }
};

}  // namespace

CostEstimate flop_estimate(const ModelConfig& cfg) {
  cfg.validate();
  const long long n = cfg.n_nodes, m1 = cfg.m1, m2 = cfg.m2;
  const long long h = cfg.hidden, fi = cfg.f_in, fo = cfg.f_out;
  const bool pooled = cfg.pooling_enabled();

  ShapeSim sim;
  using S = ShapeSim::S;

  // bind_model: graph constants and parameter leaves.
  S lap = sim.node(n, n);
  S adj = sim.node(n, n);
  S theta0 = sim.node(cfg.cheb_k * fi, h);
  S theta1 = sim.node(h, h);
  S theta_d0 = sim.node(fo, h);
  S theta_d1 = sim.node(h, h);
  for (int g = 0; g < 4; ++g) {
    for (int i = 0; i < 3; ++i) sim.node(2 * h, h);
    for (int i = 0; i < 3; ++i) sim.node(1, h);
  }
  sim.node(h, fo);  // output projection
  sim.node(h, fo);  // feedback projection

  S assign0{n, m1}, assign0_t{m1, n}, assign1{m1, m2}, assign1_t{m2, m1};
  S a0 = adj, a1 = adj;
  if (pooled) {
    const long long fs = 3 + cfg.assign_embed;
    S stats = sim.node(n, 3);
    S embed = sim.node(n, cfg.assign_embed);
    S xs = sim.cat(stats, embed);
    sim.node(fs, m1);  // assignment weights, level 0
    assign0 = sim.assignment(adj, xs, S{fs, m1});
    assign0_t = sim.node(m1, n);
    a0 = sim.mm(sim.mm(assign0_t, adj), assign0);
    S xs1 = sim.mm(assign0_t, xs);
    sim.node(fs, m2);  // assignment weights, level 1
    assign1 = sim.assignment(a0, xs1, S{fs, m2});
    assign1_t = sim.node(m2, m1);
    a1 = sim.mm(sim.mm(assign1_t, a0), assign1);
  }
  const unsigned long long setup_macs = sim.macs;

  // encode
  S h0 = sim.node(m1, h);
  S h1 = sim.node(m2, h);
  for (int t = 0; t < cfg.t_in; ++t) {
    S x = sim.node(n, fi);
    S c0 = sim.cheb_conv(lap, x, theta0, cfg.cheb_k);
    S u = pooled ? sim.mm(assign0_t, c0) : c0;
    h0 = sim.gru(h0, u);
    S c1 = sim.dense_conv(a0, h0, theta1);
    S v = pooled ? sim.mm(assign1_t, c1) : c1;
    h1 = sim.gru(h1, v);
  }

  // decode (teacher forcing off: feedback reuses the previous prediction)
  S h_d1 = sim.node(n, h);
  S prev{n, fo};
  for (int k = 0; k < cfg.t_out; ++k) {
    S coarse;
    if (k == 0) {
      coarse = sim.mm(h1, S{h, fo});
    } else {
      coarse = pooled ? sim.mm(assign1_t, sim.mm(assign0_t, prev)) : prev;
    }
    S d0 = sim.dense_conv(a1, coarse, theta_d0);
    if (pooled) d0 = sim.mm(assign1, d0);
    h0 = sim.gru(h0, d0);
    S d1 = sim.dense_conv(a0, h0, theta_d1);
    if (pooled) d1 = sim.mm(assign0, d1);
    h_d1 = sim.gru(h_d1, d1);
    prev = sim.mm(h_d1, S{h, fo});
  }

  CostEstimate est;
  est.setup_macs = setup_macs;
  est.mac_count = sim.macs - setup_macs;
  est.peak_activation_floats = sim.floats;
  return est;
}

// ---------------------------------------------------------------------------

std::vector<ClusterRow> cluster_report(
    const Matrix& assignment, const std::vector<std::string>& node_ids) {
  const int n = static_cast<int>(assignment.rows());
  const int m = static_cast<int>(assignment.cols());
  if (static_cast<int>(node_ids.size()) != n)
    throw ContractError("cluster_report: " + std::to_string(node_ids.size()) +
                        " ids for " + std::to_string(n) + " rows");
  for (int i = 0; i < n; ++i) {
    if (std::abs(assignment.row(i).sum() - 1.0) > 1e-6)
      throw ContractError("cluster_report: row " + std::to_string(i) +
                          " is not a probability distribution");
  }
  std::vector<ClusterRow> rows(m);
  for (int c = 0; c < m; ++c) rows[c].cluster = c;
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 1; c < m; ++c)
      if (assignment(i, c) > assignment(i, best)) best = c;  // ties keep lowest
    rows[best].members.push_back(node_ids[i]);
  }
  return rows;
}

void save_clusters_csv(const Matrix& assignment,
                       const std::vector<std::string>& node_ids,
                       const std::string& path) {
  const auto rows = cluster_report(assignment, node_ids);
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  out << "node_id,cluster\n";
  // Stable node order: walk nodes, not clusters.
  std::vector<int> cluster_of(node_ids.size(), 0);
  for (const ClusterRow& r : rows)
    for (const std::string& id : r.members)
      for (std::size_t i = 0; i < node_ids.size(); ++i)
        if (node_ids[i] == id) cluster_of[i] = r.cluster;
  for (std::size_t i = 0; i < node_ids.size(); ++i)
    out << node_ids[i] << "," << cluster_of[i] << "\n";
}

// ---------------------------------------------------------------------------

std::vector<SweepRun> pool_sweep(
    const ModelConfig& base, const SeriesDataset& ds, const Graph& graph,
    const std::vector<std::pair<int, int>>& settings,
    const TrainOptions& opts) {
  if (settings.empty()) throw ParameterError("pool_sweep: no settings");
  std::vector<SweepRun> runs;
  runs.reserve(settings.size());
  for (const auto& [m1, m2] : settings) {
    ModelConfig cfg = base;
    cfg.m1 = m1;
    cfg.m2 = m2;
    cfg.validate();
    TrainResult r = train_loop(cfg, ds, graph, opts);
    runs.push_back({m1, m2, std::move(r.history), r.best_val_mse});
  }
  return runs;
}

void save_sweep_csv(const std::vector<SweepRun>& runs,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  out << "setting,epoch,loss,val_mse\n";
  char buf[192];
  for (const SweepRun& run : runs) {
    const std::string tag =
        std::to_string(run.m1) + "-" + std::to_string(run.m2);
    for (const EpochRecord& r : run.history) {
      std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%.17g\n", tag.c_str(),
                    r.epoch, r.train_loss, r.val_mse);
      out << buf;
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

Graph random_sparse_graph(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double p = std::min(1.0, 8.0 / n);
  Matrix adj = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (unit(rng) < p) adj(i, j) = adj(j, i) = 0.5 + 0.5 * unit(rng);
  return Graph::make(std::move(adj));
}

std::vector<Matrix> random_frames(int count, int rows, int cols,
                                  std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Matrix> frames;
  frames.reserve(count);
  for (int k = 0; k < count; ++k) {
    Matrix f(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) f(i, j) = gauss(rng);
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace

std::vector<TimingRow> wallclock_bench(const std::vector<ModelConfig>& configs,
                                       int repetitions, std::uint64_t seed) {
  if (repetitions < 3)
    throw ParameterError("wallclock_bench: repetitions must be >= 3");
  std::vector<TimingRow> rows;
  for (const ModelConfig& cfg : configs) {
    cfg.validate();
    Graph graph = random_sparse_graph(cfg.n_nodes, seed);
    GraphContext ctx = make_graph_context(graph);
    ModelParams params = init_model(cfg, seed);
    std::mt19937_64 rng(seed + 1);
    const auto x_seq = random_frames(cfg.t_in, cfg.n_nodes, cfg.f_in, rng);
    const auto targets = random_frames(cfg.t_out, cfg.n_nodes, cfg.f_out, rng);

    std::vector<double> times;
    times.reserve(repetitions);
    for (int rep = 0; rep < repetitions; ++rep) {
      params.zero_grad();
      const auto start = std::chrono::steady_clock::now();
      Tape tape;
      BoundModel bound = bind_model(tape, params, ctx);
      EncoderState state = encode(tape, bound, x_seq);
      std::vector<Value> preds =
          decode(tape, bound, state, cfg.t_out, nullptr, 0.0, nullptr);
      Value loss = mse_loss(preds, targets);
      tape.backward(loss);
      bound.binder.harvest();
      times.push_back(std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count());
    }
    std::sort(times.begin(), times.end());
    const double median =
        repetitions % 2 == 1
            ? times[repetitions / 2]
            : 0.5 * (times[repetitions / 2 - 1] + times[repetitions / 2]);
    rows.push_back({cfg, repetitions, median});
  }
  return rows;
}

void save_timing_csv(const std::vector<TimingRow>& rows,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  out << "n,m1,m2,hidden,cheb_k,t_in,t_out,repetitions,median_seconds\n";
  char buf[192];
  for (const TimingRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%d,%d,%d,%d,%.6f\n",
                  r.config.n_nodes, r.config.m1, r.config.m2, r.config.hidden,
                  r.config.cheb_k, r.config.t_in, r.config.t_out,
                  r.repetitions, r.median_seconds);
    out << buf;
  }
}

std::vector<MemoryRow> memory_bench(const std::vector<int>& n_list,
                                    ModelConfig base,
                                    std::size_t measure_limit_floats) {
  std::vector<MemoryRow> rows;
  for (int n : n_list) {
    if (n < 8)
      throw ParameterError("memory_bench: n must be >= 8 for the 50%-25% "
                           "schedule");
    MemoryRow row;
    row.n = n;
    ModelConfig pooled = base;
    pooled.n_nodes = n;
    pooled.m1 = n / 2;
    pooled.m2 = n / 4;
    ModelConfig nopool = base;
    nopool.n_nodes = n;
    nopool.m1 = n;
    nopool.m2 = n;
    row.pooled = flop_estimate(pooled);
    row.nopool = flop_estimate(nopool);

    auto measure = [&](const ModelConfig& cfg) -> std::size_t {
      Graph graph = random_sparse_graph(n, 7);
      GraphContext ctx = make_graph_context(graph);
      ModelParams params = init_model(cfg, 7);
      std::mt19937_64 rng(11);
      const auto x_seq = random_frames(cfg.t_in, n, cfg.f_in, rng);
      Tape tape;
      forward(tape, params, ctx, x_seq);
      return tape.data_floats() * sizeof(double);
    };
    if (measure_limit_floats > 0 &&
        row.pooled.peak_activation_floats <= measure_limit_floats &&
        row.nopool.peak_activation_floats <= measure_limit_floats) {
      row.measured_pooled_bytes = measure(pooled);
      row.measured_nopool_bytes = measure(nopool);
    }
    rows.push_back(row);
  }
  return rows;
}

void save_memory_csv(const std::vector<MemoryRow>& rows,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  out << "n,pooled_activation_floats,nopool_activation_floats,"
         "pooled_recurrent_macs,nopool_recurrent_macs,"
         "pooled_setup_macs,nopool_setup_macs,"
         "measured_pooled_bytes,measured_nopool_bytes\n";
  for (const MemoryRow& r : rows) {
    out << r.n << "," << r.pooled.peak_activation_floats << ","
        << r.nopool.peak_activation_floats << "," << r.pooled.mac_count << ","
        << r.nopool.mac_count << "," << r.pooled.setup_macs << ","
        << r.nopool.setup_macs << "," << r.measured_pooled_bytes << ","
        << r.measured_nopool_bytes << "\n";
  }
}

// ---------------------------------------------------------------------------

const std::vector<BaselineErrorRow>& published_baseline_errors() {
  static const std::vector<BaselineErrorRow> rows = {
      {"ha", 13.12, 5.06, 172.19},      {"arima", 10.008, 3.745, 100.96},
      {"svr", 10.095, 4.59, 101.91},    {"lstm", 7.680, 3.75, 58.98},
      {"nopool", 7.569, 3.5599, 57.29}, {"pooled", 7.59, 3.62, 57.60},
  };
  return rows;
}

double loss_rmse_gap(const BaselineErrorRow& row) {
  return std::abs(row.loss - std::sqrt(row.mse));
}

}  // namespace stgraph
