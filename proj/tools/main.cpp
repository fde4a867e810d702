// Command-line front end: graph construction, training, prediction,
// evaluation, pooling sweeps, benchmarks and cluster inspection.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "stgraph/checkpoint.hpp"
#include "stgraph/eval.hpp"
#include "stgraph/training.hpp"

namespace fs = std::filesystem;
using namespace stgraph;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct RunConfig {
  std::string series_path;
  std::string edges_path;
  std::string dist_path;
  std::string checkpoint_path;
  std::string out_dir = ".";
  std::string mode = "gaussian";  // build-graph weighting mode
  std::string baseline;           // evaluate: extra baseline rows
  std::string settings;           // sweep: "m1:m2,m1:m2,..."
  std::string bench = "time";     // bench: time | memory
  std::string n_list = "1000,2000,3000,4000,5000,6000,7000,8000,9000,10000";
  int pool_level = 0;             // inspect-pool level

  // model
  int m1 = 0, m2 = 0;
  int hidden = 32;
  int cheb_k = 2;
  int t_in = 12, t_out = 3;

  // graph construction
  double sigma_dist = 0.0;  // 0 = derive from data
  double kappa = 0.1;

  // training
  double lr = 5e-3;
  int batch_size = 4;
  int max_epochs = 60;
  int patience = 10;
  int window_stride = 1;
  int teacher_decay_epochs = 0;
  double grad_clip = 5.0;
  std::uint64_t seed = 0;

  int ha_period = kSynthPeriodSteps;
  int repetitions = 5;
  bool verbose = false;
};

void require_file(const std::string& path, const std::string& flag) {
  if (path.empty()) throw ParameterError("missing required option " + flag);
  if (!fs::exists(path))
    throw ParameterError(flag + ": file does not exist: " + path);
}

Graph load_graph_for(const RunConfig& rc, const SeriesDataset& ds) {
  require_file(rc.edges_path, "--edges");
  return load_edges_csv(rc.edges_path, ds.node_ids);
}

ModelConfig model_config_for(const RunConfig& rc, int n_nodes) {
  ModelConfig cfg;
  cfg.n_nodes = n_nodes;
  cfg.m1 = rc.m1 > 0 ? rc.m1 : n_nodes;
  cfg.m2 = rc.m2 > 0 ? rc.m2 : n_nodes;
  cfg.hidden = rc.hidden;
  cfg.cheb_k = rc.cheb_k;
  cfg.t_in = rc.t_in;
  cfg.t_out = rc.t_out;
  cfg.validate();
  return cfg;
}

TrainOptions train_options_for(const RunConfig& rc) {
  TrainOptions opts;
  opts.adam.lr = rc.lr;
  opts.batch_size = rc.batch_size;
  opts.max_epochs = rc.max_epochs;
  opts.patience = rc.patience;
  opts.window_stride = rc.window_stride;
  opts.teacher_decay_epochs = rc.teacher_decay_epochs;
  opts.grad_clip = rc.grad_clip;
  opts.seed = rc.seed;
  opts.verbose = rc.verbose;
  return opts;
}

// Every run leaves the resolved settings beside its outputs.
void write_resolved_config(const RunConfig& rc, const std::string& command) {
  fs::create_directories(rc.out_dir);
  std::ofstream out(fs::path(rc.out_dir) / "config.resolved.txt");
  out << "command = " << command << "\n";
  out << "series = " << rc.series_path << "\n";
  out << "edges = " << rc.edges_path << "\n";
  out << "dist = " << rc.dist_path << "\n";
  out << "checkpoint = " << rc.checkpoint_path << "\n";
  out << "mode = " << rc.mode << "\n";
  out << "m1 = " << rc.m1 << "\n";
  out << "m2 = " << rc.m2 << "\n";
  out << "hidden = " << rc.hidden << "\n";
  out << "cheb_k = " << rc.cheb_k << "\n";
  out << "t_in = " << rc.t_in << "\n";
  out << "t_out = " << rc.t_out << "\n";
  out << "sigma_dist = " << rc.sigma_dist << "\n";
  out << "kappa = " << rc.kappa << "\n";
  out << "lr = " << rc.lr << "\n";
  out << "batch_size = " << rc.batch_size << "\n";
  out << "max_epochs = " << rc.max_epochs << "\n";
  out << "patience = " << rc.patience << "\n";
  out << "window_stride = " << rc.window_stride << "\n";
  out << "teacher_decay_epochs = " << rc.teacher_decay_epochs << "\n";
  out << "grad_clip = " << rc.grad_clip << "\n";
  out << "seed = " << rc.seed << "\n";
  out << "ha_period = " << rc.ha_period << "\n";
}

int cmd_build_graph(const RunConfig& rc) {
  require_file(rc.series_path, "--series");
  SeriesDataset ds = load_series_csv(rc.series_path);
  Graph graph = [&] {
    if (rc.mode == "gaussian") {
      require_file(rc.dist_path, "--dist");
      Matrix dist = load_dist_csv(rc.dist_path, ds.node_ids);
      double sigma = rc.sigma_dist;
      if (sigma <= 0.0) {
        // Standard deviation over the finite off-diagonal distances.
        std::vector<double> finite;
        for (int i = 0; i < dist.rows(); ++i)
          for (int j = i + 1; j < dist.cols(); ++j)
            if (std::isfinite(dist(i, j))) finite.push_back(dist(i, j));
        if (finite.empty())
          throw DataError("build-graph: no finite distances to derive sigma");
        double mean = 0.0;
        for (double d : finite) mean += d;
        mean /= finite.size();
        double var = 0.0;
        for (double d : finite) var += (d - mean) * (d - mean);
        sigma = std::sqrt(var / finite.size());
        if (sigma <= 0.0) sigma = 1.0;
      }
      return gaussian_weights(dist, sigma, rc.kappa, ds.node_ids);
    }
    if (rc.mode == "dual_flow") {
      Graph binary = load_graph_for(rc, ds);
      Matrix adj01 = (binary.adjacency.array() > 0.0).cast<double>();
      return dual_graph_weights(ds.values, adj01, ds.node_ids);
    }
    throw ParameterError("--mode must be 'gaussian' or 'dual_flow', got '" +
                         rc.mode + "'");
  }();

  fs::create_directories(rc.out_dir);
  const std::string out_path = (fs::path(rc.out_dir) / "graph.csv").string();
  save_edges_csv(graph, out_path);
  write_resolved_config(rc, "build-graph");

  int edges = 0;
  double total = 0.0, max_w = 0.0;
  for (int i = 0; i < graph.n(); ++i)
    for (int j = i + 1; j < graph.n(); ++j)
      if (graph.adjacency(i, j) > 0.0) {
        ++edges;
        total += graph.adjacency(i, j);
        max_w = std::max(max_w, graph.adjacency(i, j));
      }
  std::printf("nodes %d\n", graph.n());
  std::printf("edges %d\n", edges);
  std::printf("weight_total %.6f\n", total);
  std::printf("weight_mean %.6f\n", edges > 0 ? total / edges : 0.0);
  std::printf("weight_max %.6f\n", max_w);
  std::printf("wrote %s\n", out_path.c_str());
  return kExitOk;
}

int cmd_train(const RunConfig& rc) {
  require_file(rc.series_path, "--series");
  SeriesDataset ds = load_series_csv(rc.series_path);
  Graph graph = load_graph_for(rc, ds);
  ModelConfig cfg = model_config_for(rc, ds.n());
  TrainOptions opts = train_options_for(rc);

  TrainResult result = train_loop(cfg, ds, graph, opts);

  fs::create_directories(rc.out_dir);
  const auto ckpt_path = fs::path(rc.out_dir) / "checkpoint.txt";
  save_checkpoint({result.params, result.scaler}, ckpt_path.string());
  save_history_csv(result.history,
                   (fs::path(rc.out_dir) / "history.csv").string());
  write_resolved_config(rc, "train");
  std::printf("epochs %zu\n", result.history.size());
  std::printf("best_epoch %d\n", result.best_epoch);
  std::printf("best_val_mse %.6f\n", result.best_val_mse);
  std::printf("wrote %s\n", ckpt_path.c_str());
  return kExitOk;
}

int cmd_predict(const RunConfig& rc) {
  require_file(rc.series_path, "--series");
  require_file(rc.checkpoint_path, "--checkpoint");
  SeriesDataset ds = load_series_csv(rc.series_path);
  Checkpoint ckpt = load_checkpoint(rc.checkpoint_path);
  Graph graph = load_graph_for(rc, ds);
  GraphContext ctx = make_graph_context(graph);
  const ModelConfig& cfg = ckpt.params.config;
  if (ds.n() != cfg.n_nodes)
    throw ContractError("predict: series has " + std::to_string(ds.n()) +
                        " nodes but the checkpoint expects " +
                        std::to_string(cfg.n_nodes));
  if (ds.t() < cfg.t_in)
    throw DataError("predict: need at least " + std::to_string(cfg.t_in) +
                    " rows of history");

  // Forecast from the last t_in observations.
  std::vector<Matrix> x_seq;
  for (int k = ds.t() - cfg.t_in; k < ds.t(); ++k)
    x_seq.push_back(zscore_apply(ds.values.row(k).transpose(), ckpt.scaler));
  Tape tape;
  auto preds = forward(tape, ckpt.params, ctx, x_seq);

  fs::create_directories(rc.out_dir);
  const auto out_path = fs::path(rc.out_dir) / "predictions.csv";
  std::ofstream out(out_path);
  out << "step";
  for (const auto& id : ds.node_ids) out << "," << id;
  out << "\n";
  char buf[32];
  for (std::size_t k = 0; k < preds.size(); ++k) {
    Matrix denorm = zscore_invert(preds[k].data(), ckpt.scaler);
    out << (k + 1);
    for (int i = 0; i < denorm.rows(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", denorm(i, 0));
      out << "," << buf;
    }
    out << "\n";
  }
  write_resolved_config(rc, "predict");
  std::printf("wrote %s\n", out_path.c_str());
  return kExitOk;
}

int cmd_evaluate(const RunConfig& rc) {
  require_file(rc.series_path, "--series");
  require_file(rc.checkpoint_path, "--checkpoint");
  SeriesDataset ds = load_series_csv(rc.series_path);
  Checkpoint ckpt = load_checkpoint(rc.checkpoint_path);
  Graph graph = load_graph_for(rc, ds);
  GraphContext ctx = make_graph_context(graph);
  const ModelConfig& cfg = ckpt.params.config;

  // Same time split as training: evaluate on the trailing test segment.
  TrainOptions defaults;
  const int train_rows = static_cast<int>(ds.t() * defaults.train_frac);
  const int val_rows = static_cast<int>(ds.t() * defaults.val_frac);
  const int test_start = train_rows + val_rows;
  SeriesDataset test;
  test.node_ids = ds.node_ids;
  test.values = ds.values.bottomRows(ds.t() - test_start);
  auto windows = make_windows(test, cfg.t_in, cfg.t_out, 1);
  for (auto& w : windows) w.t0 += test_start;

  EvalReport report;
  report.dataset_tag = fs::path(rc.series_path).stem().string();
  append_eval(report, "model", model_predictor(ckpt.params, ctx, ckpt.scaler),
              windows);
  if (rc.baseline == "ha") {
    HaBaseline ha(ds.values.topRows(train_rows), rc.ha_period);
    append_eval(report, "ha", ha_predictor(ha, cfg.t_in), windows);
  } else if (!rc.baseline.empty()) {
    throw ParameterError("--baseline supports only 'ha', got '" + rc.baseline +
                         "'");
  }

  fs::create_directories(rc.out_dir);
  const auto out_path = fs::path(rc.out_dir) / "eval_report.csv";
  save_eval_csv(report, out_path.string());
  write_resolved_config(rc, "evaluate");
  for (const EvalRow& r : report.rows)
    if (r.horizon == 0)
      std::printf("%s mae %.6f mse %.6f rmse %.6f\n", r.name.c_str(), r.mae,
                  r.mse, r.rmse);
  std::printf("wrote %s\n", out_path.c_str());
  return kExitOk;
}

std::vector<std::pair<int, int>> parse_settings(const std::string& raw) {
  std::vector<std::pair<int, int>> settings;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ParameterError("--settings entries must be m1:m2, got '" + item +
                           "'");
    settings.emplace_back(std::stoi(item.substr(0, colon)),
                          std::stoi(item.substr(colon + 1)));
  }
  if (settings.empty()) throw ParameterError("--settings is empty");
  return settings;
}

int cmd_sweep(const RunConfig& rc) {
  require_file(rc.series_path, "--series");
  SeriesDataset ds = load_series_csv(rc.series_path);
  Graph graph = load_graph_for(rc, ds);
  ModelConfig base = model_config_for(rc, ds.n());
  TrainOptions opts = train_options_for(rc);
  auto runs = pool_sweep(base, ds, graph, parse_settings(rc.settings), opts);

  fs::create_directories(rc.out_dir);
  const auto out_path = fs::path(rc.out_dir) / "pool_sweep.csv";
  save_sweep_csv(runs, out_path.string());
  write_resolved_config(rc, "sweep");
  for (const SweepRun& run : runs)
    std::printf("%d-%d best_val_mse %.6f\n", run.m1, run.m2, run.best_val_mse);
  std::printf("wrote %s\n", out_path.c_str());
  return kExitOk;
}

std::vector<int> parse_int_list(const std::string& raw) {
  std::vector<int> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  if (out.empty()) throw ParameterError("empty list");
  return out;
}

int cmd_bench(const RunConfig& rc) {
  fs::create_directories(rc.out_dir);
  if (rc.bench == "time") {
    // Pooled halves vs no pooling at the first requested size.
    ModelConfig base;
    base.n_nodes = parse_int_list(rc.n_list).front();
    base.m1 = rc.m1 > 0 ? rc.m1 : base.n_nodes / 2;
    base.m2 = rc.m2 > 0 ? rc.m2 : base.n_nodes / 4;
    base.hidden = rc.hidden;
    base.cheb_k = rc.cheb_k;
    base.t_in = rc.t_in;
    base.t_out = rc.t_out;
    ModelConfig nopool = base;
    nopool.m1 = nopool.m2 = base.n_nodes;
    auto rows = wallclock_bench({base, nopool}, rc.repetitions, rc.seed);
    const auto out_path = fs::path(rc.out_dir) / "bench_time.csv";
    save_timing_csv(rows, out_path.string());
    write_resolved_config(rc, "bench");
    std::printf("pooled median %.4fs\n", rows[0].median_seconds);
    std::printf("nopool median %.4fs\n", rows[1].median_seconds);
    std::printf("speedup %.3f\n",
                rows[1].median_seconds / rows[0].median_seconds);
    std::printf("wrote %s\n", out_path.c_str());
    return kExitOk;
  }
  if (rc.bench == "memory") {
    ModelConfig base;
    base.hidden = rc.hidden;
    base.cheb_k = rc.cheb_k;
    base.t_in = rc.t_in;
    base.t_out = rc.t_out;
    auto rows = memory_bench(parse_int_list(rc.n_list), base);
    const auto out_path = fs::path(rc.out_dir) / "bench_memory.csv";
    save_memory_csv(rows, out_path.string());
    write_resolved_config(rc, "bench");
    for (const MemoryRow& r : rows)
      std::printf("n %d pooled_floats %llu nopool_floats %llu\n", r.n,
                  r.pooled.peak_activation_floats,
                  r.nopool.peak_activation_floats);
    std::printf("wrote %s\n", out_path.c_str());
    return kExitOk;
  }
  throw ParameterError("--bench must be 'time' or 'memory', got '" + rc.bench +
                       "'");
}

int cmd_inspect_pool(const RunConfig& rc) {
  require_file(rc.checkpoint_path, "--checkpoint");
  if (rc.pool_level != 0 && rc.pool_level != 1)
    throw ParameterError("--level must be 0 or 1");
  Checkpoint ckpt = load_checkpoint(rc.checkpoint_path);
  const PoolParams& level =
      rc.pool_level == 0 ? ckpt.params.pool0 : ckpt.params.pool1;
  const Matrix& assignment = level.assignment();

  std::vector<std::string> ids;
  if (rc.pool_level == 0) {
    for (int i = 0; i < assignment.rows(); ++i)
      ids.push_back(std::to_string(i));
    if (!rc.series_path.empty()) {
      SeriesDataset ds = load_series_csv(rc.series_path);
      if (ds.n() == assignment.rows()) ids = ds.node_ids;
    }
  } else {
    // Coarse level clusters coarse nodes.
    for (int i = 0; i < assignment.rows(); ++i)
      ids.push_back("cluster" + std::to_string(i));
  }

  fs::create_directories(rc.out_dir);
  const auto out_path = fs::path(rc.out_dir) / "clusters.csv";
  save_clusters_csv(assignment, ids, out_path.string());
  write_resolved_config(rc, "inspect-pool");
  auto rows = cluster_report(assignment, ids);
  for (const ClusterRow& r : rows) {
    std::printf("cluster %d size %zu:", r.cluster, r.members.size());
    for (const auto& m : r.members) std::printf(" %s", m.c_str());
    std::printf("\n");
  }
  std::printf("wrote %s\n", out_path.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal graph forecasting with learnable pooling"};
  app.require_subcommand(1);
  RunConfig rc;

  auto add_common = [&](CLI::App* cmd, bool need_seed) {
    cmd->set_config("--config");
    if (need_seed)
      cmd->add_option("--seed", rc.seed, "RNG seed")->required();
    else
      cmd->add_option("--seed", rc.seed, "RNG seed");
    cmd->add_option("--out", rc.out_dir, "output directory");
  };

  CLI::App* build = app.add_subcommand("build-graph", "construct edge weights");
  add_common(build, false);
  build->add_option("--series", rc.series_path, "series CSV")->required();
  build->add_option("--mode", rc.mode, "gaussian | dual_flow");
  build->add_option("--dist", rc.dist_path, "distance CSV (gaussian mode)");
  build->add_option("--edges", rc.edges_path, "edge CSV (dual_flow mode)");
  build->add_option("--sigma", rc.sigma_dist, "distance std-dev (0 = derive)");
  build->add_option("--kappa", rc.kappa, "sparsity threshold");

  auto add_model_opts = [&](CLI::App* cmd) {
    cmd->add_option("--m1", rc.m1, "first pooling size (0 = no pooling)");
    cmd->add_option("--m2", rc.m2, "second pooling size (0 = no pooling)");
    cmd->add_option("--hidden", rc.hidden, "hidden width");
    cmd->add_option("--cheb-k", rc.cheb_k, "Chebyshev order");
    cmd->add_option("--t-in", rc.t_in, "input horizon");
    cmd->add_option("--t-out", rc.t_out, "output horizon");
  };
  auto add_train_opts = [&](CLI::App* cmd) {
    cmd->add_option("--lr", rc.lr, "learning rate");
    cmd->add_option("--batch-size", rc.batch_size, "windows per batch");
    cmd->add_option("--max-epochs", rc.max_epochs, "epoch budget");
    cmd->add_option("--patience", rc.patience, "early stopping patience");
    cmd->add_option("--stride", rc.window_stride, "training window stride");
    cmd->add_option("--teacher-decay", rc.teacher_decay_epochs,
                    "epochs to decay teacher forcing (0 = full run)");
    cmd->add_option("--grad-clip", rc.grad_clip, "gradient norm clip");
    cmd->add_flag("--verbose", rc.verbose, "per-epoch log lines");
  };

  CLI::App* train = app.add_subcommand("train", "fit a model");
  add_common(train, true);
  train->add_option("--series", rc.series_path, "series CSV")->required();
  train->add_option("--edges", rc.edges_path, "edge CSV")->required();
  add_model_opts(train);
  add_train_opts(train);

  CLI::App* predict = app.add_subcommand("predict", "forecast from history");
  add_common(predict, false);
  predict->add_option("--series", rc.series_path, "series CSV")->required();
  predict->add_option("--edges", rc.edges_path, "edge CSV")->required();
  predict->add_option("--checkpoint", rc.checkpoint_path, "checkpoint")
      ->required();

  CLI::App* evaluate = app.add_subcommand("evaluate", "test-set metrics");
  add_common(evaluate, false);
  evaluate->add_option("--series", rc.series_path, "series CSV")->required();
  evaluate->add_option("--edges", rc.edges_path, "edge CSV")->required();
  evaluate->add_option("--checkpoint", rc.checkpoint_path, "checkpoint")
      ->required();
  evaluate->add_option("--baseline", rc.baseline, "extra baseline row (ha)");
  evaluate->add_option("--ha-period", rc.ha_period, "HA period in steps");

  CLI::App* sweep = app.add_subcommand("sweep", "compare pooling sizes");
  add_common(sweep, true);
  sweep->add_option("--series", rc.series_path, "series CSV")->required();
  sweep->add_option("--edges", rc.edges_path, "edge CSV")->required();
  sweep->add_option("--settings", rc.settings, "comma list of m1:m2")
      ->required();
  add_model_opts(sweep);
  add_train_opts(sweep);

  CLI::App* bench = app.add_subcommand("bench", "timing / memory benches");
  add_common(bench, true);
  bench->add_option("--bench", rc.bench, "time | memory");
  bench->add_option("--n-list", rc.n_list, "graph sizes");
  bench->add_option("--repetitions", rc.repetitions, "timing repetitions");
  add_model_opts(bench);

  CLI::App* inspect = app.add_subcommand("inspect-pool", "cluster membership");
  add_common(inspect, false);
  inspect->add_option("--checkpoint", rc.checkpoint_path, "checkpoint")
      ->required();
  inspect->add_option("--level", rc.pool_level, "pooling level (0 or 1)");
  inspect->add_option("--series", rc.series_path, "series CSV for node ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*build) return cmd_build_graph(rc);
    if (*train) return cmd_train(rc);
    if (*predict) return cmd_predict(rc);
    if (*evaluate) return cmd_evaluate(rc);
    if (*sweep) return cmd_sweep(rc);
    if (*bench) return cmd_bench(rc);
    if (*inspect) return cmd_inspect_pool(rc);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  } catch (const stgraph::Error& e) {
    // Configuration, file and contract problems are usage errors.
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
