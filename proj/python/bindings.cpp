// Python bindings for the core operations: graph construction, spectral
// utilities, the forecaster, baselines and the cost model.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "stgraph/checkpoint.hpp"
#include "stgraph/eval.hpp"
#include "stgraph/training.hpp"

namespace py = pybind11;
using namespace stgraph;

namespace {

// Trained model plus everything needed to run it on new data.
class Forecaster {
 public:
  Forecaster(ModelParams params, Scaler scaler, Graph graph,
             std::vector<EpochRecord> history)
      : params_(std::move(params)),
        scaler_(scaler),
        graph_(std::move(graph)),
        ctx_(make_graph_context(graph_)),
        history_(std::move(history)) {}

  static Forecaster fit(const Matrix& values,
                        const std::vector<std::string>& node_ids,
                        const Graph& graph, ModelConfig config,
                        const TrainOptions& opts) {
    SeriesDataset ds;
    ds.values = values;
    ds.node_ids =
        node_ids.empty() ? graph.node_ids : node_ids;
    for (int i = 0; i < ds.t(); ++i) ds.timestamps.push_back(std::to_string(i));
    config.n_nodes = ds.n();
    TrainResult r = train_loop(config, ds, graph, opts);
    return Forecaster(std::move(r.params), r.scaler, graph,
                      std::move(r.history));
  }

  Matrix predict(const Matrix& history) {
    const ModelConfig& cfg = params_.config;
    if (history.cols() != cfg.n_nodes)
      throw ShapeError("predict: history has " +
                       std::to_string(history.cols()) + " nodes, expected " +
                       std::to_string(cfg.n_nodes));
    if (history.rows() < cfg.t_in)
      throw ContractError("predict: need at least " +
                          std::to_string(cfg.t_in) + " rows of history");
    std::vector<Matrix> x_seq;
    for (int k = static_cast<int>(history.rows()) - cfg.t_in;
         k < history.rows(); ++k)
      x_seq.push_back(zscore_apply(history.row(k).transpose(), scaler_));
    Tape tape;
    auto preds = forward(tape, params_, ctx_, x_seq);
    Matrix out(static_cast<int>(preds.size()), cfg.n_nodes);
    for (std::size_t k = 0; k < preds.size(); ++k)
      out.row(k) = zscore_invert(preds[k].data(), scaler_).transpose();
    return out;
  }

  Eigen::VectorXi cluster_assignments(int level) const {
    const PoolParams& pool = level == 0 ? params_.pool0 : params_.pool1;
    if (level != 0 && level != 1)
      throw ParameterError("level must be 0 or 1");
    const Matrix& p = pool.assignment();
    Eigen::VectorXi out(p.rows());
    for (int i = 0; i < p.rows(); ++i) {
      int best = 0;
      for (int c = 1; c < p.cols(); ++c)
        if (p(i, c) > p(i, best)) best = c;
      out(i) = best;
    }
    return out;
  }

  Matrix assignment_matrix(int level) const {
    if (level != 0 && level != 1)
      throw ParameterError("level must be 0 or 1");
    return (level == 0 ? params_.pool0 : params_.pool1).assignment();
  }

  void save(const std::string& path) const {
    save_checkpoint({params_, scaler_}, path);
  }

  static Forecaster load(const std::string& path, const Graph& graph) {
    Checkpoint ckpt = load_checkpoint(path);
    return Forecaster(std::move(ckpt.params), ckpt.scaler, graph, {});
  }

  const ModelConfig& config() const { return params_.config; }
  const std::vector<EpochRecord>& history() const { return history_; }
  const Scaler& scaler() const { return scaler_; }

 private:
  ModelParams params_;
  Scaler scaler_;
  Graph graph_;
  GraphContext ctx_;
  std::vector<EpochRecord> history_;
};

std::vector<Matrix> cheb_apply(const Matrix& scaled_lap, const Matrix& x,
                               int order) {
  Tape tape;
  auto terms =
      cheb_polynomials(tape.constant(scaled_lap), tape.constant(x), order);
  std::vector<Matrix> out;
  out.reserve(terms.size());
  for (const Value& v : terms) out.push_back(v.data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spatio-temporal graph forecasting with learnable pooling";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<Graph>(m, "Graph")
      .def(py::init([](const Matrix& adjacency,
                       std::vector<std::string> node_ids) {
             return Graph::make(adjacency, std::move(node_ids));
           }),
           py::arg("adjacency"),
           py::arg("node_ids") = std::vector<std::string>{})
      .def_property_readonly(
          "adjacency", [](const Graph& g) { return g.adjacency; })
      .def_property_readonly("node_ids",
                             [](const Graph& g) { return g.node_ids; })
      .def_property_readonly("n", &Graph::n);

  m.def("gaussian_weights", &gaussian_weights, py::arg("dist"),
        py::arg("sigma_dist"), py::arg("kappa") = 0.1,
        py::arg("node_ids") = std::vector<std::string>{},
        "Gaussian distance kernel weights with sparsity threshold");
  m.def("dual_graph_weights", &dual_graph_weights, py::arg("flows"),
        py::arg("adj01"), py::arg("node_ids") = std::vector<std::string>{},
        "Flow-proportional dual-graph edge weights (total weight 1)");
  m.def(
      "scaled_laplacian",
      [](const Graph& g, bool estimate) {
        return scaled_laplacian(g, estimate).scaled_laplacian;
      },
      py::arg("graph"), py::arg("estimate_lambda_max") = false,
      "Scaled Laplacian with spectrum in [-1, 1]");
  m.def("normalized_adjacency", &normalized_adjacency, py::arg("graph"));
  m.def("cheb_apply", &cheb_apply, py::arg("scaled_laplacian"), py::arg("x"),
        py::arg("order"), "Chebyshev basis terms [T0 x, ..., T_{K-1} x]");

  m.def(
      "synth_diffusion",
      [](int n, int t, std::uint64_t seed, double noise_sigma) {
        auto [ds, g] = synth_diffusion(n, t, seed, noise_sigma);
        return py::make_tuple(ds.values, g);
      },
      py::arg("n"), py::arg("t"), py::arg("seed"),
      py::arg("noise_sigma") = 0.05,
      "Synthetic benchmark series (T x N) and its graph");

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("n_nodes", &ModelConfig::n_nodes)
      .def_readwrite("m1", &ModelConfig::m1)
      .def_readwrite("m2", &ModelConfig::m2)
      .def_readwrite("f_in", &ModelConfig::f_in)
      .def_readwrite("f_out", &ModelConfig::f_out)
      .def_readwrite("hidden", &ModelConfig::hidden)
      .def_readwrite("cheb_k", &ModelConfig::cheb_k)
      .def_readwrite("t_in", &ModelConfig::t_in)
      .def_readwrite("t_out", &ModelConfig::t_out)
      .def("pooling_enabled", &ModelConfig::pooling_enabled)
      .def("validate", &ModelConfig::validate);

  py::class_<TrainOptions>(m, "TrainOptions")
      .def(py::init<>())
      .def_readwrite("batch_size", &TrainOptions::batch_size)
      .def_readwrite("max_epochs", &TrainOptions::max_epochs)
      .def_readwrite("patience", &TrainOptions::patience)
      .def_readwrite("window_stride", &TrainOptions::window_stride)
      .def_readwrite("teacher_decay_epochs", &TrainOptions::teacher_decay_epochs)
      .def_readwrite("grad_clip", &TrainOptions::grad_clip)
      .def_readwrite("seed", &TrainOptions::seed)
      .def_readwrite("verbose", &TrainOptions::verbose)
      .def_property(
          "lr", [](const TrainOptions& o) { return o.adam.lr; },
          [](TrainOptions& o, double v) { o.adam.lr = v; });

  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("train_loss", &EpochRecord::train_loss)
      .def_readonly("val_mae", &EpochRecord::val_mae)
      .def_readonly("val_mse", &EpochRecord::val_mse)
      .def_readonly("val_rmse", &EpochRecord::val_rmse)
      .def_readonly("seconds", &EpochRecord::seconds);

  py::class_<Scaler>(m, "Scaler")
      .def_readonly("mean", &Scaler::mean)
      .def_readonly("std", &Scaler::std_dev);

  py::class_<Forecaster>(m, "Forecaster")
      .def_static("fit", &Forecaster::fit, py::arg("values"),
                  py::arg("node_ids"), py::arg("graph"), py::arg("config"),
                  py::arg("options") = TrainOptions{},
                  "Train on a T x N series; time-ordered split")
      .def("predict", &Forecaster::predict, py::arg("history"),
           "Forecast t_out steps from the last t_in rows; returns t_out x N")
      .def("cluster_assignments", &Forecaster::cluster_assignments,
           py::arg("level") = 0)
      .def("assignment_matrix", &Forecaster::assignment_matrix,
           py::arg("level") = 0)
      .def("save", &Forecaster::save, py::arg("path"))
      .def_static("load", &Forecaster::load, py::arg("path"), py::arg("graph"))
      .def_property_readonly("config", &Forecaster::config)
      .def_property_readonly("scaler", &Forecaster::scaler)
      .def_property_readonly("history", &Forecaster::history);

  m.def(
      "ha_forecast",
      [](const Matrix& train, int period, const std::vector<int>& times) {
        HaBaseline ha(train, period);
        Matrix out(static_cast<int>(times.size()), train.cols());
        for (std::size_t i = 0; i < times.size(); ++i)
          out.row(i) = ha.predict(times[i]).transpose();
        return out;
      },
      py::arg("train"), py::arg("period"), py::arg("times"),
      "Historical-average forecast for absolute time indices");

  m.def(
      "metrics",
      [](const std::vector<double>& pred, const std::vector<double>& target) {
        MetricSummary s = metrics(pred, target);
        return py::make_tuple(s.mae, s.mse, s.rmse);
      },
      py::arg("pred"), py::arg("target"), "(MAE, MSE, RMSE)");

  m.def(
      "flop_estimate",
      [](const ModelConfig& cfg) {
        CostEstimate est = flop_estimate(cfg);
        py::dict d;
        d["mac_count"] = est.mac_count;
        d["setup_macs"] = est.setup_macs;
        d["peak_activation_floats"] = est.peak_activation_floats;
        return d;
      },
      py::arg("config"), "Analytic per-window cost of one forward pass");
}
