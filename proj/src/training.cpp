#include "stgraph/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace stgraph {

Scaler zscore_fit(const Matrix& train_values) {
  if (train_values.size() == 0)
    throw DataError("zscore_fit: empty training data");
  Scaler s;
  s.mean = train_values.mean();
  const double var = (train_values.array() - s.mean).square().mean();
  s.std_dev = var > 0.0 ? std::sqrt(var) : 1.0;
  return s;
}

Matrix zscore_apply(const Matrix& x, const Scaler& s) {
  return (x.array() - s.mean) / s.std_dev;
}

Matrix zscore_invert(const Matrix& x, const Scaler& s) {
  return (x.array() * s.std_dev) + s.mean;
}

void MetricAccumulator::add(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ContractError("metrics: prediction " + shape_str(pred) +
                        " vs target " + shape_str(target));
  abs_sum_ += (pred - target).array().abs().sum();
  sq_sum_ += (pred - target).array().square().sum();
  count_ += pred.size();
}

MetricSummary MetricAccumulator::summary() const {
  if (count_ == 0) throw DataError("metrics: no observations");
  MetricSummary m;
  m.mae = abs_sum_ / count_;
  m.mse = sq_sum_ / count_;
  m.rmse = std::sqrt(m.mse);
  return m;
}

MetricSummary metrics(const std::vector<double>& pred,
                      const std::vector<double>& target) {
  if (pred.size() != target.size())
    throw ContractError("metrics: " + std::to_string(pred.size()) +
                        " predictions vs " + std::to_string(target.size()) +
                        " targets");
  if (pred.empty()) throw DataError("metrics: no observations");
  MetricAccumulator acc;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    acc.add(Matrix::Constant(1, 1, pred[i]), Matrix::Constant(1, 1, target[i]));
  }
  return acc.summary();
}

Value mse_loss(const std::vector<Value>& pred_seq,
               const std::vector<Matrix>& target_seq) {
  if (pred_seq.empty())
    throw ContractError("mse_loss: empty prediction sequence");
  if (pred_seq.size() != target_seq.size())
    throw ShapeError("mse_loss: " + std::to_string(pred_seq.size()) +
                     " predictions vs " + std::to_string(target_seq.size()) +
                     " targets");
  Tape& tape = pred_seq.front().tape();
  Value total;
  long long count = 0;
  for (std::size_t k = 0; k < pred_seq.size(); ++k) {
    const Value& p = pred_seq[k];
    const Matrix& t = target_seq[k];
    if (p.rows() != t.rows() || p.cols() != t.cols())
      throw ShapeError("mse_loss: step " + std::to_string(k) +
                       " prediction " + shape_str(p.data()) + " vs target " +
                       shape_str(t));
    Value diff = sub(p, tape.constant(t));
    Value sq = sum(hadamard(diff, diff));
    total = k == 0 ? sq : add(total, sq);
    count += t.size();
  }
  return scale(total, 1.0 / static_cast<double>(count));
}

AdamState::AdamState(const std::vector<Param*>& params, AdamOptions opts)
    : opts_(opts) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Param* p : params) {
    m_.push_back(Matrix::Zero(p->rows(), p->cols()));
    v_.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
}

void AdamState::step(const std::vector<Param*>& params) {
  if (params.size() != m_.size())
    throw ContractError("AdamState: parameter list changed size");
  ++step_count_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, step_count_);
  const double bc2 = 1.0 - std::pow(opts_.beta2, step_count_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    if (p.grad.hasNaN())
      throw NumericError("adam_step: NaN gradient in parameter " + p.name);
    m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * p.grad;
    v_[i] = opts_.beta2 * v_[i] +
            (1.0 - opts_.beta2) * p.grad.cwiseProduct(p.grad);
    const Matrix m_hat = m_[i] / bc1;
    const Matrix v_hat = v_[i] / bc2;
    p.value.array() -=
        opts_.lr * m_hat.array() / (v_hat.array().sqrt() + opts_.eps);
  }
}

std::size_t peak_rss_bytes() {
#ifdef __linux__
  std::ifstream status("/proc/self/status");
  std::string key;
  while (status >> key) {
    if (key == "VmHWM:") {
      std::size_t kb = 0;
      status >> kb;
      return kb * 1024;
    }
    status.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  }
#endif
  return 0;
}

namespace {

struct SplitWindows {
  std::vector<WindowSample> train, val, test;
  int train_rows = 0, val_rows = 0, test_rows = 0;
};

SeriesDataset slice_rows(const SeriesDataset& ds, int begin, int rows) {
  SeriesDataset out;
  out.node_ids = ds.node_ids;
  out.interval_minutes = ds.interval_minutes;
  out.values = ds.values.middleRows(begin, rows);
  for (int i = 0; i < rows; ++i)
    out.timestamps.push_back(ds.timestamps.empty()
                                 ? std::to_string(begin + i)
                                 : ds.timestamps[begin + i]);
  return out;
}

// Windows are cut inside each time segment so no sample crosses a split
// boundary. t0 is shifted back to the absolute series index.
SplitWindows split_dataset(const SeriesDataset& ds, const ModelConfig& cfg,
                           const TrainOptions& opts) {
  const int t = ds.t();
  SplitWindows sw;
  sw.train_rows = static_cast<int>(t * opts.train_frac);
  sw.val_rows = static_cast<int>(t * opts.val_frac);
  sw.test_rows = t - sw.train_rows - sw.val_rows;
  const int need = cfg.t_in + cfg.t_out;
  if (sw.train_rows < need || sw.val_rows < need || sw.test_rows < need)
    throw DataError("train_loop: series too short for the requested splits");

  auto cut = [&](int begin, int rows, int stride) {
    auto windows =
        make_windows(slice_rows(ds, begin, rows), cfg.t_in, cfg.t_out, stride);
    for (auto& w : windows) w.t0 += begin;
    return windows;
  };
  sw.train = cut(0, sw.train_rows, opts.window_stride);
  sw.val = cut(sw.train_rows, sw.val_rows, 1);
  sw.test = cut(sw.train_rows + sw.val_rows, sw.test_rows, 1);
  return sw;
}

std::vector<Matrix> normalize_frames(const std::vector<Matrix>& frames,
                                     const Scaler& s) {
  std::vector<Matrix> out;
  out.reserve(frames.size());
  for (const Matrix& f : frames) out.push_back(zscore_apply(f, s));
  return out;
}

}  // namespace

TrainResult train_loop(const ModelConfig& config, const SeriesDataset& ds,
                       const Graph& graph, const TrainOptions& opts) {
  config.validate();
  if (ds.n() != config.n_nodes)
    throw ContractError("train_loop: dataset has " + std::to_string(ds.n()) +
                        " nodes but config expects " +
                        std::to_string(config.n_nodes));
  if (opts.train_frac <= 0.0 || opts.val_frac <= 0.0 ||
      opts.train_frac + opts.val_frac >= 1.0)
    throw ParameterError("train_loop: split fractions must be positive and "
                         "leave room for a test segment");
  if (opts.batch_size < 1 || opts.max_epochs < 1 || opts.patience < 1)
    throw ParameterError("train_loop: batch_size, max_epochs and patience "
                         "must be >= 1");

  SplitWindows sw = split_dataset(ds, config, opts);
  const Scaler scaler = zscore_fit(ds.values.topRows(sw.train_rows));
  GraphContext ctx = make_graph_context(graph);

  ModelParams params = init_model(config, opts.seed);
  std::vector<Param*> plist = params.parameters();
  AdamState adam(plist, opts.adam);
  std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainResult result;
  result.scaler = scaler;
  result.train_rows = sw.train_rows;
  result.val_rows = sw.val_rows;
  result.test_rows = sw.test_rows;
  result.params = params;
  result.best_val_mse = std::numeric_limits<double>::infinity();

  std::vector<int> order(sw.train.size());
  std::iota(order.begin(), order.end(), 0);

  int epochs_since_best = 0;
  for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const int decay_span =
        opts.teacher_decay_epochs > 0 ? opts.teacher_decay_epochs
                                      : opts.max_epochs;
    const double teacher_ratio =
        decay_span > 1
            ? std::max(0.0, 1.0 - static_cast<double>(epoch) / (decay_span - 1))
            : 0.0;
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    long long loss_count = 0;
    for (std::size_t base = 0; base < order.size();
         base += static_cast<std::size_t>(opts.batch_size)) {
      const std::size_t end =
          std::min(order.size(), base + static_cast<std::size_t>(opts.batch_size));
      params.zero_grad();
      for (std::size_t s = base; s < end; ++s) {
        const WindowSample& w = sw.train[order[s]];
        Tape tape;
        BoundModel bound = bind_model(tape, params, ctx);
        EncoderState state = encode(tape, bound, normalize_frames(w.x, scaler));
        const std::vector<Matrix> targets = normalize_frames(w.y, scaler);
        std::vector<Value> preds = decode(tape, bound, state, config.t_out,
                                          &targets, teacher_ratio, &rng);
        Value loss = mse_loss(preds, targets);
        const double loss_val = loss.data()(0, 0);
        if (!std::isfinite(loss_val))
          throw NumericError("train_loop: loss diverged (" +
                             std::to_string(loss_val) + ") at epoch " +
                             std::to_string(epoch));
        loss_sum += loss_val;
        ++loss_count;
        tape.backward(loss);
        bound.binder.harvest();
      }
      const double inv = 1.0 / static_cast<double>(end - base);
      for (Param* p : plist) p->grad *= inv;
      if (opts.grad_clip > 0.0) {
        double sq = 0.0;
        for (const Param* p : plist) sq += p->grad.squaredNorm();
        const double norm = std::sqrt(sq);
        if (norm > opts.grad_clip) {
          const double shrink = opts.grad_clip / norm;
          for (Param* p : plist) p->grad *= shrink;
        }
      }
      adam.step(plist);
    }

    // Validation with teacher forcing off, metrics on denormalized values.
    MetricAccumulator val_acc;
    for (const WindowSample& w : sw.val) {
      Tape tape;
      std::vector<Value> preds =
          forward(tape, params, ctx, normalize_frames(w.x, scaler));
      for (std::size_t k = 0; k < preds.size(); ++k)
        val_acc.add(zscore_invert(preds[k].data(), scaler), w.y[k]);
    }
    const MetricSummary val = val_acc.summary();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
    rec.val_mae = val.mae;
    rec.val_mse = val.mse;
    rec.val_rmse = val.rmse;
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - epoch_start)
                      .count();
    rec.peak_mem_bytes = peak_rss_bytes();
    result.history.push_back(rec);
    if (opts.verbose)
      std::fprintf(stderr,
                   "epoch %3d  loss %.6f  val_mae %.6f  val_mse %.6f  %.2fs\n",
                   epoch, rec.train_loss, rec.val_mae, rec.val_mse,
                   rec.seconds);

    if (val.mse < result.best_val_mse) {
      result.best_val_mse = val.mse;
      result.best_epoch = epoch;
      result.params = params;
      epochs_since_best = 0;
    } else if (++epochs_since_best >= opts.patience) {
      break;
    }
  }
  return result;
}

void save_history_csv(const std::vector<EpochRecord>& history,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  out << "epoch,train_loss,val_mae,val_mse,val_rmse,seconds,peak_mem_bytes\n";
  char buf[256];
  for (const EpochRecord& r : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.3f,%zu\n",
                  r.epoch, r.train_loss, r.val_mae, r.val_mse, r.val_rmse,
                  r.seconds, r.peak_mem_bytes);
    out << buf;
  }
}

}  // namespace stgraph
