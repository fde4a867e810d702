#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stgraph/eval.hpp"
#include "stgraph/training.hpp"

using namespace stgraph;

TEST_SUITE_BEGIN("training");

TEST_CASE("z-score statistics and round trip") {
  Matrix constant = Matrix::Constant(3, 3, 4.0);
  Scaler s1 = zscore_fit(constant);
  CHECK(s1.std_dev == 1.0);
  CHECK((zscore_apply(constant, s1).array()).abs().maxCoeff() == 0.0);

  Matrix two(2, 1);
  two << 0.0, 2.0;
  Scaler s2 = zscore_fit(two);
  CHECK(s2.mean == 1.0);
  CHECK(s2.std_dev == 1.0);
  CHECK(zscore_apply(Matrix::Constant(1, 1, 2.0), s2)(0, 0) == 1.0);

  std::mt19937_64 rng(3);
  Matrix data = oracles::random_matrix(5, 7, rng, 12.0);
  Scaler s3 = zscore_fit(data);
  Matrix round = zscore_invert(zscore_apply(data, s3), s3);
  CHECK((round - data).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(zscore_fit(Matrix()), DataError);
}

TEST_CASE("error metrics") {
  MetricSummary zero = metrics({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0});
  CHECK(zero.mae == 0.0);
  CHECK(zero.mse == 0.0);
  CHECK(zero.rmse == 0.0);

  MetricSummary m = metrics({3.0, -4.0}, {0.0, 0.0});
  CHECK(m.mae == doctest::Approx(3.5));
  CHECK(m.mse == doctest::Approx(12.5));
  CHECK(m.rmse == doctest::Approx(std::sqrt(12.5)));

  CHECK_THROWS_AS(metrics({1.0}, {1.0, 2.0}), ContractError);
  CHECK_THROWS_AS(metrics({}, {}), DataError);
}

TEST_CASE("rmse squared equals mse for random inputs") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-20.0, 20.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> pred(50), target(50);
    for (int i = 0; i < 50; ++i) {
      pred[i] = dist(rng);
      target[i] = dist(rng);
    }
    MetricSummary m = metrics(pred, target);
    CHECK(std::abs(m.rmse * m.rmse - m.mse) < 1e-12 * std::max(1.0, m.mse));
  }
}

TEST_CASE("published error rows are self-consistent where computable") {
  // The three rows whose loss column reproduces sqrt(MSE) to publication
  // rounding.
  const struct {
    double loss, mse;
  } rows[] = {{7.59, 57.60}, {7.680, 58.98}, {13.12, 172.19}};
  for (const auto& r : rows)
    CHECK(std::abs(r.loss - std::sqrt(r.mse)) <= 0.02);
}

TEST_CASE("mse loss values and gradient") {
  Tape tape;
  std::vector<Matrix> targets = {Matrix::Zero(2, 2)};
  std::vector<Value> same = {tape.constant(Matrix::Zero(2, 2))};
  CHECK(mse_loss(same, targets).data()(0, 0) == 0.0);

  std::vector<Value> ones = {tape.constant(Matrix::Ones(2, 2))};
  CHECK(mse_loss(ones, targets).data()(0, 0) == doctest::Approx(1.0));

  std::mt19937_64 rng(7);
  Matrix p = oracles::random_matrix(3, 2, rng);
  std::vector<Matrix> t = {oracles::random_matrix(3, 2, rng)};
  Tape t2;
  Value vp = t2.leaf(p);
  t2.backward(mse_loss({vp}, t));
  Matrix expected = 2.0 * (p - t[0]) / 6.0;
  CHECK((vp.grad() - expected).cwiseAbs().maxCoeff() < 1e-14);

  auto loss = [&] {
    Tape tp;
    return mse_loss({tp.constant(p)}, t).data()(0, 0);
  };
  auto rep = oracles::fd_compare({{&p, &vp.grad()}}, loss);
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("first adam step moves parameters by about the learning rate") {
  std::mt19937_64 rng(9);
  Param p = make_param("p", 3, 3, rng);
  const Matrix before = p.value;
  p.grad = oracles::random_matrix(3, 3, rng, 5.0);
  p.grad.array() += p.grad.array().sign() * 1.0;  // keep |g| well above eps

  AdamOptions opts;
  std::vector<Param*> plist = {&p};
  AdamState adam(plist, opts);
  adam.step(plist);
  const Matrix delta = (p.value - before).cwiseAbs();
  CHECK(delta.minCoeff() >= 0.9 * opts.lr);
  CHECK(delta.maxCoeff() <= opts.lr * (1.0 + 1e-6));
}

TEST_CASE("zero gradients leave parameters unchanged") {
  std::mt19937_64 rng(11);
  Param p = make_param("p", 2, 4, rng);
  const Matrix before = p.value;
  std::vector<Param*> plist = {&p};
  AdamState adam(plist, AdamOptions{});
  adam.step(plist);
  CHECK((p.value - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nan gradients abort with the parameter name") {
  std::mt19937_64 rng(13);
  Param p = make_param("enc.theta", 2, 2, rng);
  p.grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  std::vector<Param*> plist = {&p};
  AdamState adam(plist, AdamOptions{});
  CHECK_THROWS_WITH_AS(adam.step(plist), doctest::Contains("enc.theta"),
                       NumericError);
}

namespace {

TrainOptions quick_options(std::uint64_t seed, int epochs) {
  TrainOptions opts;
  opts.seed = seed;
  opts.max_epochs = epochs;
  opts.patience = epochs;
  opts.batch_size = 8;
  opts.window_stride = 2;
  return opts;
}

ModelConfig small_synth_config(int n) {
  ModelConfig cfg;
  cfg.n_nodes = n;
  cfg.m1 = n / 2;
  cfg.m2 = n / 4;
  cfg.hidden = 10;
  cfg.cheb_k = 2;
  cfg.t_in = 6;
  cfg.t_out = 2;
  return cfg;
}

}  // namespace

TEST_CASE("identical seeds reproduce the training history bitwise") {
  auto [ds, g] = synth_diffusion(8, 320, 17);
  ModelConfig cfg = small_synth_config(8);
  TrainOptions opts = quick_options(23, 3);
  TrainResult r1 = train_loop(cfg, ds, g, opts);
  TrainResult r2 = train_loop(cfg, ds, g, opts);
  REQUIRE(r1.history.size() == r2.history.size());
  for (std::size_t i = 0; i < r1.history.size(); ++i) {
    CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
    CHECK(r1.history[i].val_mse == r2.history[i].val_mse);
  }
  auto p1 = r1.params.parameters();
  auto p2 = r2.params.parameters();
  for (std::size_t i = 0; i < p1.size(); ++i)
    CHECK((p1[i]->value - p2[i]->value).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("early stopping returns the best validation epoch") {
  auto [ds, g] = synth_diffusion(8, 320, 19);
  ModelConfig cfg = small_synth_config(8);
  TrainOptions opts = quick_options(29, 6);
  opts.patience = 2;
  TrainResult r = train_loop(cfg, ds, g, opts);
  REQUIRE(!r.history.empty());
  double best = std::numeric_limits<double>::infinity();
  for (const EpochRecord& rec : r.history) best = std::min(best, rec.val_mse);
  CHECK(r.best_val_mse == best);
  CHECK(r.history[r.best_epoch].val_mse == best);
}

TEST_CASE("training beats the historical average on the synthetic set") {
  const int n = 12;
  auto [ds, g] = synth_diffusion(n, 1200, 31);
  ModelConfig cfg = small_synth_config(n);
  cfg.t_in = 12;
  cfg.hidden = 16;
  TrainOptions opts = quick_options(37, 14);
  opts.patience = 14;
  opts.adam.lr = 1e-2;
  opts.teacher_decay_epochs = 6;
  TrainResult r = train_loop(cfg, ds, g, opts);

  // HA baseline evaluated on the same validation windows.
  HaBaseline ha(ds.values.topRows(r.train_rows));
  SeriesDataset val_slice;
  val_slice.node_ids = ds.node_ids;
  val_slice.values = ds.values.middleRows(r.train_rows, r.val_rows);
  auto val_windows = make_windows(val_slice, cfg.t_in, cfg.t_out, 1);
  for (auto& w : val_windows) w.t0 += r.train_rows;

  MetricAccumulator acc;
  for (const auto& w : val_windows)
    for (std::size_t k = 0; k < w.y.size(); ++k)
      acc.add(ha.predict(w.t0 + cfg.t_in + static_cast<int>(k)), w.y[k]);
  const double ha_mse = acc.summary().mse;
  CHECK(r.best_val_mse < ha_mse);
}

TEST_CASE("a non-finite loss aborts with a numeric error") {
  auto [ds, g] = synth_diffusion(8, 320, 41);
  ds.values(10, 3) = std::numeric_limits<double>::infinity();
  ModelConfig cfg = small_synth_config(8);
  TrainOptions opts = quick_options(43, 3);
  CHECK_THROWS_AS(train_loop(cfg, ds, g, opts), NumericError);
}

TEST_SUITE_END();
