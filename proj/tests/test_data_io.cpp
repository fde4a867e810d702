#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "stgraph/data_io.hpp"

using namespace stgraph;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("data_io");

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("stgraph_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static inline int counter = 0;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("series csv round trip") {
  TempDir dir;
  const std::string path = dir.file("series.csv");
  write_file(path,
             "timestamp,a,b\n"
             "t0,1.5,2\n"
             "t1,3,4.25\n"
             "t2,5,6\n");
  SeriesDataset ds = load_series_csv(path);
  CHECK(ds.t() == 3);
  CHECK(ds.n() == 2);
  CHECK(ds.node_ids == std::vector<std::string>{"a", "b"});
  CHECK(ds.values(0, 0) == 1.5);
  CHECK(ds.values(2, 1) == 6.0);

  const std::string copy = dir.file("copy.csv");
  save_series_csv(ds, copy);
  SeriesDataset again = load_series_csv(copy);
  CHECK((again.values - ds.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(again.timestamps == ds.timestamps);
}

TEST_CASE("missing cells impute forward-fill with column-mean lead-in") {
  TempDir dir;
  const std::string path = dir.file("gaps.csv");
  write_file(path,
             "timestamp,a,b\n"
             "0,,2\n"
             "1,4,\n"
             "2,6,8\n");
  SeriesDataset ds = load_series_csv(path);
  CHECK(ds.values(0, 0) == 5.0);  // leading gap → mean of {4, 6}
  CHECK(ds.values(1, 1) == 2.0);  // forward fill
}

TEST_CASE("series csv parse errors carry line numbers") {
  TempDir dir;
  const std::string ragged = dir.file("ragged.csv");
  write_file(ragged, "timestamp,a,b\n0,1,2\n1,3\n");
  CHECK_THROWS_WITH_AS(load_series_csv(ragged), doctest::Contains(":3"),
                       ParseError);

  const std::string bad = dir.file("bad.csv");
  write_file(bad, "timestamp,a\n0,xyz\n");
  CHECK_THROWS_AS(load_series_csv(bad), ParseError);

  const std::string dup = dir.file("dup.csv");
  write_file(dup, "timestamp,a,a\n0,1,2\n");
  CHECK_THROWS_AS(load_series_csv(dup), ParseError);
}

TEST_CASE("edges csv mirrors undirected edges") {
  TempDir dir;
  const std::string path = dir.file("edges.csv");
  write_file(path, "src,dst,weight\na,b,2\n");
  Graph g = load_edges_csv(path, {"a", "b", "c"});
  CHECK(g.adjacency(0, 1) == 2.0);
  CHECK(g.adjacency(1, 0) == 2.0);
  CHECK(g.adjacency(0, 2) == 0.0);

  const std::string empty = dir.file("none.csv");
  write_file(empty, "src,dst,weight\n");
  Graph edgeless = load_edges_csv(empty, {"a", "b"});
  CHECK(edgeless.adjacency.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("edges csv rejects bad rows") {
  TempDir dir;
  const std::string selfloop = dir.file("self.csv");
  write_file(selfloop, "src,dst,weight\na,a,1\n");
  CHECK_THROWS_AS(load_edges_csv(selfloop, {"a", "b"}), DataError);

  const std::string unknown = dir.file("unknown.csv");
  write_file(unknown, "src,dst,weight\na,zzz,1\n");
  CHECK_THROWS_WITH_AS(load_edges_csv(unknown, {"a", "b"}),
                       doctest::Contains("zzz"), DataError);

  const std::string negative = dir.file("neg.csv");
  write_file(negative, "src,dst,weight\na,b,-2\n");
  CHECK_THROWS_AS(load_edges_csv(negative, {"a", "b"}), DataError);
}

TEST_CASE("distance csv completes symmetrically; absent pairs unreachable") {
  TempDir dir;
  const std::string path = dir.file("dist.csv");
  write_file(path, "src,dst,meters\na,b,100\n");
  Matrix d = load_dist_csv(path, {"a", "b", "c"});
  CHECK(d(0, 1) == 100.0);
  CHECK(d(1, 0) == 100.0);
  CHECK(std::isinf(d(0, 2)));
  CHECK(d(2, 2) == 0.0);

  Graph g = gaussian_weights(d, 100.0, 0.0);
  CHECK(g.adjacency(0, 1) == doctest::Approx(std::exp(-1.0)));
  CHECK(g.adjacency(0, 2) == 0.0);
}

TEST_CASE("window extraction counts and boundaries") {
  SeriesDataset ds;
  ds.node_ids = {"a", "b"};
  ds.values.resize(10, 2);
  for (int i = 0; i < 10; ++i) {
    ds.values(i, 0) = i;
    ds.values(i, 1) = 10 + i;
    ds.timestamps.push_back(std::to_string(i));
  }

  auto w1 = make_windows(ds, 3, 2, 1);
  CHECK(w1.size() == 6);  // 10 − 3 − 2 + 1
  CHECK(w1.front().t0 == 0);
  CHECK(w1.back().t0 == 5);
  // Targets start exactly at the end of the inputs.
  CHECK(w1[0].x[2](0, 0) == 2.0);
  CHECK(w1[0].y[0](0, 0) == 3.0);

  auto w5 = make_windows(ds, 3, 2, 5);
  REQUIRE(w5.size() == 2);
  CHECK(w5[0].t0 == 0);
  CHECK(w5[1].t0 == 5);

  SeriesDataset exact = ds;
  exact.values = ds.values.topRows(5);
  exact.timestamps.resize(5);
  CHECK(make_windows(exact, 3, 2, 1).size() == 1);

  SeriesDataset tiny = ds;
  tiny.values = ds.values.topRows(4);
  tiny.timestamps.resize(4);
  CHECK_THROWS_AS(make_windows(tiny, 3, 2, 1), DataError);
}

TEST_CASE("stride-1 windows cover every admissible start exactly once") {
  SeriesDataset ds;
  ds.node_ids = {"a"};
  ds.values = Matrix::Zero(37, 1);
  auto windows = make_windows(ds, 5, 3, 1);
  CHECK(windows.size() == 30);
  for (std::size_t i = 0; i < windows.size(); ++i)
    CHECK(windows[i].t0 == static_cast<int>(i));
}

TEST_CASE("synthetic generator is deterministic per seed") {
  auto [ds1, g1] = synth_diffusion(12, 400, 99);
  auto [ds2, g2] = synth_diffusion(12, 400, 99);
  CHECK((ds1.values - ds2.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g1.adjacency - g2.adjacency).cwiseAbs().maxCoeff() == 0.0);
  auto [ds3, g3] = synth_diffusion(12, 400, 100);
  CHECK((ds1.values - ds3.values).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("zero-noise series obeys the generating recurrence") {
  // u(t) = x(t) − coeff·R·x(t−1) removes the diffusion transient, leaving a
  // pure sinusoid that must satisfy u(t+1) = 2cos(ω)u(t) − u(t−1).
  const int n = 9, t = 600;
  auto [ds, g] = synth_diffusion(n, t, 5, 0.0);
  Matrix rownorm = g.adjacency;
  for (int i = 0; i < n; ++i) {
    const double d = rownorm.row(i).sum();
    if (d > 0.0) rownorm.row(i) /= d;
  }
  Matrix diffuse = kSynthSelfWeight * Matrix::Identity(n, n) +
                   (1.0 - kSynthSelfWeight) * rownorm;
  Matrix u(t - 1, n);
  for (int s = 1; s < t; ++s)
    u.row(s - 1) =
        ds.values.row(s) -
        kSynthDiffusionCoeff * (diffuse * ds.values.row(s - 1).transpose())
                                   .transpose();
  const double c2 = 2.0 * std::cos(2.0 * M_PI / kSynthPeriodSteps);
  for (int s = 2; s < t - 1; ++s) {
    Matrix expected = c2 * u.row(s - 1) - u.row(s - 2);
    CHECK((u.row(s) - expected).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("synthetic values stay bounded across seeds") {
  for (std::uint64_t seed : {1ULL, 7ULL, 21ULL, 77ULL, 123ULL}) {
    auto [ds, g] = synth_diffusion(16, 800, seed);
    CHECK(ds.values.cwiseAbs().maxCoeff() <= 10.0);
  }
}

TEST_CASE("daily periodicity dominates the half-day lag") {
  auto [ds, g] = synth_diffusion(16, 1600, 11);
  auto autocorr = [&](int lag) {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < ds.n(); ++j) {
      const auto col = ds.values.col(j);
      const double mean = col.mean();
      for (int i = 0; i + lag < ds.t(); ++i)
        num += (col(i) - mean) * (col(i + lag) - mean);
      for (int i = 0; i < ds.t(); ++i) den += (col(i) - mean) * (col(i) - mean);
    }
    return num / den;
  };
  CHECK(autocorr(kSynthPeriodSteps) > autocorr(kSynthPeriodSteps / 2));
}

TEST_CASE("generator parameter errors") {
  CHECK_THROWS_AS(synth_diffusion(3, 400, 1), ParameterError);
  CHECK_THROWS_AS(synth_diffusion(8, 50, 1), ParameterError);
}

TEST_SUITE_END();
