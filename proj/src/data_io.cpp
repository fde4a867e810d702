#include "stgraph/data_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace stgraph {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, const std::string& path,
                    int line_no) {
  const std::string s = strip(raw);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(path + ":" + std::to_string(line_no) +
                     ": non-numeric cell '" + raw + "'");
  return out;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  return in;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::map<std::string, int> id_index(const std::vector<std::string>& ids) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < ids.size(); ++i)
    index[ids[i]] = static_cast<int>(i);
  return index;
}

}  // namespace

SeriesDataset load_series_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(path + ": empty file");
  auto header = split_csv_line(strip(line));
  if (header.size() < 2)
    throw ParseError(path + ":1: header needs a timestamp column and at "
                            "least one node id");

  SeriesDataset ds;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const std::string id = strip(header[i]);
    if (id.empty())
      throw ParseError(path + ":1: empty node id in header");
    if (!seen.insert(id).second)
      throw ParseError(path + ":1: duplicate node id '" + id + "'");
    ds.node_ids.push_back(id);
  }
  const int n = static_cast<int>(ds.node_ids.size());

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = strip(line);
    if (trimmed.empty()) continue;
    auto fields = split_csv_line(trimmed);
    if (static_cast<int>(fields.size()) != n + 1)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(n + 1) + " fields, got " +
                       std::to_string(fields.size()));
    ds.timestamps.push_back(strip(fields[0]));
    std::vector<double> row(n);
    for (int j = 0; j < n; ++j) {
      const std::string cell = strip(fields[j + 1]);
      row[j] = cell.empty() ? kNaN : parse_number(cell, path, line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");

  const int t = static_cast<int>(rows.size());
  ds.values.resize(t, n);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < n; ++j) ds.values(i, j) = rows[i][j];

  // Impute: forward fill, then column mean for leading gaps.
  for (int j = 0; j < n; ++j) {
    double mean = 0.0;
    int count = 0;
    for (int i = 0; i < t; ++i) {
      if (!std::isnan(ds.values(i, j))) {
        mean += ds.values(i, j);
        ++count;
      }
    }
    if (count == 0)
      throw DataError(path + ": node '" + ds.node_ids[j] +
                      "' has no observations");
    mean /= count;
    double last = kNaN;
    for (int i = 0; i < t; ++i) {
      if (std::isnan(ds.values(i, j)))
        ds.values(i, j) = std::isnan(last) ? mean : last;
      last = ds.values(i, j);
    }
  }
  return ds;
}

void save_series_csv(const SeriesDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  out << "timestamp";
  for (const auto& id : ds.node_ids) out << "," << id;
  out << "\n";
  for (int i = 0; i < ds.t(); ++i) {
    out << (i < static_cast<int>(ds.timestamps.size()) ? ds.timestamps[i]
                                                       : std::to_string(i));
    for (int j = 0; j < ds.n(); ++j) out << "," << format_double(ds.values(i, j));
    out << "\n";
  }
}

namespace {

// Shared walker for the two-column-keyed pair files (edges, distances).
template <typename OnPair>
void read_pair_csv(const std::string& path,
                   const std::vector<std::string>& expected_header,
                   const std::map<std::string, int>& index, OnPair on_pair) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  auto header = split_csv_line(strip(line));
  if (header.size() != 3)
    throw ParseError(path + ":1: expected header '" + expected_header[0] +
                     "," + expected_header[1] + "," + expected_header[2] +
                     "'");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = strip(line);
    if (trimmed.empty()) continue;
    auto fields = split_csv_line(trimmed);
    if (fields.size() != 3)
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 3 fields, got " +
                       std::to_string(fields.size()));
    const std::string src = strip(fields[0]);
    const std::string dst = strip(fields[1]);
    auto it_src = index.find(src);
    auto it_dst = index.find(dst);
    if (it_src == index.end())
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": unknown node id '" + src + "'");
    if (it_dst == index.end())
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": unknown node id '" + dst + "'");
    const double v = parse_number(fields[2], path, line_no);
    on_pair(it_src->second, it_dst->second, v, line_no);
  }
}

}  // namespace

Graph load_edges_csv(const std::string& path,
                     const std::vector<std::string>& node_ids) {
  const auto index = id_index(node_ids);
  const int n = static_cast<int>(node_ids.size());
  Matrix adj = Matrix::Zero(n, n);
  Matrix assigned = Matrix::Zero(n, n);
  read_pair_csv(path, {"src", "dst", "weight"}, index,
                [&](int i, int j, double w, int line_no) {
                  if (i == j)
                    throw DataError(path + ":" + std::to_string(line_no) +
                                    ": self-loop on node '" + node_ids[i] +
                                    "'");
                  if (w < 0.0)
                    throw DataError(path + ":" + std::to_string(line_no) +
                                    ": negative weight");
                  if (assigned(i, j) != 0.0 && adj(i, j) != w)
                    throw DataError(path + ":" + std::to_string(line_no) +
                                    ": conflicting duplicate edge");
                  adj(i, j) = adj(j, i) = w;
                  assigned(i, j) = assigned(j, i) = 1.0;
                });
  return Graph::make(std::move(adj), node_ids);
}

void save_edges_csv(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  out << "src,dst,weight\n";
  for (int i = 0; i < g.n(); ++i)
    for (int j = i + 1; j < g.n(); ++j)
      if (g.adjacency(i, j) != 0.0)
        out << g.node_ids[i] << "," << g.node_ids[j] << ","
            << format_double(g.adjacency(i, j)) << "\n";
}

Matrix load_dist_csv(const std::string& path,
                     const std::vector<std::string>& node_ids) {
  const auto index = id_index(node_ids);
  const int n = static_cast<int>(node_ids.size());
  Matrix dist = Matrix::Constant(n, n, kInf);
  dist.diagonal().setZero();
  Matrix assigned = Matrix::Zero(n, n);
  read_pair_csv(path, {"src", "dst", "meters"}, index,
                [&](int i, int j, double d, int line_no) {
                  if (d < 0.0)
                    throw DataError(path + ":" + std::to_string(line_no) +
                                    ": negative distance");
                  if (i == j) {
                    if (d != 0.0)
                      throw DataError(path + ":" + std::to_string(line_no) +
                                      ": nonzero self-distance");
                    return;
                  }
                  if (assigned(i, j) != 0.0 && dist(i, j) != d)
                    throw DataError(path + ":" + std::to_string(line_no) +
                                    ": conflicting duplicate distance");
                  dist(i, j) = dist(j, i) = d;
                  assigned(i, j) = assigned(j, i) = 1.0;
                });
  return dist;
}

std::vector<WindowSample> make_windows(const SeriesDataset& ds, int t_in,
                                       int t_out, int stride) {
  if (t_in < 1 || t_out < 0)
    throw ParameterError("make_windows: horizons must satisfy t_in >= 1, "
                         "t_out >= 0");
  if (stride < 1) throw ParameterError("make_windows: stride must be >= 1");
  const int t = ds.t();
  if (t < t_in + t_out)
    throw DataError("make_windows: series has " + std::to_string(t) +
                    " rows, need at least " + std::to_string(t_in + t_out));
  const int count = (t - t_in - t_out) / stride + 1;
  std::vector<WindowSample> windows;
  windows.reserve(count);
  for (int w = 0; w < count; ++w) {
    WindowSample sample;
    sample.t0 = w * stride;
    sample.x.reserve(t_in);
    sample.y.reserve(t_out);
    for (int k = 0; k < t_in; ++k)
      sample.x.push_back(ds.values.row(sample.t0 + k).transpose());
    for (int k = 0; k < t_out; ++k)
      sample.y.push_back(ds.values.row(sample.t0 + t_in + k).transpose());
    windows.push_back(std::move(sample));
  }
  return windows;
}

std::pair<SeriesDataset, Graph> synth_diffusion(int n, int t,
                                                std::uint64_t seed,
                                                double noise_sigma) {
  if (n < 4) throw ParameterError("synth_diffusion: n must be >= 4");
  if (t < 100) throw ParameterError("synth_diffusion: t must be >= 100");
  if (noise_sigma < 0.0)
    throw ParameterError("synth_diffusion: noise_sigma must be >= 0");

  // Ring of four cliques. Cliques are fully connected internally and the
  // ring closes through one bridge edge between consecutive cliques.
  const int cliques = 4;
  std::vector<int> start(cliques + 1, 0);
  for (int c = 0; c < cliques; ++c)
    start[c + 1] = start[c] + n / cliques + (c < n % cliques ? 1 : 0);
  Matrix adj = Matrix::Zero(n, n);
  for (int c = 0; c < cliques; ++c)
    for (int i = start[c]; i < start[c + 1]; ++i)
      for (int j = i + 1; j < start[c + 1]; ++j) adj(i, j) = adj(j, i) = 1.0;
  for (int c = 0; c < cliques; ++c) {
    const int a = start[c + 1] - 1;
    const int b = start[(c + 1) % cliques];
    if (a != b) adj(a, b) = adj(b, a) = 1.0;
  }
  Graph g = Graph::make(std::move(adj));

  // Lazy diffusion operator: every node keeps most of its own mass and
  // exchanges the rest with the neighbour average.
  Matrix rownorm = g.adjacency;
  for (int i = 0; i < n; ++i) {
    const double d = rownorm.row(i).sum();
    if (d > 0.0) rownorm.row(i) /= d;
  }
  Matrix diffuse = kSynthSelfWeight * Matrix::Identity(n, n) +
                   (1.0 - kSynthSelfWeight) * rownorm;

  std::vector<int> clique_of(n);
  for (int c = 0; c < cliques; ++c)
    for (int i = start[c]; i < start[c + 1]; ++i) clique_of[i] = c;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Clique-level daily pattern with small per-node jitter.
  Vector base_amp(cliques), base_phase(cliques);
  for (int c = 0; c < cliques; ++c) base_amp(c) = 0.7 + 0.3 * unit(rng);
  for (int c = 0; c < cliques; ++c) base_phase(c) = 2.0 * M_PI * unit(rng);
  Vector amplitude(n), phase(n);
  for (int i = 0; i < n; ++i) {
    amplitude(i) = base_amp(clique_of[i]) * (1.0 + 0.05 * (2.0 * unit(rng) - 1.0));
    phase(i) = base_phase(clique_of[i]) + 0.05 * (2.0 * unit(rng) - 1.0);
  }
  // Initial disturbance so the diffusion transient exists even without noise.
  Vector disturbance(n);
  for (int i = 0; i < n; ++i) disturbance(i) = 0.3 * (2.0 * unit(rng) - 1.0);

  constexpr double kPeriod = kSynthPeriodSteps;  // one day of 5-minute intervals
  constexpr double kShared = 0.5;  // clique-shared fraction of noise variance

  SeriesDataset ds;
  ds.node_ids = g.node_ids;
  ds.interval_minutes = 5;
  ds.values.resize(t, n);
  ds.timestamps.reserve(t);
  for (int step = 0; step < t; ++step) {
    ds.timestamps.push_back(std::to_string(step));
    if (step > 0) disturbance = kSynthDiffusionCoeff * (diffuse * disturbance);
    if (noise_sigma > 0.0) {
      Vector shared(cliques);
      for (int c = 0; c < cliques; ++c) shared(c) = gauss(rng);
      for (int i = 0; i < n; ++i)
        disturbance(i) +=
            noise_sigma * (std::sqrt(kShared) * shared(clique_of[i]) +
                           std::sqrt(1.0 - kShared) * gauss(rng));
    }
    for (int i = 0; i < n; ++i) {
      const double seasonal =
          amplitude(i) * std::sin(2.0 * M_PI * step / kPeriod + phase(i));
      ds.values(step, i) = seasonal + disturbance(i);
    }
  }
  return {std::move(ds), std::move(g)};
}

}  // namespace stgraph
