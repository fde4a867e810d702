#include "stgraph/graph.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <utility>

namespace stgraph {

namespace {

std::vector<std::string> default_ids(int n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (int i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

void check_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols())
    throw ContractError(std::string(what) + ": matrix must be square, got " +
                        shape_str(m));
}

void check_symmetric(const Matrix& m, const char* what, double tol = 0.0) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      const double a = m(i, j), b = m(j, i);
      if (a == b) continue;  // covers matching infinities
      if (std::abs(a - b) > tol)
        throw ContractError(std::string(what) + ": matrix is not symmetric at (" +
                            std::to_string(i) + "," + std::to_string(j) + ")");
    }
}

}  // namespace

Graph Graph::make(Matrix adjacency, std::vector<std::string> node_ids) {
  check_square(adjacency, "Graph");
  const int n = static_cast<int>(adjacency.rows());
  if (node_ids.empty()) node_ids = default_ids(n);
  if (static_cast<int>(node_ids.size()) != n)
    throw ContractError("Graph: " + std::to_string(node_ids.size()) +
                        " node ids for " + std::to_string(n) + " nodes");
  std::set<std::string> seen(node_ids.begin(), node_ids.end());
  if (static_cast<int>(seen.size()) != n)
    throw DataError("Graph: node ids are not unique");
  check_symmetric(adjacency, "Graph");
  for (int i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0)
      throw DataError("Graph: nonzero diagonal at node " + node_ids[i]);
    for (int j = 0; j < n; ++j) {
      const double w = adjacency(i, j);
      if (std::isnan(w) || w < 0.0)
        throw DataError("Graph: invalid weight at (" + node_ids[i] + "," +
                        node_ids[j] + ")");
    }
  }
  Graph g;
  g.node_ids = std::move(node_ids);
  g.adjacency = std::move(adjacency);
  return g;
}

Graph gaussian_weights(const Matrix& dist, double sigma_dist, double kappa,
                       std::vector<std::string> node_ids) {
  if (sigma_dist <= 0.0)
    throw ParameterError("gaussian_weights: sigma_dist must be positive, got " +
                         std::to_string(sigma_dist));
  if (kappa < 0.0 || kappa >= 1.0)
    throw ParameterError("gaussian_weights: kappa must lie in [0,1), got " +
                         std::to_string(kappa));
  check_square(dist, "gaussian_weights");
  check_symmetric(dist, "gaussian_weights");
  const int n = static_cast<int>(dist.rows());
  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = dist(i, j);
      if (std::isnan(d)) throw ContractError("gaussian_weights: NaN distance");
      if (d < 0.0) throw DataError("gaussian_weights: negative distance");
      // +inf distances (unreachable pairs) give exp(−inf) = 0.
      const double r = d / sigma_dist;
      double v = std::exp(-r * r);
      if (v < kappa) v = 0.0;
      w(i, j) = w(j, i) = v;
    }
  }
  return Graph::make(std::move(w), std::move(node_ids));
}

Graph dual_graph_weights(const Matrix& flows, const Matrix& adj01,
                         std::vector<std::string> node_ids) {
  check_square(adj01, "dual_graph_weights");
  check_symmetric(adj01, "dual_graph_weights");
  const int n = static_cast<int>(adj01.rows());
  if (flows.cols() != n)
    throw ShapeError("dual_graph_weights: flows have " +
                     std::to_string(flows.cols()) + " nodes but adjacency is " +
                     shape_str(adj01));
  if (flows.rows() < 1)
    throw DataError("dual_graph_weights: flow matrix has no timestamps");
  if (node_ids.empty()) node_ids = default_ids(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double a = adj01(i, j);
      if (a != 0.0 && a != 1.0)
        throw ContractError("dual_graph_weights: adjacency must be binary");
      if (i == j && a != 0.0)
        throw ContractError("dual_graph_weights: self-loop at node " +
                            node_ids[i]);
    }
  if ((flows.array() < 0.0).any())
    throw DataError("dual_graph_weights: negative flow value");

  // Average flow per node, then each node's share of the total.
  Vector f_avg = flows.colwise().mean();
  const double f_sum = f_avg.sum();
  if (f_sum <= 0.0)
    throw DataError("dual_graph_weights: total flow is zero");
  Vector f_div = f_avg / f_sum;

  Vector deg = adj01.rowwise().sum();
  for (int i = 0; i < n; ++i)
    if (deg(i) < 1.0)
      throw DataError("dual_graph_weights: isolated node " + node_ids[i]);

  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (adj01(i, j) != 0.0)
        w(i, j) = w(j, i) = f_div(i) / deg(i) + f_div(j) / deg(j);
  return Graph::make(std::move(w), std::move(node_ids));
}

Matrix normalized_adjacency(const Graph& g) {
  const int n = g.n();
  Vector deg = g.adjacency.rowwise().sum();
  Vector inv_sqrt(n);
  for (int i = 0; i < n; ++i)
    inv_sqrt(i) = 1.0 / std::sqrt(deg(i) > 0.0 ? deg(i) : 1.0);
  return inv_sqrt.asDiagonal() * g.adjacency * inv_sqrt.asDiagonal();
}

double power_iteration_lambda_max(const Matrix& sym, int max_iters,
                                  double tol) {
  check_square(sym, "power_iteration_lambda_max");
  const int n = static_cast<int>(sym.rows());
  if (n == 0) return 0.0;
  Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector w = sym * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = w.dot(sym * w);
    if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) {
      return next;
    }
    lambda = next;
    v = std::move(w);
  }
  return lambda;
}

SpectralCache scaled_laplacian(const Graph& g, bool estimate_lambda_max) {
  const int n = g.n();
  SpectralCache cache;
  cache.degree = g.adjacency.rowwise().sum();
  Matrix lap = Matrix::Identity(n, n) - normalized_adjacency(g);
  cache.lambda_max = 2.0;
  if (estimate_lambda_max) {
    const double est = power_iteration_lambda_max(lap);
    if (est > 1e-12) cache.lambda_max = est;
  }
  cache.scaled_laplacian =
      (2.0 / cache.lambda_max) * lap - Matrix::Identity(n, n);
  // Enforce exact symmetry against rounding drift.
  cache.scaled_laplacian =
      0.5 * (cache.scaled_laplacian + cache.scaled_laplacian.transpose()).eval();
  return cache;
}

std::vector<Value> cheb_polynomials(Value scaled_lap, Value x, int order) {
  if (order < 1)
    throw ParameterError("cheb_polynomials: order must be >= 1, got " +
                         std::to_string(order));
  if (scaled_lap.cols() != x.rows())
    throw ShapeError("cheb_polynomials: operator " +
                     shape_str(scaled_lap.data()) + " does not match input " +
                     shape_str(x.data()));
  std::vector<Value> terms;
  terms.reserve(order);
  terms.push_back(x);
  if (order == 1) return terms;
  terms.push_back(matmul(scaled_lap, x));
  for (int k = 2; k < order; ++k) {
    Value next = sub(scale(matmul(scaled_lap, terms[k - 1]), 2.0), terms[k - 2]);
    terms.push_back(next);
  }
  return terms;
}

std::vector<Value> cheb_polynomials(const SpectralCache& cache, Value x,
                                    int order) {
  Value lap = x.tape().constant(cache.scaled_laplacian);
  return cheb_polynomials(lap, x, order);
}

}  // namespace stgraph
