#pragma once

#include <string>
#include <vector>

#include "stgraph/autodiff.hpp"

namespace stgraph {

// Undirected weighted graph: symmetric nonnegative adjacency, zero diagonal,
// unique node identifiers. Immutable after construction.
struct Graph {
  std::vector<std::string> node_ids;
  Matrix adjacency;

  int n() const { return static_cast<int>(adjacency.rows()); }

  // Validates the invariants and returns the graph; throws DataError /
  // ContractError on violation. Empty ids generate "0".."N-1".
  static Graph make(Matrix adjacency, std::vector<std::string> node_ids = {});
};

// Scaled Laplacian and the quantities it was derived from.
struct SpectralCache {
  Matrix scaled_laplacian;  // 2L/lambda_max − I, symmetric, spectrum in [−1,1]
  double lambda_max = 2.0;
  Vector degree;
};

// W_ij = exp(−dist_ij²/σ²) for i≠j, entries below kappa dropped, zero
// diagonal. dist must be symmetric with zero diagonal; +inf entries mean
// "unreachable" and produce weight 0. sigma_dist > 0, kappa in [0,1).
Graph gaussian_weights(const Matrix& dist, double sigma_dist, double kappa,
                       std::vector<std::string> node_ids = {});

// Flow-proportional edge weights on a dual road graph:
// every node splits its share of total average flow evenly across its
// incident edges, and an edge weight is the sum of the two contributions.
// flows is T×N (rows are timestamps), adj01 a binary symmetric adjacency.
// Total edge weight always sums to 1.
Graph dual_graph_weights(const Matrix& flows, const Matrix& adj01,
                         std::vector<std::string> node_ids = {});

// L = I − D^{−1/2} A D^{−1/2} with d_i = Σ_j A_ij (zero degrees treated as
// one). By default lambda_max is fixed at 2 — an upper bound for the
// symmetric normalized Laplacian — giving scaled_laplacian = L − I.
// estimate_lambda_max switches to a power-iteration estimate for tight
// scaling.
SpectralCache scaled_laplacian(const Graph& g, bool estimate_lambda_max = false);

// D^{−1/2} A D^{−1/2} (zero degrees treated as one).
Matrix normalized_adjacency(const Graph& g);

// Largest-magnitude eigenvalue of a symmetric matrix via power iteration.
double power_iteration_lambda_max(const Matrix& sym, int max_iters = 200,
                                  double tol = 1e-10);

// Chebyshev basis applied to x: [T₀x, T₁x, …, T_{K−1}x] with
// T₀x = x, T₁x = L̃x, T_k x = 2·L̃·T_{k−1}x − T_{k−2}x.
// All terms participate in differentiation.
std::vector<Value> cheb_polynomials(Value scaled_lap, Value x, int order);
// Convenience overload; places the Laplacian on x's tape as a constant.
std::vector<Value> cheb_polynomials(const SpectralCache& cache, Value x,
                                    int order);

}  // namespace stgraph
