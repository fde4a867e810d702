// Test-only reference implementations, kept independent of the library's
// computation paths so they can serve as oracles.
#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stgraph/autodiff.hpp"

namespace stgraph::oracles {

// Central-difference gradient comparison. Each entry pairs a live parameter
// matrix (perturbed in place) with its analytic gradient. loss() must
// recompute the scalar objective from the current parameter values.
struct FdReport {
  double max_rel_err = 0.0;
  std::string worst_entry;
};

template <typename LossFn>
FdReport fd_compare(
    const std::vector<std::pair<Matrix*, const Matrix*>>& entries,
    LossFn&& loss, double eps = 1e-5) {
  FdReport rep;
  for (const auto& [value, analytic] : entries) {
    for (Eigen::Index i = 0; i < value->rows(); ++i) {
      for (Eigen::Index j = 0; j < value->cols(); ++j) {
        const double orig = (*value)(i, j);
        (*value)(i, j) = orig + eps;
        const double up = loss();
        (*value)(i, j) = orig - eps;
        const double down = loss();
        (*value)(i, j) = orig;
        const double fd = (up - down) / (2.0 * eps);
        const double rel = std::abs((*analytic)(i, j) - fd) /
                           std::max(1.0, std::abs(fd));
        if (rel > rep.max_rel_err) {
          rep.max_rel_err = rel;
          rep.worst_entry = "(" + std::to_string(i) + "," + std::to_string(j) +
                            ") analytic=" + std::to_string((*analytic)(i, j)) +
                            " fd=" + std::to_string(fd);
        }
      }
    }
  }
  return rep;
}

// Literal step-by-step execution of the dual-graph weighting procedure.
inline Matrix dual_graph_weights_literal(const Matrix& flows,
                                         const Matrix& adj01) {
  const int t = static_cast<int>(flows.rows());
  const int n = static_cast<int>(flows.cols());
  // step: average flow of node i over all timestamps
  std::vector<double> f_avg(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < t; ++s) f_avg[i] += flows(s, i);
    f_avg[i] /= t;
  }
  // step: total flow
  double f_sum = 0.0;
  for (int i = 0; i < n; ++i) f_sum += f_avg[i];
  // step: per-node share
  std::vector<double> f_div(n, 0.0);
  for (int i = 0; i < n; ++i) f_div[i] = f_avg[i] / f_sum;
  // step: degrees from the binary adjacency
  std::vector<double> deg(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) deg[i] += adj01(i, j);
  // step: per-edge probability and edge weights
  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && adj01(i, j) != 0.0)
        w(i, j) = (1.0 / deg[i]) * f_div[i] + (1.0 / deg[j]) * f_div[j];
  return w;
}

// Triple-loop coarsening, written without matrix products.
inline Matrix pool_adj_bruteforce(const Matrix& a, const Matrix& p) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(p.cols());
  Matrix out = Matrix::Zero(m, m);
  for (int c = 0; c < m; ++c)
    for (int d = 0; d < m; ++d)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(c, d) += p(i, c) * a(i, j) * p(j, d);
  return out;
}

inline Matrix pool_x_bruteforce(const Matrix& x, const Matrix& p) {
  const int n = static_cast<int>(x.rows());
  const int f = static_cast<int>(x.cols());
  const int m = static_cast<int>(p.cols());
  Matrix out = Matrix::Zero(m, f);
  for (int c = 0; c < m; ++c)
    for (int k = 0; k < f; ++k)
      for (int i = 0; i < n; ++i) out(c, k) += p(i, c) * x(i, k);
  return out;
}

inline Matrix unpool_bruteforce(const Matrix& xp, const Matrix& p) {
  const int n = static_cast<int>(p.rows());
  const int m = static_cast<int>(p.cols());
  const int f = static_cast<int>(xp.cols());
  Matrix out = Matrix::Zero(n, f);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < f; ++k)
      for (int c = 0; c < m; ++c) out(i, k) += p(i, c) * xp(c, k);
  return out;
}

// Chebyshev recursion on coefficient vectors: expands T_k(L) into monomials
// of L and evaluates Σ_j c_j · L^j · x with explicit matrix powers.
inline std::vector<Matrix> cheb_via_monomials(const Matrix& lap,
                                              const Matrix& x, int order) {
  std::vector<std::vector<double>> coeff = {{1.0}, {0.0, 1.0}};
  for (int k = 2; k < order; ++k) {
    std::vector<double> c(k + 1, 0.0);
    for (std::size_t j = 0; j < coeff[k - 1].size(); ++j)
      c[j + 1] += 2.0 * coeff[k - 1][j];
    for (std::size_t j = 0; j < coeff[k - 2].size(); ++j)
      c[j] -= coeff[k - 2][j];
    coeff.push_back(std::move(c));
  }
  std::vector<Matrix> powers = {
      Matrix::Identity(lap.rows(), lap.cols())};  // L^0
  for (int j = 1; j < order; ++j) powers.push_back(powers.back() * lap);
  std::vector<Matrix> out;
  for (int k = 0; k < order; ++k) {
    Matrix term = Matrix::Zero(x.rows(), x.cols());
    for (std::size_t j = 0; j < coeff[k].size(); ++j)
      if (coeff[k][j] != 0.0) term += coeff[k][j] * (powers[j] * x);
    out.push_back(std::move(term));
  }
  return out;
}

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

inline Matrix random_row_stochastic(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.05, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    double total = 0.0;
    for (int j = 0; j < cols; ++j) {
      m(i, j) = dist(rng);
      total += m(i, j);
    }
    m.row(i) /= total;
  }
  return m;
}

// Random symmetric nonnegative adjacency with zero diagonal.
inline Matrix random_adjacency(int n, std::mt19937_64& rng,
                               double density = 0.5) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (unit(rng) < density) a(i, j) = a(j, i) = 0.25 + unit(rng);
  return a;
}

// Random connected binary adjacency: spanning tree plus extra edges.
inline Matrix random_connected_binary(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix a = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const int j = std::uniform_int_distribution<int>(0, i - 1)(rng);
    a(i, j) = a(j, i) = 1.0;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (unit(rng) < 0.3) a(i, j) = a(j, i) = 1.0;
  return a;
}

}  // namespace stgraph::oracles
