#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "oracles.hpp"
#include "stgraph/graph.hpp"

using namespace stgraph;

TEST_SUITE_BEGIN("graph");

TEST_CASE("gaussian weights evaluate the kernel") {
  Matrix dist = Matrix::Zero(3, 3);
  dist(0, 1) = dist(1, 0) = 0.0;
  dist(0, 2) = dist(2, 0) = 2.0;  // equals sigma below
  dist(1, 2) = dist(2, 1) = 5.0;

  Graph g = gaussian_weights(dist, 2.0, 0.0);
  CHECK(g.adjacency(0, 1) == doctest::Approx(1.0));  // zero distance
  CHECK(g.adjacency(0, 2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(g.adjacency(2, 2) == 0.0);

  Graph thresholded = gaussian_weights(dist, 2.0, 0.5);
  CHECK(thresholded.adjacency(0, 2) == 0.0);  // e^{-1} ≈ 0.368 < 0.5
  CHECK(thresholded.adjacency(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("gaussian weights parameter and contract errors") {
  Matrix dist = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(gaussian_weights(dist, 0.0, 0.1), ParameterError);
  CHECK_THROWS_AS(gaussian_weights(dist, -1.0, 0.1), ParameterError);
  CHECK_THROWS_AS(gaussian_weights(dist, 1.0, 1.0), ParameterError);
  Matrix asym = Matrix::Zero(2, 2);
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(gaussian_weights(asym, 1.0, 0.1), ContractError);
}

TEST_CASE("gaussian weights treat unreachable pairs as disconnected") {
  Matrix dist = Matrix::Zero(2, 2);
  dist(0, 1) = dist(1, 0) = std::numeric_limits<double>::infinity();
  Graph g = gaussian_weights(dist, 1.0, 0.0);
  CHECK(g.adjacency(0, 1) == 0.0);
}

TEST_CASE("gaussian weights output is symmetric with zero diagonal") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 9);
    Matrix dist = Matrix::Zero(n, n);
    std::uniform_real_distribution<double> unit(0.0, 4.0);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = unit(rng);
    Graph g = gaussian_weights(dist, 1.5, 0.2);
    CHECK((g.adjacency - g.adjacency.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.adjacency.diagonal().cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("dual-graph weights reproduce the two-node hand case") {
  // flows: node0 = [2,4], node1 = [1,1]; single edge.
  Matrix flows(2, 2);
  flows << 2, 1, 4, 1;
  Matrix adj01 = Matrix::Zero(2, 2);
  adj01(0, 1) = adj01(1, 0) = 1.0;
  Graph g = dual_graph_weights(flows, adj01);
  // f_avg = (3, 1), f_div = (0.75, 0.25), degrees (1, 1) → weight 1.
  CHECK(g.adjacency(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("dual-graph weights on a triangle with equal flows") {
  Matrix flows = Matrix::Constant(4, 3, 2.5);
  Matrix adj01 = Matrix::Ones(3, 3);
  adj01.diagonal().setZero();
  Graph g = dual_graph_weights(flows, adj01);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j)
        CHECK(g.adjacency(i, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("dual-graph weights match the literal procedure on random instances") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> flow(0.0, 10.0);
  for (int trial = 0; trial < 120; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const int t = 1 + static_cast<int>(rng() % 6);
    Matrix adj01 = oracles::random_connected_binary(n, rng);
    Matrix flows(t, n);
    for (int s = 0; s < t; ++s)
      for (int i = 0; i < n; ++i) flows(s, i) = flow(rng);
    flows(0, 0) += 0.1;  // guarantees positive total

    Graph g = dual_graph_weights(flows, adj01);
    Matrix expected = oracles::dual_graph_weights_literal(flows, adj01);
    CHECK((g.adjacency - expected).cwiseAbs().maxCoeff() < 1e-12);

    // Total edge weight telescopes to 1.
    double total = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) total += g.adjacency(i, j);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("dual-graph weights data errors") {
  Matrix flows = Matrix::Ones(2, 3);
  Matrix adj01 = Matrix::Zero(3, 3);
  adj01(0, 1) = adj01(1, 0) = 1.0;  // node 2 isolated
  CHECK_THROWS_WITH_AS(dual_graph_weights(flows, adj01, {"a", "b", "c"}),
                       doctest::Contains("c"), DataError);

  Matrix connected = Matrix::Ones(3, 3);
  connected.diagonal().setZero();
  CHECK_THROWS_AS(dual_graph_weights(Matrix::Zero(2, 3), connected),
                  DataError);
}

TEST_CASE("scaled laplacian of a single edge") {
  Matrix adj = Matrix::Zero(2, 2);
  adj(0, 1) = adj(1, 0) = 1.0;
  SpectralCache cache = scaled_laplacian(Graph::make(adj));
  Matrix expected(2, 2);
  expected << 0, -1, -1, 0;  // L = [[1,-1],[-1,1]], eigenvalues {0,2}
  CHECK((cache.scaled_laplacian - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(cache.lambda_max == 2.0);
}

TEST_CASE("scaled laplacian of an edgeless graph is zero") {
  SpectralCache cache = scaled_laplacian(Graph::make(Matrix::Zero(4, 4)));
  CHECK(cache.scaled_laplacian.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scaled laplacian spectrum stays within [-1, 1]") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 10);
    Graph g = Graph::make(oracles::random_adjacency(n, rng));
    SpectralCache cache = scaled_laplacian(g);
    CHECK((cache.scaled_laplacian - cache.scaled_laplacian.transpose())
              .cwiseAbs()
              .maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cache.scaled_laplacian);
    CHECK(eig.eigenvalues().minCoeff() >= -1.0 - 1e-10);
    CHECK(eig.eigenvalues().maxCoeff() <= 1.0 + 1e-10);
  }
}

TEST_CASE("power iteration agrees with an eigensolver") {
  std::mt19937_64 rng(33);
  Graph g = Graph::make(oracles::random_adjacency(8, rng));
  Matrix lap =
      Matrix::Identity(8, 8) - normalized_adjacency(g);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(lap);
  const double expected = eig.eigenvalues().cwiseAbs().maxCoeff();
  CHECK(power_iteration_lambda_max(lap) ==
        doctest::Approx(expected).epsilon(1e-6));

  SpectralCache tight = scaled_laplacian(g, true);
  CHECK(tight.lambda_max == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("chebyshev basis small orders") {
  std::mt19937_64 rng(41);
  Graph g = Graph::make(oracles::random_adjacency(5, rng));
  SpectralCache cache = scaled_laplacian(g);
  Matrix x = oracles::random_matrix(5, 2, rng);

  Tape tape;
  auto k1 = cheb_polynomials(cache, tape.constant(x), 1);
  REQUIRE(k1.size() == 1);
  CHECK((k1[0].data() - x).cwiseAbs().maxCoeff() == 0.0);

  auto k2 = cheb_polynomials(cache, tape.constant(x), 2);
  REQUIRE(k2.size() == 2);
  CHECK((k2[1].data() - cache.scaled_laplacian * x).cwiseAbs().maxCoeff() <
        1e-14);

  CHECK_THROWS_AS(cheb_polynomials(cache, tape.constant(x), 0),
                  ParameterError);
}

TEST_CASE("chebyshev recursion equals the monomial expansion") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    Graph g = Graph::make(oracles::random_adjacency(n, rng));
    SpectralCache cache = scaled_laplacian(g);
    Matrix x = oracles::random_matrix(n, 3, rng);
    const int order = 2 + static_cast<int>(rng() % 4);  // up to 5

    Tape tape;
    auto terms = cheb_polynomials(cache, tape.constant(x), order);
    auto expected = oracles::cheb_via_monomials(cache.scaled_laplacian, x, order);
    for (int k = 0; k < order; ++k)
      CHECK((terms[k].data() - expected[k]).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("chebyshev values cycle on a zero operator") {
  SpectralCache cache = scaled_laplacian(Graph::make(Matrix::Zero(3, 3)));
  Matrix x = Matrix::Ones(3, 1);
  Tape tape;
  auto terms = cheb_polynomials(cache, tape.constant(x), 5);
  const double expected[] = {1.0, 0.0, -1.0, 0.0, 1.0};  // T_k(0)
  for (int k = 0; k < 5; ++k)
    CHECK((terms[k].data() - expected[k] * x).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("graph validation catches bad input") {
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 1) = neg(1, 0) = -1.0;
  CHECK_THROWS_AS(Graph::make(neg), DataError);
  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 1.0;
  CHECK_THROWS_AS(Graph::make(diag), DataError);
  CHECK_THROWS_AS(Graph::make(Matrix::Zero(2, 2), {"a", "a"}), DataError);
}

TEST_SUITE_END();
