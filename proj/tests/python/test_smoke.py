"""End-to-end smoke tests for the Python bindings."""

import math

import numpy as np
import pytest

import stgraph


def ring_graph(n):
    adj = np.zeros((n, n))
    for i in range(n):
        adj[i, (i + 1) % n] = adj[(i + 1) % n, i] = 1.0
    return stgraph.Graph(adj, [f"n{i}" for i in range(n)])


def test_gaussian_weights_kernel():
    dist = np.zeros((3, 3))
    dist[0, 1] = dist[1, 0] = 2.0
    dist[0, 2] = dist[2, 0] = 50.0
    dist[1, 2] = dist[2, 1] = 50.0
    g = stgraph.gaussian_weights(dist, sigma_dist=2.0, kappa=0.1)
    assert g.adjacency[0, 1] == pytest.approx(math.exp(-1.0))
    assert g.adjacency[0, 2] == 0.0  # below kappa
    assert np.allclose(g.adjacency, g.adjacency.T)


def test_dual_graph_weights_sum_to_one():
    flows = np.abs(np.random.default_rng(0).normal(size=(20, 6))) + 0.1
    adj01 = np.zeros((6, 6))
    for i in range(6):
        adj01[i, (i + 1) % 6] = adj01[(i + 1) % 6, i] = 1.0
    g = stgraph.dual_graph_weights(flows, adj01)
    total = np.triu(g.adjacency).sum()
    assert total == pytest.approx(1.0, abs=1e-12)


def test_scaled_laplacian_spectrum():
    g = ring_graph(8)
    lap = stgraph.scaled_laplacian(g)
    assert np.allclose(lap, lap.T)
    eigs = np.linalg.eigvalsh(lap)
    assert eigs.min() >= -1.0 - 1e-10
    assert eigs.max() <= 1.0 + 1e-10


def test_cheb_apply_matches_numpy_recursion():
    g = ring_graph(6)
    lap = stgraph.scaled_laplacian(g)
    x = np.random.default_rng(1).normal(size=(6, 2))
    terms = stgraph.cheb_apply(lap, x, 4)
    t0, t1 = x, lap @ x
    assert np.allclose(terms[0], t0)
    assert np.allclose(terms[1], t1)
    t2 = 2 * lap @ t1 - t0
    t3 = 2 * lap @ t2 - t1
    assert np.allclose(terms[2], t2, atol=1e-12)
    assert np.allclose(terms[3], t3, atol=1e-12)


def test_flop_estimate_favours_pooling():
    pooled = stgraph.ModelConfig()
    pooled.n_nodes, pooled.m1, pooled.m2 = 64, 32, 16
    nopool = stgraph.ModelConfig()
    nopool.n_nodes = nopool.m1 = nopool.m2 = 64
    a = stgraph.flop_estimate(pooled)
    b = stgraph.flop_estimate(nopool)
    assert a["mac_count"] < b["mac_count"]
    assert a["peak_activation_floats"] < b["peak_activation_floats"]


def test_fit_predict_save_load_roundtrip(tmp_path):
    values, graph = stgraph.synth_diffusion(8, 420, seed=3)
    cfg = stgraph.ModelConfig()
    cfg.n_nodes, cfg.m1, cfg.m2 = 8, 4, 2
    cfg.hidden, cfg.t_in, cfg.t_out = 8, 6, 2
    opts = stgraph.TrainOptions()
    opts.max_epochs = 2
    opts.patience = 2
    opts.window_stride = 4
    opts.seed = 5
    model = stgraph.Forecaster.fit(values, graph.node_ids, graph, cfg, opts)

    assert len(model.history) == 2
    preds = model.predict(values[-cfg.t_in:, :])
    assert preds.shape == (2, 8)

    clusters = model.cluster_assignments(0)
    assert clusters.shape == (8,)
    assert clusters.min() >= 0 and clusters.max() < 4
    p = model.assignment_matrix(0)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-10)

    path = str(tmp_path / "model.ckpt")
    model.save(path)
    again = stgraph.Forecaster.load(path, graph)
    assert np.allclose(again.predict(values[-cfg.t_in:, :]), preds)


def test_ha_forecast_and_metrics():
    train = np.tile(np.array([[1.0, 2.0], [3.0, 4.0]]), (5, 1))  # period 2
    preds = stgraph.ha_forecast(train, 2, [10, 11])
    assert np.allclose(preds[0], [1.0, 2.0])
    assert np.allclose(preds[1], [3.0, 4.0])

    mae, mse, rmse = stgraph.metrics([3.0, -4.0], [0.0, 0.0])
    assert mae == pytest.approx(3.5)
    assert mse == pytest.approx(12.5)
    assert rmse == pytest.approx(math.sqrt(12.5))


def test_errors_surface_as_python_exceptions():
    with pytest.raises(ValueError):
        stgraph.gaussian_weights(np.zeros((2, 2)), sigma_dist=-1.0, kappa=0.1)
    with pytest.raises(ValueError):
        bad = np.zeros((2, 3))
        stgraph.Graph(bad)
