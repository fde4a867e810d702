"""Spatio-temporal graph forecasting with learnable hierarchical pooling.

The heavy lifting lives in the compiled extension; this package re-exports
the public surface.
"""

from ._core import (
    Forecaster,
    Graph,
    ModelConfig,
    Scaler,
    TrainOptions,
    cheb_apply,
    dual_graph_weights,
    flop_estimate,
    gaussian_weights,
    ha_forecast,
    metrics,
    normalized_adjacency,
    scaled_laplacian,
    synth_diffusion,
)

__all__ = [
    "Forecaster",
    "Graph",
    "ModelConfig",
    "Scaler",
    "TrainOptions",
    "cheb_apply",
    "dual_graph_weights",
    "flop_estimate",
    "gaussian_weights",
    "ha_forecast",
    "metrics",
    "normalized_adjacency",
    "scaled_laplacian",
    "synth_diffusion",
]

__version__ = "0.1.0"
