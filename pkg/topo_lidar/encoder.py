"""
Forward-only LiDAR graph encoder.

Each layer rebuilds a k-NN graph in the current feature space, forms the edge
feature concat(h_i, h_j - h_i) for every neighbor j, applies a linear map and
max-pools over the neighbors. Weights are fixed and seeded, never trained.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .core.geometry import PointCloud
from .core.graph import KnnGraph, knn_graph
from .errors import GeometryError, ShapeMismatchError

logger = logging.getLogger(__name__)

DEFAULT_WIDTHS = (64, 128, 256, 512)
DEFAULT_K = 20
# node rows per einsum call; bounds the (rows, k, 2*D_in) edge tensor
CHUNK = 256


@dataclass(frozen=True)
class LayerWeights:
    matrix: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        W = np.asarray(self.matrix, dtype=np.float64)
        if W.ndim != 2 or W.shape[1] % 2 or W.shape[1] == 0:
            raise GeometryError(f"layer weights must have shape (D_out, 2*D_in), got {W.shape}")
        if not np.all(np.isfinite(W)):
            raise GeometryError("layer weights must be finite")
        object.__setattr__(self, "matrix", W)

    @property
    def d_in(self) -> int:
        return self.matrix.shape[1] // 2

    @property
    def d_out(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def random(cls, d_in: int, d_out: int, seed: int, layer: int = 0) -> "LayerWeights":
        """Uniform in +-1/sqrt(2*d_in), drawn from a generator keyed on (seed, layer)."""
        if seed < 0:
            raise GeometryError(f"seed must be >= 0, got {seed}")
        rng = np.random.default_rng([seed, layer])
        bound = 1.0 / np.sqrt(2.0 * d_in)
        return cls(rng.uniform(-bound, bound, size=(d_out, 2 * d_in)), seed)

    @classmethod
    def identity(cls, d: int) -> "LayerWeights":
        """[I | 0]: passes h_i through and ignores the neighbor term."""
        return cls(np.hstack([np.eye(d), np.zeros((d, d))]))


def graph_layer_forward(features: np.ndarray, graph: KnnGraph, w: LayerWeights) -> np.ndarray:
    H = np.asarray(features, dtype=np.float64)
    if H.ndim != 2:
        raise ShapeMismatchError(f"features must be 2-D, got shape {H.shape}")
    n, d = H.shape
    if graph.n != n:
        raise ShapeMismatchError(f"graph has {graph.n} nodes but features have {n} rows")
    if w.d_in != d:
        raise ShapeMismatchError(f"weights expect D_in={w.d_in}, features have D={d}")

    out = np.empty((n, w.d_out))
    for lo in range(0, n, CHUNK):
        hi = min(lo + CHUNK, n)
        center = H[lo:hi, None, :]
        nbrs = H[graph.neighbors[lo:hi]]
        edges = np.concatenate([np.broadcast_to(center, nbrs.shape), nbrs - center], axis=2)
        out[lo:hi] = np.einsum("oc,nkc->nko", w.matrix, edges).max(axis=1)
    return out


def stack_encoder(
    cloud: PointCloud,
    widths: Sequence[int] = DEFAULT_WIDTHS,
    k: int = DEFAULT_K,
    seed: int = 0,
    weights: Optional[Sequence[LayerWeights]] = None,
) -> List[np.ndarray]:
    """
    Runs the layer stack and returns every layer's output features.
    `weights` overrides the seeded per-layer weights when given.
    """
    if not widths:
        raise GeometryError("widths must name at least one layer")
    if weights is not None and len(weights) != len(widths):
        raise ShapeMismatchError(f"{len(weights)} weight matrices for {len(widths)} layers")

    H = cloud.points
    outputs = []
    for layer, width in enumerate(widths):
        graph = knn_graph(H, k)
        if weights is not None:
            w = weights[layer]
            if w.d_out != width:
                raise ShapeMismatchError(f"layer {layer}: weights produce {w.d_out} channels, width is {width}")
        else:
            w = LayerWeights.random(H.shape[1], width, seed, layer)
        H = graph_layer_forward(H, graph, w)
        outputs.append(H)
        logger.debug("[Encoder] layer %d: %d -> %d channels, k=%d", layer, w.d_in, width, graph.k)
    return outputs
