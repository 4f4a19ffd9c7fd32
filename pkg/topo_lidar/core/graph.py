import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from sklearn.neighbors import KDTree

from ..errors import GeometryError
from .geometry import PointCloud

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KnnGraph:
    """Directed k-NN graph: row i lists the k nearest neighbors of node i, nearest first."""

    neighbors: np.ndarray

    def __post_init__(self):
        nbrs = np.asarray(self.neighbors, dtype=np.int64)
        if nbrs.ndim != 2:
            raise GeometryError(f"neighbor table must be 2-D, got shape {nbrs.shape}")
        n = len(nbrs)
        if nbrs.size and (nbrs.min() < 0 or nbrs.max() >= n):
            raise GeometryError("neighbor index out of range")
        if np.any(nbrs == np.arange(n)[:, None]):
            raise GeometryError("k-NN graph must not contain self-loops")
        object.__setattr__(self, "neighbors", nbrs)

    @property
    def n(self) -> int:
        return self.neighbors.shape[0]

    @property
    def k(self) -> int:
        return self.neighbors.shape[1]


def knn_graph(points: Union[PointCloud, np.ndarray], k: int) -> KnnGraph:
    """
    Exact k-NN graph in coordinate or feature space.

    The kd-tree only proposes candidates: every point within the (k+1)-th
    query distance is re-ranked by its exact squared distance, with ties going
    to the smaller index, so the result does not depend on tree internals.
    """
    X = points.points if isinstance(points, PointCloud) else np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise GeometryError(f"expected an (n, D) array of vectors, got shape {X.shape}")
    n = len(X)
    if n < 2:
        raise GeometryError(f"degenerate graph: need at least 2 nodes, got {n}")
    if k < 1:
        raise GeometryError(f"k must be >= 1, got {k}")
    k_eff = min(k, n - 1)

    tree = KDTree(X)
    dist, _ = tree.query(X, k=k_eff + 1)
    radius = dist[:, -1] * (1.0 + 1e-9) + 1e-12
    candidates = tree.query_radius(X, r=radius)

    neighbors = np.empty((n, k_eff), dtype=np.int64)
    for i in range(n):
        cand = candidates[i]
        cand = cand[cand != i]
        d2 = np.sum((X[cand] - X[i]) ** 2, axis=1)
        order = np.lexsort((cand, d2))
        neighbors[i] = cand[order[:k_eff]]

    logger.debug("[KnnGraph] built n=%d k=%d dim=%d", n, k_eff, X.shape[1])
    return KnnGraph(neighbors)
