"""
Topological loss over 0-dim persistence and its analytic gradient.

In the flag filtration every finite death is an MST edge length, so the loss
is the MST weight and each edge contributes a pair of opposite unit vectors.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..core.geometry import PointCloud, RangeImage, to_point_cloud
from ..errors import GeometryError, ShapeMismatchError
from .persistence import PersistenceDiagram, as_vectors, flag_ph0

logger = logging.getLogger(__name__)

Vectors = Union[PointCloud, np.ndarray]


@dataclass(frozen=True)
class TopoLossReport:
    loss: float
    per_point_grad: np.ndarray
    contributing_edges: List[Tuple[int, int, float]] = field(default_factory=list)
    degenerate: bool = False


def topo_loss(diagram: PersistenceDiagram) -> float:
    """Total persistence of the finite bars; essential bars never count."""
    return float(np.sum(diagram.deaths - diagram.births))


def mst_gradient(X: np.ndarray) -> TopoLossReport:
    """Loss and per-point gradient of an (n, D) array; zero-length MST edges contribute nothing."""
    diagram = flag_ph0(X)
    us = diagram.generator_edges[:, 0]
    vs = diagram.generator_edges[:, 1]
    weights = diagram.deaths

    live = weights > 0.0
    unit = np.zeros_like(X[us])
    unit[live] = (X[us[live]] - X[vs[live]]) / weights[live, None]
    grad = np.zeros_like(X)
    np.add.at(grad, us, unit)
    np.add.at(grad, vs, -unit)

    edges = [(int(u), int(v), float(w)) for u, v, w in zip(us, vs, weights)]
    return TopoLossReport(topo_loss(diagram), grad, edges, not bool(np.all(live)))


def topo_loss_grad(cloud: Vectors) -> TopoLossReport:
    X = as_vectors(cloud)
    if len(X) < 2:
        raise GeometryError(f"topological gradient needs at least 2 points, got {len(X)}")

    report = mst_gradient(X)
    if report.degenerate:
        n_zero = sum(1 for _, _, w in report.contributing_edges if w == 0.0)
        logger.warning("[TopoLoss] %d MST edges join coincident points; their subgradient is zero", n_zero)
    return report


def embedding_topo_loss(features: Vectors) -> float:
    """Topological loss of a feature set under Euclidean distance in feature space."""
    X = features.features if isinstance(features, PointCloud) and features.features is not None else features
    X = as_vectors(X)
    if len(X) == 0:
        raise GeometryError("empty input: embedding has no rows")
    return topo_loss(flag_ph0(X))


def augmentation_error(aug: RangeImage, target: RangeImage) -> float:
    """Mean over co-valid cells of the summed absolute (x, y, z) difference."""
    if aug.shape != target.shape:
        raise ShapeMismatchError(f"range images differ in shape: {aug.shape} vs {target.shape}")
    both = aug.valid & target.valid
    if not both.any():
        logger.warning("[TopoLoss] no cell is valid in both images; AE term is 0")
        return 0.0
    return float(np.abs(aug.xyz[both] - target.xyz[both]).sum(axis=1).mean())


def total_loss(aug: RangeImage, target: RangeImage, embeddings: Sequence[Vectors] = ()) -> float:
    """Scan topology + intermediate embedding topology + absolute error to the target."""
    ae = augmentation_error(aug, target)
    cloud = to_point_cloud(aug)
    scan = topo_loss(flag_ph0(cloud)) if len(cloud) else 0.0
    emb = sum(embedding_topo_loss(e) for e in embeddings)
    logger.debug("[TopoLoss] scan=%.6g embeddings=%.6g ae=%.6g", scan, emb, ae)
    return scan + emb + ae
