"""
Scan comparison metrics: Chamfer, exact EMD, bird's-eye JSD, Gaussian MMD
and range RMSE.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist, pdist
from scipy.special import rel_entr

from ..core.geometry import PointCloud, RangeImage
from ..errors import MetricError, ShapeMismatchError
from ..settings import get_settings

logger = logging.getLogger(__name__)

Cloud = Union[PointCloud, np.ndarray]


@dataclass(frozen=True)
class HistogramConfig:
    bins_x: int = 100
    bins_y: int = 100
    extent: Tuple[float, float, float, float] = (-50.0, 50.0, -50.0, 50.0)
    smoothing: float = 1e-12

    def __post_init__(self):
        if self.bins_x < 1 or self.bins_y < 1:
            raise MetricError(f"histogram needs >= 1 bin per axis, got {self.bins_x}x{self.bins_y}")
        xmin, xmax, ymin, ymax = self.extent
        if not (xmin < xmax and ymin < ymax):
            raise MetricError(f"histogram extent must be well ordered, got {self.extent}")
        if self.smoothing < 0:
            raise MetricError(f"smoothing must be >= 0, got {self.smoothing}")


@dataclass(frozen=True)
class KernelConfig:
    bandwidth: Union[float, str] = "median"

    def __post_init__(self):
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "median":
                raise MetricError(f"bandwidth must be a positive number or 'median', got {self.bandwidth!r}")
        elif not self.bandwidth > 0:
            raise MetricError(f"bandwidth must be > 0, got {self.bandwidth}")

    def resolve(self, pooled: np.ndarray) -> float:
        if not isinstance(self.bandwidth, str):
            return float(self.bandwidth)
        dists = pdist(pooled)
        sigma = float(np.median(dists)) if len(dists) else 0.0
        return sigma if sigma > 0 else 1.0


def _points(cloud: Cloud, name: str) -> np.ndarray:
    X = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2 or len(X) == 0:
        raise MetricError(f"empty cloud: {name} has no points")
    return X


def chamfer(S: Cloud, T: Cloud, threads: Optional[int] = None) -> float:
    """Sum of squared nearest-neighbor distances in both directions."""
    A, B = _points(S, "S"), _points(T, "T")
    workers = threads or get_settings().threads
    d_ab, _ = cKDTree(B).query(A, k=1, workers=workers)
    d_ba, _ = cKDTree(A).query(B, k=1, workers=workers)
    return float(np.sum(d_ab**2) + np.sum(d_ba**2))


def emd_exact(S: Cloud, T: Cloud) -> float:
    """Minimum total Euclidean transport over bijections, solved as an exact assignment."""
    A, B = _points(S, "S"), _points(T, "T")
    if len(A) != len(B):
        raise MetricError(f"EMD requires equal sizes, got {len(A)} and {len(B)}")
    cost = cdist(A, B)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def _bev_histogram(X: np.ndarray, cfg: HistogramConfig) -> np.ndarray:
    xmin, xmax, ymin, ymax = cfg.extent
    y = X[:, 1] if X.shape[1] > 1 else np.zeros(len(X))
    hist, _, _ = np.histogram2d(
        X[:, 0], y, bins=(cfg.bins_x, cfg.bins_y), range=[[xmin, xmax], [ymin, ymax]]
    )
    return hist


def jsd(S: Cloud, T: Cloud, cfg: HistogramConfig = HistogramConfig()) -> float:
    """Jensen-Shannon divergence (natural log) of the bird's-eye (x, y) occupancy histograms."""
    hs = _bev_histogram(_points(S, "S"), cfg)
    ht = _bev_histogram(_points(T, "T"), cfg)
    if hs.sum() == 0 or ht.sum() == 0:
        raise MetricError("empty histogram: every point of one cloud lies outside the extent")

    P = hs + cfg.smoothing
    Q = ht + cfg.smoothing
    P /= P.sum()
    Q /= Q.sum()
    M = 0.5 * (P + Q)
    value = 0.5 * np.sum(rel_entr(P, M)) + 0.5 * np.sum(rel_entr(Q, M))
    return float(np.clip(value, 0.0, np.log(2.0)))


def mmd(S: Cloud, T: Cloud, cfg: KernelConfig = KernelConfig()) -> float:
    """RKHS distance between the Gaussian-kernel mean embeddings of S and T."""
    A, B = _points(S, "S"), _points(T, "T")
    sigma = cfg.resolve(np.vstack([A, B]))
    gamma = 1.0 / (2.0 * sigma**2)

    k_ss = np.exp(-gamma * cdist(A, A, "sqeuclidean")).mean()
    k_tt = np.exp(-gamma * cdist(B, B, "sqeuclidean")).mean()
    k_st = np.exp(-gamma * cdist(A, B, "sqeuclidean")).mean()
    return float(np.sqrt(max(k_ss + k_tt - 2.0 * k_st, 0.0)))


def rmse(A: RangeImage, B: RangeImage) -> float:
    """Root mean squared range difference over cells valid in both images."""
    if A.shape != B.shape:
        raise ShapeMismatchError(f"range images differ in shape: {A.shape} vs {B.shape}")
    both = A.valid & B.valid
    if not both.any():
        raise MetricError("no co-valid cells: the images share no valid cell")
    diff = A.ranges[both] - B.ranges[both]
    return float(np.sqrt(np.mean(diff**2)))


def compare_scans(
    S: PointCloud,
    T: PointCloud,
    images: Optional[Tuple[RangeImage, RangeImage]] = None,
    skip: Iterable[str] = (),
    hist: HistogramConfig = HistogramConfig(),
    kernel: KernelConfig = KernelConfig(),
) -> Dict[str, Optional[float]]:
    """
    All five metrics as one report. `rmse` needs the range images and is None
    without them; `emd` is None when the clouds differ in size.
    """
    skip = set(skip)
    report: Dict[str, Optional[float]] = {}
    report["cd"] = None if "cd" in skip else chamfer(S, T)
    report["jsd"] = None if "jsd" in skip else jsd(S, T, hist)
    report["mmd"] = None if "mmd" in skip else mmd(S, T, kernel)

    if "rmse" in skip or images is None:
        report["rmse"] = None
    else:
        report["rmse"] = rmse(*images)

    if "emd" in skip:
        report["emd"] = None
    elif len(S) != len(T):
        logger.warning("[Metrics] EMD skipped: clouds have %d and %d points", len(S), len(T))
        report["emd"] = None
    else:
        report["emd"] = emd_exact(S, T)
    return report
