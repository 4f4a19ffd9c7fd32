"""
Point-cloud and range-image types, spherical projection and sparsification.

Range images follow the KITTI convention: rows are beams ordered top to
bottom by pitch, columns are azimuth bins with azimuth 0 (the +x axis)
at the image center and azimuth decreasing to the right.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ..errors import GeometryError, ShapeMismatchError

logger = logging.getLogger(__name__)

RANGE_RTOL = 1e-5

# (row_stride, col_stride) for the beam settings evaluated on KITTI/CARLA-64 (64x1024)
# and ARD-16 (16x1024) scans.
SPARSITY_PRESETS: Dict[str, Tuple[int, int]] = {
    "kitti-dense": (1, 8),
    "kitti-sparse": (4, 8),
    "kitti-8beam": (8, 8),
    "kitti-4beam": (16, 8),
    "ard16": (1, 8),
    "ard8": (2, 8),
}


@dataclass(frozen=True)
class PointCloud:
    """Ordered 3-D points in meters with optional per-point feature vectors."""

    points: np.ndarray
    features: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise GeometryError(f"points must have shape (n, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise GeometryError("point coordinates must be finite")
        object.__setattr__(self, "points", pts)

        if self.features is not None:
            feats = np.asarray(self.features, dtype=np.float64)
            if feats.ndim != 2 or feats.shape[0] != len(pts):
                raise GeometryError(
                    f"features must have shape ({len(pts)}, D), got {feats.shape}"
                )
            if not np.all(np.isfinite(feats)):
                raise GeometryError("feature values must be finite")
            object.__setattr__(self, "features", feats)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def ranges(self) -> np.ndarray:
        return np.linalg.norm(self.points, axis=1)

    def with_points(self, points: np.ndarray) -> "PointCloud":
        return PointCloud(points, self.features)


@dataclass(frozen=True)
class ProjectionConfig:
    height: int = 64
    width: int = 1024
    fov_up: float = 3.0
    fov_down: float = -25.0

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise GeometryError(f"grid must be at least 1x1, got {self.height}x{self.width}")
        if not self.fov_up > self.fov_down:
            raise GeometryError(
                f"fov_up ({self.fov_up}) must exceed fov_down ({self.fov_down})"
            )


@dataclass(frozen=True)
class RangeImage:
    """
    H x W grid of LiDAR returns.
    Invalid cells carry zeros in every channel; valid cells have range > 0.
    """

    xyz: np.ndarray
    ranges: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        xyz = np.asarray(self.xyz, dtype=np.float64)
        ranges = np.asarray(self.ranges, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if xyz.ndim != 3 or xyz.shape[2] != 3:
            raise GeometryError(f"xyz must have shape (H, W, 3), got {xyz.shape}")
        if ranges.shape != xyz.shape[:2] or valid.shape != xyz.shape[:2]:
            raise ShapeMismatchError("xyz, ranges and valid must share the same H x W grid")

        xyz = np.where(valid[..., None], xyz, 0.0)
        ranges = np.where(valid, ranges, 0.0)
        if not (np.all(np.isfinite(xyz)) and np.all(np.isfinite(ranges))):
            raise GeometryError("range image values must be finite")
        if np.any(ranges[valid] <= 0.0):
            raise GeometryError("valid cells must have a positive range")
        norms = np.linalg.norm(xyz[valid], axis=1)
        if not np.allclose(norms, ranges[valid], rtol=RANGE_RTOL, atol=0.0):
            raise GeometryError("cell range disagrees with its (x, y, z) coordinates")

        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "ranges", ranges)
        object.__setattr__(self, "valid", valid)

    @classmethod
    def empty(cls, height: int, width: int) -> "RangeImage":
        return cls(
            np.zeros((height, width, 3)), np.zeros((height, width)), np.zeros((height, width), bool)
        )

    @classmethod
    def from_xyz(cls, xyz: np.ndarray, valid: Optional[np.ndarray] = None) -> "RangeImage":
        """Builds an image from a coordinate grid; all-zero cells are invalid unless `valid` says otherwise."""
        xyz = np.asarray(xyz, dtype=np.float64)
        ranges = np.linalg.norm(xyz, axis=2)
        if valid is None:
            valid = ranges > 0.0
        return cls(xyz, ranges, valid)

    @property
    def height(self) -> int:
        return self.xyz.shape[0]

    @property
    def width(self) -> int:
        return self.xyz.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.xyz.shape[:2]

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    def range_grid(self, fill: Optional[float] = None) -> np.ndarray:
        """Scalar range grid with invalid cells set to `fill` (default: the largest valid range)."""
        if fill is None:
            fill = float(self.ranges[self.valid].max()) if self.n_valid else 0.0
        return np.where(self.valid, self.ranges, fill)

    def invalidate(self, cells: np.ndarray) -> "RangeImage":
        keep = self.valid & ~np.asarray(cells, dtype=bool)
        return RangeImage(self.xyz, self.ranges, keep)


def to_range_image(cloud: PointCloud, cfg: ProjectionConfig = ProjectionConfig()) -> RangeImage:
    """
    Spherical projection of a cloud onto an H x W grid.

    Zero-range points are dropped. When several points land in the same cell the
    nearer one wins; equal ranges fall back to the smaller point index.
    """
    if len(cloud) == 0:
        raise GeometryError("empty input: cannot project a cloud with no points")

    pts = cloud.points
    r = np.linalg.norm(pts, axis=1)
    idx = np.flatnonzero(r > 0.0)
    image = RangeImage.empty(cfg.height, cfg.width)
    if len(idx) == 0:
        logger.warning("[Projection] every point has zero range; image is empty")
        return image

    pts, r = pts[idx], r[idx]
    fov_up = np.deg2rad(cfg.fov_up)
    fov_down = np.deg2rad(cfg.fov_down)
    pitch = np.arcsin(np.clip(pts[:, 2] / r, -1.0, 1.0))
    yaw = np.arctan2(pts[:, 1], pts[:, 0])

    rows = np.floor((1.0 - (pitch - fov_down) / (fov_up - fov_down)) * cfg.height)
    cols = np.floor(0.5 * (1.0 - yaw / np.pi) * cfg.width)
    rows = np.clip(rows, 0, cfg.height - 1).astype(np.int64)
    cols = np.clip(cols, 0, cfg.width - 1).astype(np.int64)

    cells = rows * cfg.width + cols
    order = np.lexsort((idx, r))
    _, first = np.unique(cells[order], return_index=True)
    winners = order[first]
    if len(winners) < len(idx):
        logger.debug("[Projection] %d points lost to cell collisions", len(idx) - len(winners))

    xyz = np.zeros((cfg.height * cfg.width, 3))
    xyz[cells[winners]] = pts[winners]
    return RangeImage.from_xyz(xyz.reshape(cfg.height, cfg.width, 3))


def to_point_cloud(img: RangeImage) -> PointCloud:
    """One point per valid cell, in row-major cell order."""
    return PointCloud(img.xyz[img.valid])


def sparsify(img: RangeImage, row_stride: int, col_stride: int) -> RangeImage:
    """Keeps every `row_stride`-th beam and every `col_stride`-th azimuth column, starting at 0."""
    if row_stride < 1 or col_stride < 1:
        raise GeometryError(f"stride mismatch: strides must be >= 1, got ({row_stride}, {col_stride})")
    if img.height % row_stride or img.width % col_stride:
        raise GeometryError(
            f"stride mismatch: ({row_stride}, {col_stride}) does not divide "
            f"{img.height}x{img.width}"
        )
    sl = (slice(None, None, row_stride), slice(None, None, col_stride))
    return RangeImage(
        np.ascontiguousarray(img.xyz[sl]),
        np.ascontiguousarray(img.ranges[sl]),
        np.ascontiguousarray(img.valid[sl]),
    )


def sparsify_preset(img: RangeImage, name: str) -> RangeImage:
    if name not in SPARSITY_PRESETS:
        raise GeometryError(
            f"unknown sparsity preset {name!r}; choose from {sorted(SPARSITY_PRESETS)}"
        )
    return sparsify(img, *SPARSITY_PRESETS[name])
