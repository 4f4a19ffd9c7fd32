"""
Paired static/dynamic scan generation.

A scan and its range image are cut into azimuth sectors. The sector with the
most dynamic cells is the source; nearly empty sectors are targets. The static
copy drops every dynamic cell, and the dynamic copy receives the source
sector's dynamic cells transplanted into each target sector.
"""

import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .core.geometry import RangeImage
from .errors import PairGenError, ShapeMismatchError

logger = logging.getLogger(__name__)

DEFAULT_SECTORS = 8
DEFAULT_OCCUPANCY = 0.02


class Label(IntEnum):
    INVALID = 0
    GROUND = 1
    STATIC = 2
    DYNAMIC = 3


# gray levels used when masks are stored as PGM
PGM_LEVELS = {Label.INVALID: 0, Label.GROUND: 64, Label.STATIC: 128, Label.DYNAMIC: 255}


@dataclass(frozen=True)
class SegmentationMask:
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise PairGenError(f"mask must be 2-D, got shape {labels.shape}")
        if not np.isin(labels, [int(l) for l in Label]).all():
            raise PairGenError("mask holds values outside the label set")
        object.__setattr__(self, "labels", labels.astype(np.uint8))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.labels.shape

    def is_(self, label: Label) -> np.ndarray:
        return self.labels == label

    def check_against(self, img: RangeImage):
        if self.shape != img.shape:
            raise ShapeMismatchError(f"mask shape {self.shape} does not match image shape {img.shape}")
        if np.any(~img.valid & (self.labels != Label.INVALID)):
            raise PairGenError("mask labels an invalid image cell as valid content")

    @classmethod
    def from_image(cls, img: RangeImage, dynamic: np.ndarray, ground: Optional[np.ndarray] = None) -> "SegmentationMask":
        """Labels valid cells STATIC, then GROUND and DYNAMIC where the boolean grids say so."""
        labels = np.where(img.valid, Label.STATIC, Label.INVALID).astype(np.uint8)
        if ground is not None:
            labels[img.valid & np.asarray(ground, bool)] = Label.GROUND
        labels[img.valid & np.asarray(dynamic, bool)] = Label.DYNAMIC
        return cls(labels)


@dataclass(frozen=True)
class SectorLayout:
    width: int
    bands: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        bands = tuple((int(a), int(b)) for a, b in self.bands)
        edge = 0
        for a, b in bands:
            if a != edge or b <= a:
                raise PairGenError(f"sector bands must tile [0, {self.width}) contiguously, got {bands}")
            edge = b
        if edge != self.width:
            raise PairGenError(f"sector bands stop at column {edge}, width is {self.width}")
        object.__setattr__(self, "bands", bands)

    @property
    def n_sectors(self) -> int:
        return len(self.bands)

    def band_width(self, index: int) -> int:
        a, b = self.bands[index]
        return b - a

    def columns(self, index: int) -> slice:
        return slice(*self.bands[index])

    def check_index(self, index: int):
        if not 0 <= index < self.n_sectors:
            raise PairGenError(f"sector index {index} out of range [0, {self.n_sectors})")


class ScanPair(NamedTuple):
    static: RangeImage
    dynamic: RangeImage
    mask: SegmentationMask


def divide_sectors(width: int, n: int = DEFAULT_SECTORS) -> SectorLayout:
    """Contiguous column bands of near-equal width; the first `width % n` bands get one extra column."""
    if n < 1:
        raise PairGenError(f"need at least one sector, got {n}")
    if width < n:
        raise PairGenError(f"width {width} cannot hold {n} sectors")
    base, extra = divmod(width, n)
    bands, start = [], 0
    for i in range(n):
        stop = start + base + (1 if i < extra else 0)
        bands.append((start, stop))
        start = stop
    return SectorLayout(width, tuple(bands))


def _check_layout(layout: SectorLayout, shape: Tuple[int, int]):
    if layout.width != shape[1]:
        raise ShapeMismatchError(f"layout covers {layout.width} columns, scan has {shape[1]}")


def select_source_sector(mask: SegmentationMask, layout: SectorLayout) -> int:
    _check_layout(layout, mask.shape)
    dynamic = mask.is_(Label.DYNAMIC)
    counts = [int(dynamic[:, layout.columns(i)].sum()) for i in range(layout.n_sectors)]
    if max(counts) == 0:
        raise PairGenError("no dynamic content: no sector holds a dynamic cell")
    # argmax returns the first maximum, so ties go to the smaller index
    source = int(np.argmax(counts))
    logger.debug("[PairGen] dynamic counts per sector %s; source %d", counts, source)
    return source


def sector_occupancy(img: RangeImage, mask: SegmentationMask, layout: SectorLayout) -> np.ndarray:
    """Per-sector fraction of cells that are valid and not ground."""
    mask.check_against(img)
    _check_layout(layout, img.shape)
    occupied = img.valid & ~mask.is_(Label.GROUND)
    return np.array([occupied[:, layout.columns(i)].mean() for i in range(layout.n_sectors)])


def select_target_sectors(
    img: RangeImage,
    mask: SegmentationMask,
    layout: SectorLayout,
    max_targets: int = 2,
    occupancy_threshold: float = DEFAULT_OCCUPANCY,
    source: Optional[int] = None,
) -> List[int]:
    """
    Up to `max_targets` sectors, other than the source, whose occupancy is below
    the threshold; emptiest first, ties by index. The source defaults to
    `select_source_sector` when the mask has dynamic content.
    """
    if max_targets < 1:
        raise PairGenError(f"max_targets must be >= 1, got {max_targets}")
    if not 0.0 <= occupancy_threshold <= 1.0:
        raise PairGenError(f"occupancy threshold must lie in [0, 1], got {occupancy_threshold}")

    occupancy = sector_occupancy(img, mask, layout)
    if source is None and mask.is_(Label.DYNAMIC).any():
        source = select_source_sector(mask, layout)

    candidates = [i for i in range(layout.n_sectors) if i != source and occupancy[i] < occupancy_threshold]
    candidates.sort(key=lambda i: (occupancy[i], i))
    targets = candidates[:max_targets]
    logger.info("[PairGen] target sectors %s (source %s)", targets, source)
    return targets


def _rotation_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def azimuth_shift(shift: int, width: int) -> float:
    """Yaw change of a column shift: columns grow as azimuth decreases."""
    return -2.0 * np.pi * shift / width


def generate_pair(
    img: RangeImage,
    mask: SegmentationMask,
    layout: SectorLayout,
    targets: Sequence[int],
    source: Optional[int] = None,
) -> ScanPair:
    mask.check_against(img)
    _check_layout(layout, img.shape)
    if source is None:
        source = select_source_sector(mask, layout)
    layout.check_index(source)
    targets = [int(t) for t in targets]
    for t in targets:
        layout.check_index(t)
        if t == source:
            raise PairGenError(f"target sector {t} is the source sector")
    if len(set(targets)) != len(targets):
        raise PairGenError(f"target sectors repeat: {targets}")

    dynamic_cells = mask.is_(Label.DYNAMIC)
    static = img.invalidate(dynamic_cells)
    static_labels = np.where(dynamic_cells, Label.INVALID, mask.labels).astype(np.uint8)

    s0, _ = layout.bands[source]
    rows, cols = np.nonzero(dynamic_cells[:, layout.columns(source)])
    offsets = cols
    cols = cols + s0

    xyz = static.xyz.copy()
    ranges = static.ranges.copy()
    valid = static.valid.copy()
    labels = static_labels.copy()

    for t in targets:
        t0, t1 = layout.bands[t]
        if len(offsets) and offsets.max() >= t1 - t0:
            raise PairGenError(
                f"insufficient target width: sector {t} has {t1 - t0} columns, "
                f"source content spans {offsets.max() + 1}"
            )
        shift = t0 - s0
        R = _rotation_z(azimuth_shift(shift, img.width))
        new_cols = cols + shift
        xyz[rows, new_cols] = img.xyz[rows, cols] @ R.T
        ranges[rows, new_cols] = img.ranges[rows, cols]
        valid[rows, new_cols] = True
        labels[rows, new_cols] = Label.DYNAMIC
        logger.debug("[PairGen] %d cells from sector %d into sector %d", len(rows), source, t)

    dynamic = RangeImage(xyz, ranges, valid)
    return ScanPair(static, dynamic, SegmentationMask(labels))


def generate_sequence(
    frames: Sequence[RangeImage],
    masks: Sequence[SegmentationMask],
    layout: SectorLayout,
    targets: Sequence[int],
    source: Optional[int] = None,
) -> List[ScanPair]:
    """
    Pairs a contiguous sequence with the same source and target sectors in
    every frame, so inserted objects stay in place across scans. The source
    defaults to the first frame that holds dynamic content.
    """
    if len(frames) != len(masks):
        raise ShapeMismatchError(f"{len(frames)} frames but {len(masks)} masks")
    if source is None:
        for m in masks:
            if m.is_(Label.DYNAMIC).any():
                source = select_source_sector(m, layout)
                break
        else:
            raise PairGenError("no dynamic content: no frame of the sequence holds a dynamic cell")
    logger.info("[PairGen] sequence of %d frames, source %d, targets %s", len(frames), source, list(targets))
    return [generate_pair(img, m, layout, targets, source) for img, m in zip(frames, masks)]


def mask_from_difference(
    dynamic: RangeImage,
    augmented: RangeImage,
    threshold: float,
    ground_height: Optional[float] = None,
) -> SegmentationMask:
    """
    Segments a dynamic scan by subtracting its augmented static counterpart:
    cells whose range moved by more than `threshold`, or that the static scan
    lacks, are dynamic. Cells below `ground_height` are ground.
    """
    if dynamic.shape != augmented.shape:
        raise ShapeMismatchError(f"range images differ in shape: {dynamic.shape} vs {augmented.shape}")
    if threshold < 0:
        raise PairGenError(f"threshold must be >= 0, got {threshold}")

    valid = dynamic.valid
    both = valid & augmented.valid
    moved = both & (np.abs(dynamic.ranges - augmented.ranges) > threshold)
    missing = valid & ~augmented.valid

    labels = np.where(valid, Label.STATIC, Label.INVALID).astype(np.uint8)
    labels[moved | missing] = Label.DYNAMIC
    if ground_height is not None:
        labels[valid & (dynamic.xyz[..., 2] < ground_height)] = Label.GROUND
    return SegmentationMask(labels)


def count_labels(mask: SegmentationMask) -> Dict[Label, int]:
    return {label: int(np.count_nonzero(mask.labels == label)) for label in Label}
