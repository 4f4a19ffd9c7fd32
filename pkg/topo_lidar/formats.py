"""
File formats.

- XYZ: whitespace text, one point per line, '#' comments.
- PLY: binary little-endian float32 x y z (ascii PLY is also read).
- RIMG: b"RIMG", '<u4' height, '<u4' width, then height*width records of
  '<f4' (x, y, z, range) in row-major order; range 0 marks an invalid cell.
- Diagram CSV: `birth,death` header, `inf` for essential bars.
- Gradient CSV: `idx,gx,gy,gz`.
- KITTI poses: 12 floats per line, the row-major 3x4 [R|t].
- Masks: 8-bit PGM with the gray levels of `pairgen.PGM_LEVELS`.
"""

import io
import logging
import os
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image

from .core.geometry import PointCloud, ProjectionConfig, RangeImage, to_point_cloud, to_range_image
from .errors import FormatError
from .evaluation.trajectory import PoseTrajectory
from .pairgen import PGM_LEVELS, Label, SegmentationMask
from .topology.persistence import PersistenceDiagram

logger = logging.getLogger(__name__)

RIMG_MAGIC = b"RIMG"
FLOAT_FMT = "%.17g"


def _suffix(path: str) -> str:
    return os.path.splitext(str(path))[1].lower()


def _loadtxt(path: str, **kwargs) -> np.ndarray:
    try:
        return np.loadtxt(path, comments="#", ndmin=2, **kwargs)
    except ValueError as e:
        raise FormatError(f"{path}: unreadable numeric text ({e})")


def _header_lines(header: Optional[Sequence[str]]) -> str:
    return "".join(f"# {line}\n" for line in (header or ()))


# --- point clouds -----------------------------------------------------------

def read_xyz(path: str) -> PointCloud:
    data = _loadtxt(path)
    if data.size == 0:
        return PointCloud(np.zeros((0, 3)))
    if data.shape[1] < 3:
        raise FormatError(f"{path}: expected at least 3 columns, got {data.shape[1]}")
    return PointCloud(data[:, :3])


def write_xyz(path: str, cloud: PointCloud, header: Optional[Sequence[str]] = None):
    with open(path, "w") as f:
        f.write(_header_lines(header))
        np.savetxt(f, cloud.points, fmt=FLOAT_FMT)


def write_ply(path: str, cloud: PointCloud):
    header = (
        "ply\nformat binary_little_endian 1.0\n"
        f"element vertex {len(cloud)}\n"
        "property float x\nproperty float y\nproperty float z\nend_header\n"
    )
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(cloud.points.astype("<f4").tobytes())


_PLY_TYPES = {
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
    "uchar": "u1", "uint8": "u1", "char": "i1", "int8": "i1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
}


def read_ply(path: str) -> PointCloud:
    with open(path, "rb") as f:
        if f.readline().strip() != b"ply":
            raise FormatError(f"{path}: not a PLY file")
        fmt, count, props, in_vertex = None, 0, [], False
        while True:
            line = f.readline()
            if not line:
                raise FormatError(f"{path}: PLY header has no end_header")
            tokens = line.decode("ascii", "replace").split()
            if not tokens or tokens[0] == "comment":
                continue
            if tokens[0] == "end_header":
                break
            if tokens[0] == "format":
                fmt = tokens[1]
            elif tokens[0] == "element":
                in_vertex = tokens[1] == "vertex"
                if in_vertex:
                    count = int(tokens[2])
            elif tokens[0] == "property" and in_vertex:
                if tokens[1] == "list" or tokens[1] not in _PLY_TYPES:
                    raise FormatError(f"{path}: unsupported vertex property {' '.join(tokens[1:])}")
                props.append((tokens[2], _PLY_TYPES[tokens[1]]))
        body = f.read()

    names = [p for p, _ in props]
    if not {"x", "y", "z"} <= set(names):
        raise FormatError(f"{path}: vertex element lacks x, y, z")

    if fmt == "ascii":
        table = np.loadtxt(io.StringIO(body.decode("ascii")), ndmin=2, max_rows=count) if count else np.zeros((0, len(props)))
        cols = [names.index(c) for c in ("x", "y", "z")]
        return PointCloud(table[:, cols])
    if fmt not in ("binary_little_endian", "binary_big_endian"):
        raise FormatError(f"{path}: unsupported PLY format {fmt!r}")

    order = "<" if fmt == "binary_little_endian" else ">"
    dtype = np.dtype([(name, order + code) for name, code in props])
    if len(body) < count * dtype.itemsize:
        raise FormatError(f"{path}: PLY body truncated")
    table = np.frombuffer(body, dtype=dtype, count=count)
    return PointCloud(np.stack([table["x"], table["y"], table["z"]], axis=1).astype(np.float64))


def read_rimg(path: str) -> RangeImage:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != RIMG_MAGIC or len(raw) < 12:
        raise FormatError(f"{path}: not a RIMG file")
    h, w = np.frombuffer(raw, dtype="<u4", count=2, offset=4)
    expected = 12 + int(h) * int(w) * 16
    if len(raw) != expected:
        raise FormatError(f"{path}: RIMG body has {len(raw) - 12} bytes, expected {expected - 12}")
    cells = np.frombuffer(raw, dtype="<f4", offset=12).reshape(int(h), int(w), 4).astype(np.float64)
    ranges = cells[..., 3]
    return RangeImage(cells[..., :3], ranges, ranges > 0.0)


def write_rimg(path: str, img: RangeImage):
    cells = np.concatenate([img.xyz, img.ranges[..., None]], axis=2).astype("<f4")
    with open(path, "wb") as f:
        f.write(RIMG_MAGIC)
        f.write(np.array([img.height, img.width], dtype="<u4").tobytes())
        f.write(cells.tobytes())


def read_cloud(path: str) -> PointCloud:
    suffix = _suffix(path)
    if suffix == ".ply":
        return read_ply(path)
    if suffix == ".rimg":
        return to_point_cloud(read_rimg(path))
    return read_xyz(path)


def write_cloud(path: str, cloud: PointCloud, cfg: ProjectionConfig = ProjectionConfig(),
                header: Optional[Sequence[str]] = None):
    suffix = _suffix(path)
    if suffix == ".ply":
        write_ply(path, cloud)
    elif suffix == ".rimg":
        write_rimg(path, to_range_image(cloud, cfg))
    else:
        write_xyz(path, cloud, header)


def read_image(path: str, cfg: ProjectionConfig = ProjectionConfig()) -> RangeImage:
    """A RIMG as stored, or any other cloud projected with `cfg`."""
    if _suffix(path) == ".rimg":
        return read_rimg(path)
    return to_range_image(read_cloud(path), cfg)


def read_grid(path: str) -> np.ndarray:
    """A scalar grid: the range channel of a RIMG (invalid cells at the max range) or a text matrix."""
    if _suffix(path) == ".rimg":
        return read_rimg(path).range_grid()
    grid = _loadtxt(path)
    if grid.size == 0:
        raise FormatError(f"{path}: empty grid")
    return grid


# --- tables -----------------------------------------------------------------

def write_diagram(path: str, diagram: PersistenceDiagram, header: Optional[Sequence[str]] = None):
    rows = np.array(diagram.rows(), dtype=np.float64).reshape(-1, 2)
    with open(path, "w") as f:
        f.write(_header_lines(header))
        f.write("birth,death\n")
        np.savetxt(f, rows, fmt=FLOAT_FMT, delimiter=",")


def read_diagram(path: str) -> List[Tuple[float, float]]:
    with open(path) as f:
        lines = [line.strip() for line in f if line.strip() and not line.startswith("#")]
    if not lines or lines[0] != "birth,death":
        raise FormatError(f"{path}: diagram CSV must start with a birth,death header")
    try:
        return [tuple(float(v) for v in line.split(",")) for line in lines[1:]]
    except ValueError as e:
        raise FormatError(f"{path}: unreadable diagram row ({e})")


def write_gradient(path: str, grad: np.ndarray, header: Optional[Sequence[str]] = None):
    table = np.column_stack([np.arange(len(grad)), grad])
    with open(path, "w") as f:
        f.write(_header_lines(header))
        f.write("idx,gx,gy,gz\n")
        np.savetxt(f, table, fmt=["%d"] + [FLOAT_FMT] * grad.shape[1], delimiter=",")


def write_table(path: str, columns: Sequence[str], rows: Iterable[Sequence[float]],
                header: Optional[Sequence[str]] = None):
    with open(path, "w") as f:
        f.write(_header_lines(header))
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(str(v) if isinstance(v, (int, np.integer)) else FLOAT_FMT % v for v in row) + "\n")


def write_features(path: str, features: np.ndarray, header: Optional[Sequence[str]] = None):
    with open(path, "w") as f:
        f.write(_header_lines(header))
        np.savetxt(f, features, fmt=FLOAT_FMT, delimiter=",")


# --- poses ------------------------------------------------------------------

def read_poses(path: str) -> PoseTrajectory:
    rows = _loadtxt(path)
    if rows.shape[1] != 12:
        raise FormatError(f"{path}: KITTI poses need 12 values per line, got {rows.shape[1]}")
    return PoseTrajectory.from_matrices(rows)


def write_poses(path: str, traj: PoseTrajectory):
    np.savetxt(path, traj.kitti_rows(), fmt=FLOAT_FMT)


# --- masks ------------------------------------------------------------------

def write_mask(path: str, mask: SegmentationMask):
    lut = np.zeros(len(Label), dtype=np.uint8)
    for label, level in PGM_LEVELS.items():
        lut[label] = level
    Image.fromarray(lut[mask.labels]).save(path, format="PPM")


def read_mask(path: str) -> SegmentationMask:
    try:
        gray = np.array(Image.open(path).convert("L"))
    except OSError as e:
        raise FormatError(f"{path}: unreadable mask image ({e})")
    labels = np.full(gray.shape, 255, dtype=np.uint8)
    for label, level in PGM_LEVELS.items():
        labels[gray == level] = label
    if np.any(labels == 255):
        raise FormatError(f"{path}: mask holds gray levels outside {sorted(PGM_LEVELS.values())}")
    return SegmentationMask(labels)
