"""
0-dimensional persistent homology by Kruskal + union-find.

Only vertices and edges affect dimension 0, so both filtrations reduce to a
sorted edge list swept through a union-find. Edges are processed in
ascending (value, u, v) order, which fixes every tie-break.
"""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import Delaunay, QhullError
from scipy.spatial.distance import pdist

from ..core.geometry import PointCloud
from ..core.union_find import UnionFind
from ..errors import GeometryError

logger = logging.getLogger(__name__)

CONNECTIVITIES = ("4", "tri", "triangulated")
DELAUNAY_MIN_POINTS = 32
RANK_TOL = 1e-9


@dataclass(frozen=True)
class FiltrationEdge:
    u: int
    v: int
    value: float

    def __post_init__(self):
        if not self.u < self.v:
            raise GeometryError(f"filtration edge needs u < v, got ({self.u}, {self.v})")
        if not np.isfinite(self.value):
            raise GeometryError("filtration edge value must be finite")


@dataclass(frozen=True)
class PersistenceDiagram:
    """
    Dimension-0 diagram: finite (birth, death) pairs, the births of the
    essential bars, and for each finite pair the edge whose insertion killed it.
    """

    finite_pairs: np.ndarray
    essential_births: np.ndarray
    generator_edges: np.ndarray

    def __post_init__(self):
        pairs = np.asarray(self.finite_pairs, dtype=np.float64).reshape(-1, 2)
        gens = np.asarray(self.generator_edges, dtype=np.int64).reshape(-1, 2)
        essential = np.sort(np.asarray(self.essential_births, dtype=np.float64).ravel())
        if len(gens) and len(gens) != len(pairs):
            raise GeometryError("generator_edges must match finite_pairs one to one")
        if np.any(pairs[:, 1] < pairs[:, 0]):
            raise GeometryError("every finite pair needs death >= birth")
        object.__setattr__(self, "finite_pairs", pairs)
        object.__setattr__(self, "essential_births", essential)
        object.__setattr__(self, "generator_edges", gens)

    def __len__(self) -> int:
        return len(self.finite_pairs)

    @property
    def births(self) -> np.ndarray:
        return self.finite_pairs[:, 0]

    @property
    def deaths(self) -> np.ndarray:
        return self.finite_pairs[:, 1]

    @property
    def persistence(self) -> np.ndarray:
        return self.deaths - self.births

    @property
    def n_essential(self) -> int:
        return len(self.essential_births)

    def edges(self) -> List[FiltrationEdge]:
        return [FiltrationEdge(int(u), int(v), float(d)) for (u, v), d in zip(self.generator_edges, self.deaths)]

    def rows(self) -> List[Tuple[float, float]]:
        """All bars as (birth, death) rows, essential bars last with death = inf."""
        rows = [(float(b), float(d)) for b, d in self.finite_pairs]
        rows.extend((float(b), float("inf")) for b in self.essential_births)
        return rows


def _sweep(
    births: Sequence[float],
    us: np.ndarray,
    vs: np.ndarray,
    values: np.ndarray,
    keep_zero: bool,
) -> PersistenceDiagram:
    order = np.lexsort((vs, us, values))
    uf = UnionFind(births)
    pairs: List[Tuple[float, float]] = []
    gens: List[Tuple[int, int]] = []

    for u, v, w in zip(us[order].tolist(), vs[order].tolist(), values[order].tolist()):
        dying_birth = uf.union(u, v)
        if dying_birth is None:
            continue
        if keep_zero or w > dying_birth:
            pairs.append((dying_birth, w))
            gens.append((u, v))
        if uf.n_components == 1:
            break

    return PersistenceDiagram(np.array(pairs).reshape(-1, 2), uf.root_births(), np.array(gens).reshape(-1, 2))


def as_vectors(cloud: Union[PointCloud, np.ndarray]) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    X = np.asarray(cloud, dtype=np.float64)
    if X.ndim != 2:
        raise GeometryError(f"expected an (n, D) array of vectors, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise GeometryError("vectors must be finite")
    return X


def _delaunay_edges(Y: np.ndarray) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """
    Edges of a Delaunay triangulation of distinct points, taken in their affine
    hull so planar scans in 3-D still triangulate. None when qhull cannot place
    every point in a simplex.
    """
    centered = Y - Y.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.count_nonzero(s > RANK_TOL * s[0]))
    coords = centered @ vt[:rank].T
    if rank == 1:
        order = np.argsort(coords[:, 0], kind="stable")
        return order[:-1], order[1:]
    try:
        simplices = Delaunay(coords).simplices
    except QhullError:
        return None
    if len(np.unique(simplices)) != len(Y):
        return None
    pairs = np.concatenate([simplices[:, [a, b]] for a, b in combinations(range(rank + 1), 2)])
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    return pairs[:, 0], pairs[:, 1]


def candidate_edges(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    (u, v, length) edges that contain every edge Kruskal can pick.

    In up to three dimensions the Euclidean MST lies inside the Delaunay
    triangulation, so only its edges are swept. Coincident points are tied to
    their lowest index by zero-length edges and only that representative is
    triangulated, which leaves the (value, u, v) tie-breaks unchanged.
    Larger feature spaces and small sets use every pair.
    """
    n, dim = X.shape
    if dim > 3 or n < DELAUNAY_MIN_POINTS:
        us, vs = np.triu_indices(n, k=1)
        return us, vs, pdist(X) if n > 1 else np.zeros(0)

    _, first, inverse = np.unique(X, axis=0, return_index=True, return_inverse=True)
    reps = first[inverse.ravel()]
    dup = np.flatnonzero(reps != np.arange(n))

    edges = _delaunay_edges(X[first]) if len(first) >= DELAUNAY_MIN_POINTS else None
    if edges is None:
        a, b = np.triu_indices(len(first), k=1)
    else:
        a, b = edges
        logger.debug("[Persistence] %d Delaunay edges for %d distinct points", len(a), len(first))
    ru, rv = first[a], first[b]
    us = np.concatenate([np.minimum(ru, rv), reps[dup]])
    vs = np.concatenate([np.maximum(ru, rv), dup])
    values = np.sqrt(np.sum((X[us] - X[vs]) ** 2, axis=1))
    return us, vs, values


def flag_ph0(
    cloud: Union[PointCloud, np.ndarray],
    alpha_max: Optional[float] = None,
) -> PersistenceDiagram:
    """
    Flag (Vietoris-Rips) filtration of a point set in any dimension.

    Every vertex is born at 0 and the finite deaths are the Euclidean minimum
    spanning tree edge lengths; edges longer than `alpha_max` never enter.
    """
    X = as_vectors(cloud)
    n = len(X)
    if n == 0:
        raise GeometryError("empty input: flag filtration needs at least one point")

    us, vs, values = candidate_edges(X)
    if alpha_max is not None:
        keep = values <= alpha_max
        us, vs, values = us[keep], vs[keep], values[keep]

    diagram = _sweep(np.zeros(n), us, vs, values, keep_zero=True)
    logger.debug("[Persistence] flag n=%d finite=%d essential=%d", n, len(diagram), diagram.n_essential)
    return diagram


def grid_edges(shape: Tuple[int, int], connectivity: str = "4") -> Tuple[np.ndarray, np.ndarray]:
    """Edges of the image grid on row-major vertex indices; `tri` adds the (r,c)-(r+1,c+1) diagonal."""
    if connectivity not in CONNECTIVITIES:
        raise GeometryError(f"connectivity must be one of {CONNECTIVITIES}, got {connectivity!r}")
    h, w = shape
    idx = np.arange(h * w).reshape(h, w)
    blocks = [(idx[:, :-1], idx[:, 1:]), (idx[:-1, :], idx[1:, :])]
    if connectivity in ("tri", "triangulated"):
        blocks.append((idx[:-1, :-1], idx[1:, 1:]))
    us = np.concatenate([a.ravel() for a, _ in blocks])
    vs = np.concatenate([b.ravel() for _, b in blocks])
    return us, vs


def sublevel_ph0(
    img: np.ndarray,
    connectivity: str = "4",
    keep_zero: bool = False,
) -> PersistenceDiagram:
    """
    Sub-level set filtration of a scalar grid.

    A pixel enters at its own value and an edge at the max of its endpoints.
    Pairs with death == birth are dropped unless `keep_zero` is set.
    """
    grid = np.asarray(img, dtype=np.float64)
    if grid.ndim != 2 or grid.size == 0:
        raise GeometryError(f"expected a non-empty 2-D grid, got shape {grid.shape}")
    if not np.all(np.isfinite(grid)):
        raise GeometryError("grid values must be finite")

    f = grid.ravel()
    us, vs = grid_edges(grid.shape, connectivity)
    values = np.maximum(f[us], f[vs])
    return _sweep(f, us, vs, values, keep_zero=keep_zero)


def betti0_at(diagram: PersistenceDiagram, alpha: float) -> int:
    """Number of connected components alive at filtration value `alpha`."""
    pairs = diagram.finite_pairs
    alive = np.count_nonzero((pairs[:, 0] <= alpha) & (alpha < pairs[:, 1]))
    return int(alive + np.count_nonzero(diagram.essential_births <= alpha))
