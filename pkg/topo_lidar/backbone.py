"""
Backbone optimizer: gradient descent on point coordinates under the
topological loss, optionally anchored to a static target scan.

Driving the total MST weight down pulls the scan into a single connected
component (the "static backbone") while the L1 anchor keeps it close to the
target geometry. Points that meet are kept together: each group of
coincident points moves by the sum of its members' gradients, and MST edges
shorter than the merge radius are closed outright.
"""

import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from .core.geometry import PointCloud
from .errors import GeometryError, OptimizationError, ShapeMismatchError
from .topology.loss import mst_gradient

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_HALVINGS = 30


@dataclass(frozen=True)
class OptimizerConfig:
    steps: int = 200
    step_size: float = 0.05
    anchor_weight: float = 0.0
    backtracking: bool = True
    record_every: int = 10
    topo_weight: float = 1.0
    # None uses step_size; 0 turns merging off
    merge_radius: Optional[float] = None

    def __post_init__(self):
        if self.steps < 1:
            raise GeometryError(f"steps must be >= 1, got {self.steps}")
        if self.record_every < 1:
            raise GeometryError(f"record_every must be >= 1, got {self.record_every}")
        if not self.step_size > 0:
            raise GeometryError(f"step_size must be > 0, got {self.step_size}")
        if not self.anchor_weight >= 0:
            raise GeometryError(f"anchor_weight must be >= 0, got {self.anchor_weight}")
        if not self.topo_weight >= 0:
            raise GeometryError(f"topo_weight must be >= 0, got {self.topo_weight}")
        if self.merge_radius is not None and not self.merge_radius >= 0:
            raise GeometryError(f"merge_radius must be >= 0, got {self.merge_radius}")

    @property
    def merge_within(self) -> float:
        return self.step_size if self.merge_radius is None else self.merge_radius


class Snapshot(NamedTuple):
    step: int
    cloud: PointCloud
    topo_loss: float
    anchor_loss: float
    total_loss: float


@dataclass
class OptimizationTrace:
    snapshots: List[Snapshot] = field(default_factory=list)
    final: Optional[PointCloud] = None

    @property
    def initial_topo(self) -> float:
        return self.snapshots[0].topo_loss

    @property
    def final_topo(self) -> float:
        return self.snapshots[-1].topo_loss

    def totals(self) -> List[float]:
        return [s.total_loss for s in self.snapshots]

    def history(self) -> List[Tuple[int, float, float, float]]:
        """(step, topo, anchor, total) rows for the loss-history CSV."""
        return [(s.step, s.topo_loss, s.anchor_loss, s.total_loss) for s in self.snapshots]


class _Evaluation(NamedTuple):
    topo: float
    anchor: float
    total: float
    grad: np.ndarray
    edges: List[Tuple[int, int, float]]


def coincident_groups(X: np.ndarray) -> np.ndarray:
    """Label per point; points with identical coordinates share a label."""
    _, labels = np.unique(X, axis=0, return_inverse=True)
    return labels.ravel()


class BackboneOptimizer:
    """Holds the objective for one run; `run` performs the descent."""

    def __init__(self, cfg: OptimizerConfig, target: Optional[np.ndarray] = None):
        self.cfg = cfg
        self.target = target

    def evaluate(self, X: np.ndarray, step: int) -> _Evaluation:
        if not np.all(np.isfinite(X)):
            raise OptimizationError("non-finite point coordinates", step)

        report = mst_gradient(X)
        grad = self.cfg.topo_weight * report.per_point_grad
        anchor = 0.0
        if self.target is not None:
            diff = X - self.target
            n = len(X)
            anchor = float(np.abs(diff).sum() / n)
            if self.cfg.anchor_weight > 0:
                grad = grad + self.cfg.anchor_weight * np.sign(diff) / n
        total = self.cfg.topo_weight * report.loss + self.cfg.anchor_weight * anchor

        if not np.isfinite(total):
            raise OptimizationError(f"non-finite loss {total}", step)
        if not np.all(np.isfinite(grad)):
            raise OptimizationError("non-finite gradient", step)
        return _Evaluation(report.loss, anchor, total, grad, report.contributing_edges)

    @staticmethod
    def descent_direction(X: np.ndarray, grad: np.ndarray) -> Tuple[np.ndarray, float]:
        """
        Per-point step in which every group of coincident points moves by the
        sum of its members' gradients, and the slope of the objective along it.
        """
        labels = coincident_groups(X)
        G = np.zeros((labels.max() + 1, X.shape[1]))
        np.add.at(G, labels, grad)
        return G[labels], float(np.sum(G * G))

    def _line_search(self, X: np.ndarray, current: _Evaluation, direction: np.ndarray, slope: float, step: int):
        """Armijo backtracking from the configured step size; None when no step is accepted."""
        eta = self.cfg.step_size
        for _ in range(MAX_HALVINGS):
            candidate = X - eta * direction
            trial = self.evaluate(candidate, step)
            if trial.total <= current.total - ARMIJO_C * eta * slope:
                return candidate, trial
            eta *= 0.5
        return None

    def _merge_short_edges(self, X: np.ndarray, current: _Evaluation, step: int) -> Tuple[np.ndarray, _Evaluation]:
        """
        Closes MST edges no longer than the merge radius by moving one endpoint
        group onto the other. Moving a group of MST degree <= 2 cannot lengthen
        the tree; other merges are only kept when the objective does not rise.
        """
        radius = self.cfg.merge_within
        if radius <= 0 or self.cfg.topo_weight == 0:
            return X, current
        short = sorted((w, u, v) for u, v, w in current.edges if 0.0 < w <= radius)
        if not short:
            return X, current

        labels = coincident_groups(X)
        degree = np.zeros(labels.max() + 1, dtype=np.int64)
        for u, v, w in current.edges:
            if w > 0.0:
                degree[labels[u]] += 1
                degree[labels[v]] += 1

        safe, risky, touched = [], [], set()
        for _, u, v in short:
            gu, gv = labels[u], labels[v]
            if gu in touched or gv in touched:
                continue
            touched.update((gu, gv))
            mover, onto = (gv, u) if degree[gv] <= degree[gu] else (gu, v)
            (safe if degree[mover] <= 2 else risky).append((mover, onto))

        attempts = [safe + risky]
        if risky and safe:
            attempts.append(safe)
        for moves in attempts:
            Y = X.copy()
            for mover, onto in moves:
                Y[labels == mover] = X[onto]
            trial = self.evaluate(Y, step)
            if trial.total <= current.total:
                logger.debug("[Optimizer] step %d merged %d short edges", step, len(moves))
                return Y, trial
        return X, current

    def run(self, cloud: PointCloud) -> OptimizationTrace:
        cfg = self.cfg
        X = cloud.points.copy()
        trace = OptimizationTrace()

        def record(step: int, ev: _Evaluation):
            trace.snapshots.append(Snapshot(step, cloud.with_points(X.copy()), ev.topo, ev.anchor, ev.total))

        current = self.evaluate(X, 0)
        record(0, current)
        last = 0

        for step in range(1, cfg.steps + 1):
            direction, slope = self.descent_direction(X, current.grad)
            if slope == 0.0:
                logger.info("[Optimizer] zero gradient at step %d; stopping", step - 1)
                break

            if cfg.backtracking:
                accepted = self._line_search(X, current, direction, slope, step)
                if accepted is None:
                    logger.info("[Optimizer] line search found no descent at step %d; stopping", step)
                    break
                X, current = accepted
            else:
                X = X - cfg.step_size * direction
                current = self.evaluate(X, step)
            X, current = self._merge_short_edges(X, current, step)

            last = step
            if step % cfg.record_every == 0:
                record(step, current)
                logger.debug("[Optimizer] step %d topo=%.6g anchor=%.6g total=%.6g", step, current.topo, current.anchor, current.total)

        if trace.snapshots[-1].step != last:
            record(last, current)

        trace.final = trace.snapshots[-1].cloud
        logger.info(
            "[Optimizer] %d steps, topo %.6g -> %.6g", last, trace.initial_topo, trace.final_topo
        )
        return trace


def optimize_backbone(
    cloud: PointCloud,
    target: Optional[PointCloud] = None,
    cfg: OptimizerConfig = OptimizerConfig(),
) -> OptimizationTrace:
    if len(cloud) < 2:
        raise GeometryError(f"backbone optimization needs at least 2 points, got {len(cloud)}")
    anchor = None
    if target is not None:
        if len(target) != len(cloud):
            raise ShapeMismatchError(
                f"target has {len(target)} points but the cloud has {len(cloud)}"
            )
        anchor = target.points
    return BackboneOptimizer(cfg, anchor).run(cloud)
