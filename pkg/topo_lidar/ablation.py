"""
Ablation of the topological constraint.
Compares the backbone optimizer with and without the topological term on
synthetic wall scenes, over a list of seeds, with paired statistics.
"""

import json
import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .backbone import OptimizerConfig, optimize_backbone
from .core.geometry import PointCloud
from .errors import TopoLidarError
from .evaluation.metrics import chamfer
from .evaluation.statistics import StatisticalEvaluator
from .topology.persistence import betti0_at, flag_ph0

logger = logging.getLogger(__name__)

# U-shaped set of walls, (start, end) in the xy-plane, meters
WALLS = (
    ((-5.0, 5.0), (5.0, 5.0)),
    ((5.0, 5.0), (5.0, -5.0)),
    ((5.0, -5.0), (-5.0, -5.0)),
)


@dataclass(frozen=True)
class SceneConfig:
    n_points: int = 60
    wall_height: float = 2.0
    noise: float = 0.05
    outlier_fraction: float = 0.1
    outlier_shift: float = 1.5
    alpha: float = 1.0


def make_wall_scene(rng: np.random.Generator, cfg: SceneConfig = SceneConfig()) -> np.ndarray:
    """Points sampled uniformly on the walls, the clean static scene."""
    starts = np.array([s for s, _ in WALLS])
    ends = np.array([e for _, e in WALLS])
    lengths = np.linalg.norm(ends - starts, axis=1)
    wall = rng.choice(len(WALLS), size=cfg.n_points, p=lengths / lengths.sum())
    t = rng.uniform(0.0, 1.0, size=cfg.n_points)
    xy = starts[wall] + t[:, None] * (ends[wall] - starts[wall])
    z = rng.uniform(0.0, cfg.wall_height, size=cfg.n_points)
    return np.column_stack([xy, z])


def corrupt(clean: np.ndarray, rng: np.random.Generator, cfg: SceneConfig = SceneConfig()) -> np.ndarray:
    """Gaussian jitter plus a fraction of points pushed radially outward in xy."""
    noisy = clean + rng.normal(0.0, cfg.noise, size=clean.shape)
    n_out = int(round(cfg.outlier_fraction * len(clean)))
    idx = rng.choice(len(clean), size=n_out, replace=False)
    radial = noisy[idx, :2] / np.linalg.norm(noisy[idx, :2], axis=1, keepdims=True)
    noisy[idx, :2] += radial * rng.uniform(cfg.outlier_shift, 2 * cfg.outlier_shift, size=(n_out, 1))
    return noisy


class AblationStudy:
    def __init__(self, scene: SceneConfig = SceneConfig(), anchor_weight: float = 1.0):
        self.scene = scene
        self.variants = {
            "topo+anchor": {"topo_weight": 1.0, "anchor_weight": anchor_weight},
            "anchor-only": {"topo_weight": 0.0, "anchor_weight": anchor_weight},
        }
        self.evaluator = StatisticalEvaluator(alpha=0.05)
        self.results = {}

    def run_variant(self, name: str, overrides: dict, seeds: Sequence[int], base: OptimizerConfig) -> Dict:
        """Runs one variant on every seed; scenes depend only on the seed."""
        cfg = replace(base, **overrides)
        logger.info("[Ablation] variant %s: topo_weight=%g anchor_weight=%g",
                    name, cfg.topo_weight, cfg.anchor_weight)

        rows = []
        for seed in seeds:
            rng = np.random.default_rng(seed)
            clean = make_wall_scene(rng, self.scene)
            observed = corrupt(clean, rng, self.scene)
            trace = optimize_backbone(PointCloud(observed), PointCloud(clean), cfg)
            final = trace.final
            rows.append({
                "seed": int(seed),
                "topo_loss": trace.final_topo,
                "chamfer": chamfer(final, clean),
                "betti0": betti0_at(flag_ph0(final), self.scene.alpha),
            })

        return {
            "name": name,
            "config": {"topo_weight": cfg.topo_weight, "anchor_weight": cfg.anchor_weight, "steps": cfg.steps},
            "per_seed": rows,
            "mean": {k: float(np.mean([r[k] for r in rows])) for k in ("topo_loss", "chamfer", "betti0")},
        }

    def run(self, seeds: Sequence[int], cfg: Optional[OptimizerConfig] = None,
            output_file: Optional[str] = None) -> Dict:
        """Runs every variant and compares topo+anchor against anchor-only per metric."""
        base = cfg or OptimizerConfig(steps=100)
        seeds = list(seeds)
        if len(seeds) < 2:
            raise TopoLidarError(f"ablation needs at least 2 seeds for paired statistics, got {len(seeds)}")

        for name, overrides in self.variants.items():
            self.results[name] = self.run_variant(name, overrides, seeds, base)

        comparisons: List[Dict] = []
        full, ablated = self.results["topo+anchor"], self.results["anchor-only"]
        for metric in ("topo_loss", "chamfer", "betti0"):
            comparison = self.evaluator.compare_variants(
                [r[metric] for r in full["per_seed"]],
                [r[metric] for r in ablated["per_seed"]],
                f"topo+anchor {metric}", f"anchor-only {metric}",
            )
            comparison["metric"] = metric
            comparisons.append(comparison)

        report = {
            "seeds": seeds,
            "variants": self.results,
            "statistics": self.evaluator.generate_report(comparisons),
        }
        if output_file:
            with open(output_file, "w") as f:
                json.dump(report, f, indent=2)
            logger.info("[Ablation] results saved to %s", output_file)
        return report
