"""
Command-line front end.

Flags are checked at parse time and every option object a subcommand needs
is built into a RunConfig before any input is read, so a bad flag is always
a usage error. Each subcommand then reads its inputs and computes its
results before the first output file is written. Exit codes: 0 success,
1 usage error, 2 data error.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from typing import Callable, FrozenSet, List, Optional, Sequence

from . import formats
from .ablation import AblationStudy
from .backbone import OptimizerConfig, optimize_backbone
from .core.geometry import SPARSITY_PRESETS, ProjectionConfig, sparsify, sparsify_preset
from .encoder import DEFAULT_K, DEFAULT_WIDTHS, stack_encoder
from .errors import TopoLidarError
from .evaluation.metrics import HistogramConfig, KernelConfig, compare_scans
from .evaluation.trajectory import ate, rpe
from .pairgen import count_labels, divide_sectors, generate_pair, select_source_sector, select_target_sectors
from .settings import get_settings
from .topology.loss import topo_loss_grad
from .topology.persistence import flag_ph0, sublevel_ph0

logger = logging.getLogger(__name__)

METRIC_NAMES = ("cd", "jsd", "mmd", "rmse", "emd")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- flag parsing helpers ---------------------------------------------------

def _bounded(kind: Callable, name: str, low, strict: bool) -> Callable:
    def parse(text: str):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {name}, got {text!r}")
        if not (value > low if strict else value >= low):
            raise argparse.ArgumentTypeError(f"expected {name}, got {text!r}")
        return value
    return parse


positive_int = _bounded(int, "a positive integer", 0, strict=True)
non_negative_int = _bounded(int, "a non-negative integer", 0, strict=False)
positive_float = _bounded(float, "a positive number", 0.0, strict=True)
non_negative_float = _bounded(float, "a non-negative number", 0.0, strict=False)


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _positive_int_list(text: str) -> List[int]:
    values = _int_list(text)
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"expected comma-separated positive integers, got {text!r}")
    return values


def _float_list(n: int) -> Callable[[str], List[float]]:
    def parse(text: str) -> List[float]:
        try:
            values = [float(v) for v in text.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
        if len(values) != n:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
        return values
    return parse


def _bandwidth(text: str):
    if text == "median":
        return text
    return positive_float(text)


def _add_projection_flags(p: argparse.ArgumentParser):
    p.add_argument("--height", type=positive_int, default=64)
    p.add_argument("--width", type=positive_int, default=1024)
    p.add_argument("--fov-up", type=float, default=3.0)
    p.add_argument("--fov-down", type=float, default=-25.0)


@dataclass(frozen=True)
class RunConfig:
    """One invocation: the subcommand, its seed and output, and the validated option objects it runs with."""

    command: str
    seed: Optional[int] = None
    out: Optional[str] = None
    optimizer: Optional[OptimizerConfig] = None
    projection: Optional[ProjectionConfig] = None
    hist: Optional[HistogramConfig] = None
    kernel: Optional[KernelConfig] = None
    skip: FrozenSet[str] = frozenset()

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        try:
            return cls(
                command=ns.command,
                seed=getattr(ns, "seed", None),
                out=getattr(ns, "out_dir", None) or getattr(ns, "out", None),
                optimizer=cls._optimizer(ns),
                projection=cls._projection(ns),
                hist=cls._histogram(ns),
                kernel=KernelConfig(ns.bandwidth) if ns.command == "metrics" else None,
                skip=cls._skip(ns),
            )
        except TopoLidarError as e:
            raise UsageError(f"{ns.command}: {e}")

    @staticmethod
    def _optimizer(ns) -> Optional[OptimizerConfig]:
        if ns.command == "optimize":
            return OptimizerConfig(
                steps=ns.steps, step_size=ns.lr, anchor_weight=ns.anchor,
                backtracking=not ns.no_backtracking, record_every=ns.record_every,
            )
        if ns.command == "ablate":
            return OptimizerConfig(steps=ns.steps, step_size=ns.lr)
        return None

    @staticmethod
    def _projection(ns) -> Optional[ProjectionConfig]:
        if not hasattr(ns, "height"):
            return None
        if getattr(ns, "preset", None) and (ns.rows is not None or ns.cols is not None):
            raise UsageError("sparsify: --preset excludes --rows/--cols")
        return ProjectionConfig(ns.height, ns.width, ns.fov_up, ns.fov_down)

    @staticmethod
    def _histogram(ns) -> Optional[HistogramConfig]:
        if ns.command != "metrics":
            return None
        if len(ns.bins) not in (1, 2):
            raise UsageError(f"metrics: --bins takes one or two integers, got {ns.bins}")
        return HistogramConfig(ns.bins[0], ns.bins[-1], tuple(ns.extent), ns.smoothing)

    @staticmethod
    def _skip(ns) -> FrozenSet[str]:
        skip = frozenset(getattr(ns, "skip", None) or ())
        unknown = skip - set(METRIC_NAMES)
        if unknown:
            raise UsageError(f"metrics: unknown metric(s) in --skip: {sorted(unknown)}")
        return skip


def _emit_json(payload, out: Optional[str]):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as f:
            f.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _make_dir(path: str):
    os.makedirs(path, exist_ok=True)


# --- subcommands ------------------------------------------------------------

def cmd_ph(args, config: RunConfig) -> int:
    cloud = formats.read_cloud(args.cloud)
    diagram = flag_ph0(cloud, alpha_max=args.alpha_max)
    formats.write_diagram(config.out, diagram)
    logger.info("[CLI] %d finite bars, %d essential", len(diagram), diagram.n_essential)
    return 0


def cmd_image_ph(args, config: RunConfig) -> int:
    grid = formats.read_grid(args.image)
    diagram = sublevel_ph0(grid, connectivity=args.connectivity, keep_zero=args.keep_zero)
    formats.write_diagram(config.out, diagram)
    return 0


def cmd_loss_grad(args, config: RunConfig) -> int:
    cloud = formats.read_cloud(args.cloud)
    report = topo_loss_grad(cloud)
    formats.write_gradient(config.out, report.per_point_grad, header=[f"loss={report.loss!r}"])
    _emit_json({"loss": report.loss, "degenerate": report.degenerate,
                "n_edges": len(report.contributing_edges)}, None)
    return 0


def cmd_optimize(args, config: RunConfig) -> int:
    cloud = formats.read_cloud(args.cloud)
    target = formats.read_cloud(args.target) if args.target else None
    trace = optimize_backbone(cloud, target, config.optimizer)

    _make_dir(config.out)
    for snap in trace.snapshots:
        formats.write_xyz(os.path.join(config.out, f"snapshot_{snap.step:05d}.xyz"), snap.cloud,
                          header=[f"step={snap.step} topo={snap.topo_loss!r}"])
    formats.write_table(os.path.join(config.out, "history.csv"),
                        ["step", "topo", "anchor", "total"], trace.history())
    return 0


def cmd_encode(args, config: RunConfig) -> int:
    cloud = formats.read_cloud(args.cloud)
    outputs = stack_encoder(cloud, widths=args.widths, k=args.k, seed=config.seed)

    _make_dir(config.out)
    for layer, feats in enumerate(outputs):
        formats.write_features(
            os.path.join(config.out, f"layer_{layer + 1}.csv"), feats,
            header=[f"seed={config.seed} layer={layer + 1} k={args.k} width={feats.shape[1]}"],
        )
    return 0


def cmd_metrics(args, config: RunConfig) -> int:
    S = formats.read_cloud(args.a)
    T = formats.read_cloud(args.b)
    images = None
    if args.a.lower().endswith(".rimg") and args.b.lower().endswith(".rimg"):
        images = (formats.read_rimg(args.a), formats.read_rimg(args.b))
    report = compare_scans(S, T, images=images, skip=config.skip, hist=config.hist, kernel=config.kernel)
    _emit_json(report, config.out)
    return 0


def cmd_traj_eval(args, config: RunConfig) -> int:
    gt = formats.read_poses(args.ground_truth)
    est = formats.read_poses(args.estimate)
    trans, rot = rpe(est, gt, args.delta)
    _emit_json({"ate": ate(est, gt), "rpe_trans": trans, "rpe_rot": rot}, config.out)
    return 0


def cmd_pairgen(args, config: RunConfig) -> int:
    img = formats.read_image(args.image, config.projection)
    mask = formats.read_mask(args.mask)
    layout = divide_sectors(img.width, args.sectors)
    source = select_source_sector(mask, layout) if args.source is None else args.source
    if args.targets is not None:
        targets = args.targets
    else:
        targets = select_target_sectors(img, mask, layout, args.max_targets, args.occupancy, source)
    pair = generate_pair(img, mask, layout, targets, source)

    _make_dir(config.out)
    formats.write_rimg(os.path.join(config.out, "static.rimg"), pair.static)
    formats.write_rimg(os.path.join(config.out, "dynamic.rimg"), pair.dynamic)
    formats.write_mask(os.path.join(config.out, "mask.pgm"), pair.mask)
    summary = {
        "source": source,
        "targets": list(targets),
        "labels": {label.name.lower(): n for label, n in count_labels(pair.mask).items()},
    }
    _emit_json(summary, os.path.join(config.out, "pairgen.json"))
    return 0


def cmd_convert(args, config: RunConfig) -> int:
    if args.src.lower().endswith(".rimg") and args.dst.lower().endswith(".rimg"):
        formats.write_rimg(args.dst, formats.read_rimg(args.src))
        return 0
    cloud = formats.read_cloud(args.src)
    if args.dst.lower().endswith(".rimg") and len(cloud) == 0:
        raise TopoLidarError("empty input: nothing to project")
    formats.write_cloud(args.dst, cloud, config.projection)
    return 0


def cmd_sparsify(args, config: RunConfig) -> int:
    img = formats.read_image(args.src, config.projection)
    if args.preset:
        out = sparsify_preset(img, args.preset)
    else:
        rows = 1 if args.rows is None else args.rows
        cols = 1 if args.cols is None else args.cols
        out = sparsify(img, rows, cols)
    formats.write_rimg(args.dst, out)
    return 0


def cmd_ablate(args, config: RunConfig) -> int:
    study = AblationStudy(anchor_weight=args.anchor)
    report = study.run(range(args.seeds), config.optimizer)
    _emit_json(report, config.out)
    return 0


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topo_lidar", description="Topology-regularized LiDAR scan tools")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("ph", help="flag-filtration 0-dim diagram of a point cloud")
    p.add_argument("cloud")
    p.add_argument("--out", required=True)
    p.add_argument("--alpha-max", type=non_negative_float)
    p.set_defaults(handler=cmd_ph)

    p = sub.add_parser("image-ph", help="sub-level 0-dim diagram of a range image or text grid")
    p.add_argument("image")
    p.add_argument("--out", required=True)
    p.add_argument("--connectivity", choices=("4", "tri"), default="4")
    p.add_argument("--keep-zero", action="store_true")
    p.set_defaults(handler=cmd_image_ph)

    p = sub.add_parser("loss-grad", help="topological loss and per-point gradient")
    p.add_argument("cloud")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_loss_grad)

    p = sub.add_parser("optimize", help="backbone optimization of a point cloud")
    p.add_argument("cloud")
    p.add_argument("--target")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--steps", type=positive_int, default=200)
    p.add_argument("--lr", type=positive_float, default=0.05)
    p.add_argument("--anchor", type=non_negative_float, default=0.0)
    p.add_argument("--record-every", type=positive_int, default=10)
    p.add_argument("--no-backtracking", action="store_true")
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("encode", help="per-layer features of the graph encoder")
    p.add_argument("cloud")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--k", type=positive_int, default=DEFAULT_K)
    p.add_argument("--widths", type=_positive_int_list, default=list(DEFAULT_WIDTHS))
    p.set_defaults(handler=cmd_encode)

    p = sub.add_parser("metrics", help="compare two scans")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--out")
    p.add_argument("--skip", type=lambda s: [v for v in s.split(",") if v])
    p.add_argument("--bins", type=_positive_int_list, default=[100, 100])
    p.add_argument("--extent", type=_float_list(4), default=[-50.0, 50.0, -50.0, 50.0])
    p.add_argument("--smoothing", type=non_negative_float, default=1e-12)
    p.add_argument("--bandwidth", type=_bandwidth, default="median")
    p.set_defaults(handler=cmd_metrics)

    p = sub.add_parser("traj-eval", help="ATE and RPE of an estimated trajectory")
    p.add_argument("ground_truth")
    p.add_argument("estimate")
    p.add_argument("--delta", type=positive_int, default=1)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_traj_eval)

    p = sub.add_parser("pairgen", help="static/dynamic pair by sector transplantation")
    p.add_argument("image")
    p.add_argument("mask")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--sectors", type=positive_int, default=8)
    p.add_argument("--source", type=non_negative_int)
    p.add_argument("--targets", type=_int_list)
    p.add_argument("--max-targets", type=positive_int, default=2)
    p.add_argument("--occupancy", type=non_negative_float, default=0.02)
    _add_projection_flags(p)
    p.set_defaults(handler=cmd_pairgen)

    p = sub.add_parser("convert", help="convert between XYZ, PLY and RIMG")
    p.add_argument("src")
    p.add_argument("dst")
    _add_projection_flags(p)
    p.set_defaults(handler=cmd_convert)

    p = sub.add_parser("sparsify", help="keep every n-th beam and column of a range image")
    p.add_argument("src")
    p.add_argument("dst")
    p.add_argument("--rows", type=positive_int)
    p.add_argument("--cols", type=positive_int)
    p.add_argument("--preset", choices=sorted(SPARSITY_PRESETS))
    _add_projection_flags(p)
    p.set_defaults(handler=cmd_sparsify)

    p = sub.add_parser("ablate", help="topo+anchor vs anchor-only over seeds")
    p.add_argument("--seeds", type=positive_int, default=10)
    p.add_argument("--steps", type=positive_int, default=100)
    p.add_argument("--lr", type=positive_float, default=0.05)
    p.add_argument("--anchor", type=non_negative_float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_ablate)

    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        settings = get_settings()
    except TopoLidarError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    logging.basicConfig(level=settings.log_level, format="%(levelname)s %(name)s %(message)s", stream=sys.stderr)

    try:
        args = parser.parse_args(argv)
        config = RunConfig.from_args(args)
        logger.debug("[CLI] %s", config)
        return args.handler(args, config)
    except UsageError as e:
        sys.stderr.write(parser.format_usage())
        sys.stderr.write(f"error: {e}\n")
        return 1
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    except (TopoLidarError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2


def main():
    sys.exit(run())
