"""Topology-regularized LiDAR scan processing."""

from .backbone import OptimizerConfig, optimize_backbone
from .core.geometry import PointCloud, ProjectionConfig, RangeImage, to_point_cloud, to_range_image
from .errors import TopoLidarError
from .topology.loss import topo_loss, topo_loss_grad, total_loss
from .topology.persistence import PersistenceDiagram, betti0_at, flag_ph0, sublevel_ph0

__all__ = [
    "OptimizerConfig", "optimize_backbone",
    "PointCloud", "ProjectionConfig", "RangeImage", "to_point_cloud", "to_range_image",
    "TopoLidarError",
    "topo_loss", "topo_loss_grad", "total_loss",
    "PersistenceDiagram", "betti0_at", "flag_ph0", "sublevel_ph0",
]
