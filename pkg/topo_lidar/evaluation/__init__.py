# Evaluation package
from .metrics import HistogramConfig, KernelConfig, chamfer, compare_scans, emd_exact, jsd, mmd, rmse
from .statistics import StatisticalEvaluator
from .trajectory import PoseTrajectory, RigidTransform, align_umeyama, ate, rpe

__all__ = [
    'HistogramConfig', 'KernelConfig', 'chamfer', 'compare_scans', 'emd_exact', 'jsd', 'mmd', 'rmse',
    'StatisticalEvaluator',
    'PoseTrajectory', 'RigidTransform', 'align_umeyama', 'ate', 'rpe',
]
