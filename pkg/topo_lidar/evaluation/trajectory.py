"""
Trajectory error metrics for SLAM runs on real or augmented scans.

ATE aligns the estimate to ground truth with a closed-form rigid fit of the
translations (Umeyama without scale), then takes the RMSE of the residual
translations. RPE compares relative motions over a fixed frame offset and
needs no alignment.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import AlignmentError, DegenerateAlignmentError

logger = logging.getLogger(__name__)

ORTHO_TOL = 1e-6


def _check_rotations(R: np.ndarray):
    eye = np.eye(3)
    err = np.abs(np.einsum("nij,nkj->nik", R, R) - eye).max() if len(R) else 0.0
    if err > ORTHO_TOL:
        raise AlignmentError(f"rotation is not orthonormal (|R R^T - I| = {err:.3g})")
    dets = np.linalg.det(R)
    if len(dets) and np.abs(dets - 1.0).max() > ORTHO_TOL:
        raise AlignmentError("rotation must have determinant +1")


@dataclass(frozen=True)
class RigidTransform:
    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64)
        t = np.asarray(self.t, dtype=np.float64).ravel()
        if R.shape != (3, 3) or t.shape != (3,):
            raise AlignmentError(f"rigid transform needs R (3, 3) and t (3,), got {R.shape} and {t.shape}")
        _check_rotations(R[None])
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.R.T, -self.R.T @ self.t)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.R.T + self.t


@dataclass(frozen=True)
class PoseTrajectory:
    """Time-ordered poses stored as stacked rotations (n, 3, 3) and translations (n, 3)."""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64)
        t = np.asarray(self.t, dtype=np.float64)
        if R.ndim != 3 or R.shape[1:] != (3, 3) or t.shape != (len(R), 3):
            raise AlignmentError(f"trajectory needs R (n, 3, 3) and t (n, 3), got {R.shape} and {t.shape}")
        if len(R) == 0:
            raise AlignmentError("trajectory needs at least one pose")
        _check_rotations(R)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    def __len__(self) -> int:
        return len(self.R)

    @classmethod
    def from_matrices(cls, mats: np.ndarray) -> "PoseTrajectory":
        """Accepts (n, 3, 4) or (n, 4, 4) [R|t] matrices, or (n, 12) row-major KITTI rows."""
        M = np.asarray(mats, dtype=np.float64)
        if M.ndim == 2 and M.shape[1] == 12:
            M = M.reshape(-1, 3, 4)
        if M.ndim != 3 or M.shape[1] not in (3, 4) or M.shape[2] != 4:
            raise AlignmentError(f"pose matrices must be (n, 3|4, 4), got {M.shape}")
        return cls(M[:, :3, :3], M[:, :3, 3])

    def kitti_rows(self) -> np.ndarray:
        return np.concatenate([self.R, self.t[:, :, None]], axis=2).reshape(-1, 12)

    def transformed(self, S: RigidTransform) -> "PoseTrajectory":
        """Left-composes every pose with S (a change of world frame)."""
        return PoseTrajectory(np.einsum("ij,njk->nik", S.R, self.R), self.t @ S.R.T + S.t)


def align_umeyama(P: PoseTrajectory, Q: PoseTrajectory, tol: float = 1e-9) -> RigidTransform:
    """Least-squares rigid S mapping the translations of P onto those of Q; no scale."""
    if len(P) != len(Q):
        raise AlignmentError(f"trajectory length mismatch: {len(P)} vs {len(Q)}")
    if len(P) < 3:
        raise AlignmentError(f"alignment needs at least 3 poses, got {len(P)}")

    mu_p = P.t.mean(axis=0)
    mu_q = Q.t.mean(axis=0)
    Pc = P.t - mu_p
    Qc = Q.t - mu_q

    spread = np.linalg.svd(Pc, compute_uv=False)
    if spread[0] == 0.0 or spread[1] <= tol * spread[0]:
        raise DegenerateAlignmentError(
            "degenerate alignment: estimated positions are coincident or collinear"
        )

    U, _, Vt = np.linalg.svd(Qc.T @ Pc / len(P))
    D = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        D[2, 2] = -1.0
    R = U @ D @ Vt
    t = mu_q - R @ mu_p
    return RigidTransform(R, t)


def _rotation_angle(R: np.ndarray) -> np.ndarray:
    """Geodesic angle of stacked rotations, in [0, pi]."""
    cos2 = np.trace(R, axis1=1, axis2=2) - 1.0
    axis = np.stack(
        [R[:, 2, 1] - R[:, 1, 2], R[:, 0, 2] - R[:, 2, 0], R[:, 1, 0] - R[:, 0, 1]], axis=1
    )
    # atan2 form equals arccos((tr - 1) / 2) but stays accurate near 0 and pi
    return np.arctan2(np.linalg.norm(axis, axis=1), cos2)


def ate(P: PoseTrajectory, Q: PoseTrajectory) -> float:
    """RMSE of the translation part of Q_i^-1 S P_i after alignment."""
    S = align_umeyama(P, Q)
    aligned = P.transformed(S)
    # translation of Q_i^-1 (S P_i)
    resid = np.einsum("nji,nj->ni", Q.R, aligned.t - Q.t)
    err = np.linalg.norm(resid, axis=1)
    value = float(np.sqrt(np.mean(err**2)))
    logger.debug("[Trajectory] ATE over %d poses: %.6g", len(P), value)
    return value


def _relative(traj: PoseTrajectory, delta: int) -> Tuple[np.ndarray, np.ndarray]:
    Ri, Rj = traj.R[:-delta], traj.R[delta:]
    ti, tj = traj.t[:-delta], traj.t[delta:]
    dR = np.einsum("nji,njk->nik", Ri, Rj)
    dt = np.einsum("nji,nj->ni", Ri, tj - ti)
    return dR, dt


def rpe(P: PoseTrajectory, Q: PoseTrajectory, delta: int = 1) -> Tuple[float, float]:
    """
    (translation RMSE, rotation RMSE in radians) of
    (P_i^-1 P_{i+delta})^-1 (Q_i^-1 Q_{i+delta}) over every window i.
    """
    if len(P) != len(Q):
        raise AlignmentError(f"trajectory length mismatch: {len(P)} vs {len(Q)}")
    if delta < 1:
        raise AlignmentError(f"delta must be >= 1, got {delta}")
    if delta >= len(P):
        raise AlignmentError(f"delta {delta} must be smaller than the trajectory length {len(P)}")

    dRp, dtp = _relative(P, delta)
    dRq, dtq = _relative(Q, delta)
    E_R = np.einsum("nji,njk->nik", dRp, dRq)
    E_t = np.einsum("nji,nj->ni", dRp, dtq - dtp)

    trans = np.linalg.norm(E_t, axis=1)
    rot = _rotation_angle(E_R)
    return float(np.sqrt(np.mean(trans**2))), float(np.sqrt(np.mean(rot**2)))
