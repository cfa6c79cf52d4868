"""Closed-form rigid alignment of associated object positions, and pose error metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .association import AssociationSet, _check_ids
from .exceptions import DegenerateConfigurationError, InsufficientCorrespondencesError, InvalidArgumentError
from .maps import ObjectMap, Pose

FULL_6DOF = "full_6dof"
YAW_ONLY = "yaw_only"
MODES = (FULL_6DOF, YAW_ONLY)
MIN_PAIRS = {FULL_6DOF: 3, YAW_ONLY: 2}
DEGENERATE_TOL = 1e-9

# success thresholds for a relocalization attempt
MAX_ROT_ERROR_DEG = 15.0
MAX_TRANS_ERROR_M = 0.5


@dataclass(frozen=True)
class PoseEstimate:
    pose: Pose
    rms_residual: float
    correspondences_used: int
    mode: str


def align(local_pts, global_pts, mode: str = FULL_6DOF) -> Tuple[Pose, float]:
    """Least-squares rigid transform mapping ``local_pts`` onto ``global_pts``.

    Returns the pose and the RMS residual. ``yaw_only`` restricts the rotation
    to the z axis (known ground plane).
    """
    if mode not in MODES:
        raise InvalidArgumentError(f"unknown mode {mode!r}; expected one of {MODES}")
    src = np.asarray(local_pts, dtype=float).reshape(-1, 3)
    dst = np.asarray(global_pts, dtype=float).reshape(-1, 3)
    if src.shape != dst.shape:
        raise InvalidArgumentError("point sets differ in size")
    n = len(src)
    if n < MIN_PAIRS[mode]:
        raise InsufficientCorrespondencesError(
            f"{mode} needs at least {MIN_PAIRS[mode]} correspondences, got {n}")
    mu_s, mu_d = src.mean(axis=0), dst.mean(axis=0)
    cs, cd = src - mu_s, dst - mu_d

    if mode == FULL_6DOF:
        if np.linalg.svd(cs, compute_uv=False)[1] < DEGENERATE_TOL:
            raise DegenerateConfigurationError("local positions are collinear or coincident")
        U, _, Vt = np.linalg.svd(cd.T @ cs)
        D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt)) or 1.0])
        R = U @ D @ Vt
        # re-orthonormalize away rounding so the Pose invariant holds tightly
        u, _, vt = np.linalg.svd(R)
        R = u @ vt
    else:
        if np.abs(cs[:, :2]).max() < DEGENERATE_TOL:
            raise DegenerateConfigurationError("local positions coincide in the horizontal plane")
        dot = np.sum(cs[:, 0] * cd[:, 0] + cs[:, 1] * cd[:, 1])
        cross = np.sum(cs[:, 0] * cd[:, 1] - cs[:, 1] * cd[:, 0])
        theta = math.atan2(cross, dot)
        R = Pose.from_yaw(theta).rotation
    t = mu_d - R @ mu_s
    pose = Pose(R, t)
    resid = pose.apply(src) - dst
    return pose, float(np.sqrt(np.mean(np.sum(resid ** 2, axis=1))))


def estimate_pose(assoc: AssociationSet, global_map: ObjectMap, local_map: ObjectMap,
                  mode: str = FULL_6DOF) -> PoseEstimate:
    _check_ids(assoc.pairs, global_map, local_map)
    g = np.array([global_map.get(a).position for a, _ in assoc.pairs]).reshape(-1, 3)
    l = np.array([local_map.get(b).position for _, b in assoc.pairs]).reshape(-1, 3)
    pose, rms = align(l, g, mode)
    return PoseEstimate(pose, rms, len(assoc.pairs), mode)


def sum_squared_residuals(pose: Pose, local_pts, global_pts) -> float:
    r = pose.apply(np.asarray(local_pts, dtype=float)) - np.asarray(global_pts, dtype=float)
    return float(np.sum(r ** 2))


def pose_error(estimate: Pose, ground_truth: Pose) -> Tuple[float, float]:
    """Geodesic rotation error in degrees and translation error in meters."""
    R = estimate.rotation @ ground_truth.rotation.T
    c = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    rot = math.degrees(math.acos(c))
    # acos is ill-conditioned near 0; recover small angles from the skew part
    if rot < 1.0:
        s = 0.5 * np.linalg.norm([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
        rot = math.degrees(math.atan2(s, (np.trace(R) - 1.0) / 2.0))
    trans = float(np.linalg.norm(estimate.translation - ground_truth.translation))
    return rot, trans


def is_success(rot_error_deg: float, trans_error_m: float,
               max_rot_deg: float = MAX_ROT_ERROR_DEG, max_trans_m: float = MAX_TRANS_ERROR_M) -> bool:
    return rot_error_deg <= max_rot_deg and trans_error_m <= max_trans_m
