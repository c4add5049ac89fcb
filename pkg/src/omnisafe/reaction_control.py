"""Admittance collision reaction and wall-constrained control.

On detection the controller latches the estimated force and replaces the
planned trajectory with the first-order escape response of a virtual
mass-damper, holding yaw. After a dwell of several time constants it blends
back to the planned path.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .base_model import BaseParams, base_jacobians


@dataclass(frozen=True)
class AdmittanceParams:
    """Virtual mass and damping of the escape response.

    Damping carries N s/m (the dimensionally consistent unit for the
    first-order response, despite the published N/m^2 annotation).
    """

    mass: float = 2.0            # M_des [kg]
    damping: float = 1.6         # B_des [N s/m]
    hold_yaw: bool = True
    relatch: bool = False        # re-read the force while escaping
    accel_limit: float | None = None   # tip-over guard [m/s^2]

    def __post_init__(self):
        if self.mass <= 0.0 or self.damping <= 0.0:
            raise ValueError("admittance mass and damping must be positive")

    @property
    def time_constant(self) -> float:
        return self.mass / self.damping


def design_damping(threshold_force: float, escape_distance: float) -> float:
    """B_des so a threshold-sized push escapes by a target distance."""
    if threshold_force <= 0.0 or escape_distance <= 0.0:
        raise ValueError("threshold force and escape distance must be positive")
    return threshold_force / escape_distance


def escape_trajectory(params: AdmittanceParams, force: np.ndarray,
                      pose0: np.ndarray, t: float) -> np.ndarray:
    """Pose target of the admittance response at time t since the impact.

    Per axis x(t) = x0 + (F/B)(1 - exp(-B/M t)); yaw stays at its onset
    value. The optional acceleration limit caps the initial transient by
    stretching the response onset.
    """
    if t < 0.0:
        raise ValueError("t must be >= 0")
    force = np.asarray(force, dtype=float)
    pose0 = np.asarray(pose0, dtype=float)
    B, M = params.damping, params.mass
    scale = 1.0 - np.exp(-B / M * t)
    if params.accel_limit is not None:
        # the target's initial acceleration is (|F|/B) * rate^2 with
        # rate = B/M; slow the exponent so it meets the cap exactly
        mag = float(np.linalg.norm(force))
        peak = mag * B / M ** 2
        if peak > params.accel_limit and mag > 0.0:
            rate = np.sqrt(params.accel_limit * B / mag)
            scale = 1.0 - np.exp(-rate * t)
    target = pose0.copy()
    target[:2] = pose0[:2] + force[:2] / B * scale
    return target


def to_wheel_trajectory(params: BaseParams, poses: np.ndarray, dt: float,
                        wheel_angles0: np.ndarray | None = None) -> np.ndarray:
    """Wheel-angle targets tracking a pose target stream.

    Differentiates the stream by forward differences, maps the rates
    through J_cw, and integrates from the onset wheel angles; ``dt`` is the
    stream's sample spacing.
    """
    del dt  # rates and integration cancel; spacing kept for the interface
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    n = len(poses)
    q_w = np.zeros((n, 3))
    if wheel_angles0 is not None:
        q_w[0] = wheel_angles0
    for k in range(1, n):
        J_cw = base_jacobians(params, poses[k - 1, 2]).J_cw
        q_w[k] = q_w[k - 1] + J_cw @ (poses[k] - poses[k - 1])
    return q_w


def wall_constrained_jacobian(J_c: np.ndarray, wall_slope: float) -> np.ndarray:
    """Constraint Jacobian augmented with the wall row [a, -1, 0, ...]."""
    J_c = np.atleast_2d(np.asarray(J_c, dtype=float))
    row = np.zeros((1, J_c.shape[1]))
    row[0, 0] = wall_slope
    row[0, 1] = -1.0
    return np.vstack([J_c, row])


def wall_row(wall_slope: float, n: int = 9) -> np.ndarray:
    """Just the wall constraint row, for appending in the dynamics solve."""
    row = np.zeros(n)
    row[0] = wall_slope
    row[1] = -1.0
    return row


class ReactionMode(Enum):
    TRACKING = "tracking"
    ESCAPE = "escape"


class ReactionController:
    """Trajectory/escape switch driven by the collision detector.

    TRACKING passes the planned pose through. A detection latches the
    filtered force magnitude (scaled along the instantaneous direction) and
    the current pose, then ESCAPE emits the admittance trajectory for a
    dwell of ``dwell_tau`` time constants followed by a linear re-merge to
    the planned path over ``merge_duration`` seconds. Deterministic given
    its input streams; single-owner state.
    """

    def __init__(self, params: AdmittanceParams, dwell_tau: float = 5.0,
                 merge_duration: float = 2.0):
        self.params = params
        self.dwell = dwell_tau * params.time_constant
        self.merge_duration = merge_duration
        self.mode = ReactionMode.TRACKING
        self.latched_force = np.zeros(2)
        self.onset_pose = np.zeros(3)
        self.onset_time = 0.0

    def step(self, detected: bool, force: np.ndarray, planned_pose: np.ndarray,
             current_pose: np.ndarray, t: float) -> np.ndarray:
        """Pose target for this control instant."""
        planned_pose = np.asarray(planned_pose, dtype=float)
        if self.mode is ReactionMode.TRACKING:
            if detected:
                self.mode = ReactionMode.ESCAPE
                self.latched_force = np.asarray(force, dtype=float)[:2].copy()
                self.onset_pose = np.asarray(current_pose, dtype=float).copy()
                self.onset_time = t
            else:
                return planned_pose
        # ESCAPE
        if self.params.relatch and detected:
            self.latched_force = np.asarray(force, dtype=float)[:2].copy()
        elapsed = t - self.onset_time
        escape = escape_trajectory(self.params, self.latched_force,
                                   self.onset_pose, elapsed)
        if not self.params.hold_yaw:
            escape[2] = planned_pose[2]
        if elapsed <= self.dwell:
            return escape
        blend = (elapsed - self.dwell) / self.merge_duration
        if blend >= 1.0:
            self.mode = ReactionMode.TRACKING
            return planned_pose
        return (1.0 - blend) * escape + blend * planned_pose
