"""External-force estimation from wheel torque sensing.

Covers the nominal (force-free) torque model, the wrench solve from sensed
torque deviations, contact-point location on the convex body outline, the
moving-average collision detector, wall detection with least-squares slope
fitting, minimum-norm multicontact estimation, and contact-gesture command
matching.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base_model import (BaseParams, RollerFrictionParams, base_jacobians,
                         roller_friction)
from .wbosc import pinv

#: body-part labels a touch may carry
BODY_PARTS = ("left_hand", "right_hand", "body")

#: snap tolerance for line-polygon intersections at a vertex [m]
VERTEX_SNAP = 1e-9

#: force magnitude below which the contact direction is undefined [N]
FORCE_FLOOR = 1e-9


class NoContactPointError(ValueError):
    """The zero-moment line misses the body outline."""


class UndefinedDirectionError(ValueError):
    """Force magnitude too small to define a contact direction."""


@dataclass(frozen=True)
class WrenchEstimate:
    """Estimated planar external wrench at the body center."""

    force_x: float
    force_y: float
    torque: float
    timestamp: float = 0.0

    @property
    def force(self) -> np.ndarray:
        return np.array([self.force_x, self.force_y])

    @property
    def magnitude(self) -> float:
        return float(np.hypot(self.force_x, self.force_y))

    def as_vector(self) -> np.ndarray:
        return np.array([self.force_x, self.force_y, self.torque])


@dataclass(frozen=True)
class ContactPoint:
    """Solved contact location on the outline, with force direction."""

    x: float
    y: float
    direction: np.ndarray
    magnitude: float

    @property
    def point(self) -> np.ndarray:
        return np.array([self.x, self.y])


class BodyOutline:
    """Convex, counterclockwise polygon approximating the body section."""

    def __init__(self, vertices: np.ndarray):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("outline needs at least three planar vertices")
        e1 = np.roll(v, -1, axis=0) - v
        e2 = np.roll(v, -2, axis=0) - np.roll(v, -1, axis=0)
        cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if np.any(cross <= 0.0):
            raise ValueError("outline must be convex and counterclockwise")
        self.vertices = v

    @classmethod
    def equilateral_triangle(cls, side: float = 0.61) -> "BodyOutline":
        """Triangle centered on the body origin; default 61 cm sides."""
        circumradius = side / np.sqrt(3.0)
        ang = np.pi / 2.0 + np.array([0.0, 2.0, 4.0]) * np.pi / 3.0
        return cls(circumradius * np.column_stack([np.cos(ang), np.sin(ang)]))

    def edges(self):
        v = self.vertices
        return zip(v, np.roll(v, -1, axis=0))

    def outward_normal_at(self, point: np.ndarray) -> np.ndarray:
        """Outward normal of the edge nearest to a boundary point."""
        best, best_d = None, np.inf
        for a, b in self.edges():
            d = _point_segment_distance(point, a, b)
            if d < best_d:
                e = b - a
                best = np.array([e[1], -e[0]]) / np.linalg.norm(e)
                best_d = d
        return best


def nominal_torque(params: BaseParams, friction: RollerFrictionParams,
                   theta: float, body_accel: np.ndarray,
                   wheel_accels: np.ndarray, roller_rates: np.ndarray,
                   roller_accels: np.ndarray,
                   include_drivetrain_inertia: bool = True,
                   slope=None) -> np.ndarray:
    """Wheel torques predicted by the force-free model.

    T|F=0 = J_cw^{-T} [M xdd + G + J_cr^T (I_r qdd_r + B_r)] + I_w qdd_w,
    where G is the known in-plane gravity load when a slope is given
    (otherwise a genuine slope would read as a phantom external push).
    With ``include_drivetrain_inertia`` off, the wheel and roller inertia
    terms are dropped (the assumption under which the zero-moment line of
    the wrench solve is exact).
    """
    jac = base_jacobians(params, theta)
    fric = roller_friction(friction, roller_rates)
    roller_term = fric.copy()
    if include_drivetrain_inertia:
        roller_term += params.roller_inertia * np.asarray(roller_accels)
    rhs = params.body_mass_matrix @ np.asarray(body_accel) + jac.J_cr.T @ roller_term
    if slope is not None:
        from .base_model import gravity_vector
        rhs += gravity_vector(params, slope)[:3]
    torque = np.linalg.solve(jac.J_cw.T, rhs)
    if include_drivetrain_inertia:
        torque += params.wheel_inertia * np.asarray(wheel_accels)
    return torque


def estimate_wrench(nominal: np.ndarray, sensed: np.ndarray, theta: float,
                    params: BaseParams, timestamp: float = 0.0) -> WrenchEstimate:
    """Generalized wrench J_cw^T (T|F=0 - T_s) from a torque deviation."""
    jac = base_jacobians(params, theta)
    w = jac.J_cw.T @ (np.asarray(nominal, dtype=float)
                      - np.asarray(sensed, dtype=float))
    return WrenchEstimate(force_x=w[0], force_y=w[1], torque=w[2],
                          timestamp=timestamp)


def moment_line_rhs(params: BaseParams, yaw_accel: float,
                    sensed: np.ndarray) -> float:
    """Third row of the wrench solve: I_b*thetadd - (R/r_w) * sum(tau_s)."""
    ratio = params.wheel_center_radius / params.wheel_radius
    return params.body_inertia * yaw_accel - ratio * float(np.sum(sensed))


def wrench_to_body(wrench: WrenchEstimate, theta: float) -> WrenchEstimate:
    """Rotate a world-frame wrench into the body frame (moment unchanged)."""
    c, s = np.cos(theta), np.sin(theta)
    fx = c * wrench.force_x + s * wrench.force_y
    fy = -s * wrench.force_x + c * wrench.force_y
    return WrenchEstimate(force_x=fx, force_y=fy, torque=wrench.torque,
                          timestamp=wrench.timestamp)


def locate_contact(wrench: WrenchEstimate | np.ndarray,
                   outline: BodyOutline) -> ContactPoint:
    """Contact point where the zero-moment line meets the pushing side.

    The wrench's zero-torque assumption turns its third component into the
    line x*F_y - y*F_x = m (body frame). Of its two intersections with the
    convex outline, the contact is the one where the force points inward.
    """
    if isinstance(wrench, WrenchEstimate):
        w = wrench.as_vector()
    else:
        w = np.asarray(wrench, dtype=float)
    fx, fy, m = w
    mag = float(np.hypot(fx, fy))
    if mag < FORCE_FLOOR:
        raise UndefinedDirectionError("force magnitude below numerical floor")
    direction = np.array([fx, fy]) / mag

    # line: point p0 + t*direction, with p0 the closest point to the origin
    normal = np.array([fy, -fx]) / mag
    p0 = normal * (m / mag)
    hits = _line_polygon_intersections(p0, direction, outline)
    if not hits:
        raise NoContactPointError("zero-moment line misses the body outline")
    for point in hits:
        n_out = outline.outward_normal_at(point)
        if float(direction @ n_out) < 0.0:
            return ContactPoint(x=point[0], y=point[1], direction=direction,
                                magnitude=mag)
    raise NoContactPointError("no intersection admits a pushing contact")


def _line_polygon_intersections(p0, d, outline: BodyOutline) -> list:
    pts = []
    for a, b in outline.edges():
        e = b - a
        denom = d[0] * e[1] - d[1] * e[0]
        if abs(denom) < 1e-15:
            continue
        diff = a - p0
        s = (diff[0] * d[1] - diff[1] * d[0]) / denom
        if -VERTEX_SNAP <= s <= 1.0 + VERTEX_SNAP:
            pt = a + np.clip(s, 0.0, 1.0) * e
            if not any(np.linalg.norm(pt - q) < 1e-9 for q in pts):
                pts.append(pt)
    return pts


def _point_segment_distance(p, a, b) -> float:
    e = b - a
    t = np.clip(((p - a) @ e) / (e @ e), 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * e)))


class CollisionDetector:
    """Moving-average detector over the estimated force magnitude.

    Fires once the window mean of |F_ext| exceeds the threshold; the onset
    index is the step at which the mean first crossed. The ring buffer is
    single-owner state: hand the detector between threads, never share it.
    """

    def __init__(self, window: int = 40, threshold: float = 0.8):
        if window < 1:
            raise ValueError("window must be >= 1")
        if threshold <= 0.0:
            raise ValueError("threshold must be > 0")
        self.window = int(window)
        self.threshold = float(threshold)
        self._buffer = np.zeros(self.window)
        self._pos = 0
        self._count = 0

    @property
    def mean(self) -> float:
        if self._count == 0:
            return 0.0
        return float(self._buffer.sum() / self.window)

    def step(self, magnitude: float) -> bool:
        """Feed one |F_ext| sample; True when the window mean is over threshold."""
        self._buffer[self._pos] = float(magnitude)
        self._pos = (self._pos + 1) % self.window
        self._count += 1
        return self.mean >= self.threshold

    def reset(self):
        self._buffer[:] = 0.0
        self._pos = 0
        self._count = 0


def detect_collision(magnitudes: np.ndarray, window: int,
                     threshold: float) -> tuple[bool, int | None]:
    """Batch form of the detector; returns (fired, onset index or None)."""
    det = CollisionDetector(window=window, threshold=threshold)
    for idx, m in enumerate(np.asarray(magnitudes, dtype=float)):
        if det.step(m):
            return True, idx
    return False, None


@dataclass(frozen=True)
class MulticontactProblem:
    """Net wrench plus known contact locations (body frame).

    ``first_contact_direction`` optionally carries the unit force direction
    of the earliest contact, used to disambiguate the underdetermined case.
    """

    locations: np.ndarray            # N x 2
    net_wrench: np.ndarray           # (F_x, F_y, tau)
    first_contact_direction: np.ndarray | None = None

    def __post_init__(self):
        loc = np.atleast_2d(np.asarray(self.locations, dtype=float))
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "net_wrench",
                           np.asarray(self.net_wrench, dtype=float))
        if len(loc) < 1:
            raise ValueError("at least one contact location required")
        if self.first_contact_direction is not None:
            u = np.asarray(self.first_contact_direction, dtype=float)
            object.__setattr__(self, "first_contact_direction",
                               u / np.linalg.norm(u))


def contact_map(locations: np.ndarray) -> np.ndarray:
    """3 x 2N map H_N from stacked contact forces to the net wrench."""
    loc = np.atleast_2d(locations)
    H = np.zeros((3, 2 * len(loc)))
    for i, (x, y) in enumerate(loc):
        H[0, 2 * i] = 1.0
        H[1, 2 * i + 1] = 1.0
        H[2, 2 * i] = -y
        H[2, 2 * i + 1] = x
    return H


def multicontact_estimate(problem: MulticontactProblem) -> np.ndarray:
    """Per-contact forces (N x 2) by minimum-norm/least-squares solve.

    Without a prior the estimate is H^T (H H^T)^+ F_ext. With the first
    contact's unit direction the system is augmented with a row forcing
    that contact's force to stay parallel to the prior.
    """
    H = contact_map(problem.locations)
    rhs = problem.net_wrench
    if problem.first_contact_direction is not None:
        ux, uy = problem.first_contact_direction
        row = np.zeros((1, H.shape[1]))
        row[0, 0] = uy
        row[0, 1] = -ux
        H = np.vstack([H, row])
        rhs = np.concatenate([rhs, [0.0]])
    forces = H.T @ pinv(H @ H.T) @ rhs
    return forces.reshape(-1, 2)


@dataclass
class WallFit:
    """Wall detection flags and the fitted slope over the active window."""

    active: np.ndarray           # per-step detection flag
    slope: float | None          # a_n of y = a x + b, None with < 2 points
    angle: float | None          # atan2 form, robust to vertical walls
    n_points: int = 0


def wall_fit_and_detect(planned: np.ndarray, measured: np.ndarray,
                        err_threshold: float) -> WallFit:
    """Detect wall contact from pose error and fit the wall heading.

    Contact is declared wherever |measured - planned| (planar) is at least
    the threshold; the slope comes from the least-squares fitting formula
    over the points collected while contact is active. Near-vertical walls
    make the slope denominator vanish, so the heading is also reported as
    an angle.
    """
    planned = np.atleast_2d(np.asarray(planned, dtype=float))[:, :2]
    measured = np.atleast_2d(np.asarray(measured, dtype=float))[:, :2]
    err = np.linalg.norm(measured - planned, axis=1)
    active = err >= err_threshold
    pts = measured[active]
    n = len(pts)
    if n < 2:
        return WallFit(active=active, slope=None, angle=None, n_points=n)
    x, y = pts[:, 0], pts[:, 1]
    num = n * np.sum(x * y) - np.sum(x) * np.sum(y)
    den = n * np.sum(x * x) - np.sum(x) ** 2
    scale = n * np.sum(x * x + y * y)
    if abs(den) > 1e-12 * max(1.0, scale):
        slope = float(num / den)
        angle = float(np.arctan2(num, den))
    else:
        # vertical wall: the regression denominator vanishes, so take the
        # heading from the points' principal axis instead
        slope = None
        centered = pts - pts.mean(axis=0)
        _, vecs = np.linalg.eigh(centered.T @ centered)
        v = vecs[:, -1]
        if v[0] < 0.0 or (v[0] == 0.0 and v[1] < 0.0):
            v = -v
        angle = float(np.arctan2(v[1], v[0]))
    return WallFit(active=active, slope=slope, angle=angle, n_points=n)


@dataclass(frozen=True)
class Touch:
    """One touch event: body part, location, and force (body frame)."""

    part: str
    location: np.ndarray
    force: np.ndarray

    def __post_init__(self):
        if self.part not in BODY_PARTS:
            raise ValueError(f"unknown body part {self.part!r}")
        object.__setattr__(self, "location",
                           np.asarray(self.location, dtype=float))
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float))


@dataclass(frozen=True)
class Command:
    """Named command with its triggering touch set."""

    name: str
    touches: tuple[Touch, ...]


@dataclass(frozen=True)
class CommandSet:
    """Command vocabulary with matching weights and trigger threshold."""

    commands: tuple[Command, ...]
    weight_location: float = 1.0
    weight_force: float = 1.0
    trigger_threshold: float = 5.0

    def __post_init__(self):
        if self.weight_location < 0.0 or self.weight_force < 0.0:
            raise ValueError("weights must be >= 0")
        if self.trigger_threshold <= 0.0:
            raise ValueError("trigger threshold must be > 0")


def default_command_set() -> CommandSet:
    """The four-command vocabulary used by the gesture experiments."""
    return CommandSet(commands=(
        Command("Collide", (Touch("body", (0.0, 0.0), (5.0, 0.0)),)),
        Command("Push", (Touch("right_hand", (0.0, -0.3), (5.0, 0.0)),)),
        Command("Pull", (Touch("right_hand", (0.0, -0.3), (-5.0, 0.0)),)),
        Command("Rotate", (Touch("left_hand", (0.0, -0.3), (5.0, 0.0)),
                           Touch("right_hand", (0.0, 0.3), (-5.0, 0.0)))),
    ))


def match_command(touches: list[Touch],
                  commands: CommandSet) -> Command | None:
    """Best-matching command for a touch set, or None.

    A command scores the weighted sum of location and force distances over
    body parts present in both touch sets; any part present in exactly one
    side excludes the command. Returns None when every command is excluded
    or the strongest touch force is below the trigger threshold.
    """
    if not touches:
        return None
    if max(np.linalg.norm(t.force) for t in touches) < commands.trigger_threshold:
        return None
    by_part = {t.part: t for t in touches}
    best, best_score = None, np.inf
    for cmd in commands.commands:
        cmd_by_part = {t.part: t for t in cmd.touches}
        if set(by_part) != set(cmd_by_part):
            continue
        score = 0.0
        for part, touch in by_part.items():
            trig = cmd_by_part[part]
            score += commands.weight_location * np.linalg.norm(
                touch.location - trig.location)
            score += commands.weight_force * np.linalg.norm(
                touch.force - trig.force)
        if score < best_score:
            best, best_score = cmd, score
    return best


def stiction_attenuation(rng: np.random.Generator,
                         low: float = 0.55, high: float = 1.0) -> np.ndarray:
    """Per-wheel multiplicative attenuation of the sensed torque deviation.

    Models the drivetrain stiction that under-reports contact torques; the
    default range reproduces the up-to-45% magnitude loss seen on hardware.
    """
    return rng.uniform(low, high, size=3)
