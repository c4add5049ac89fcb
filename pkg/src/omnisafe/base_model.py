"""Kinematics and constrained forward dynamics of a three-omniwheel base.

The base is modeled with nine generalized coordinates: the planar pose
(x, y, theta), three wheel angles and three passive roller angles. Rolling
is imposed as a 6x9 constraint Jacobian, so the forward dynamics is a
single KKT solve that also yields the constraint forces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_THIRDS_PI = 2.0 * np.pi / 3.0
DEFAULT_WHEEL_OFFSETS = (0.0, TWO_THIRDS_PI, 2.0 * TWO_THIRDS_PI)


@dataclass(frozen=True)
class BaseParams:
    """Geometry and inertia of the omnidirectional base.

    mass        total mass M [kg]
    body_inertia  yaw inertia I_b [kg m^2]
    wheel_inertia I_w, per wheel about its axle [kg m^2]
    roller_inertia I_r, per roller set [kg m^2]
    wheel_center_radius  distance R from body center to wheel center [m]
    wheel_radius  r_w [m]
    roller_radius r_r [m]
    wheel_offsets angular positions of the wheels, default 0/120/240 deg
    """

    mass: float = 40.0
    body_inertia: float = 2.0
    wheel_inertia: float = 0.02
    roller_inertia: float = 0.002
    wheel_center_radius: float = 0.25
    wheel_radius: float = 0.1
    roller_radius: float = 0.02
    wheel_offsets: tuple[float, float, float] = DEFAULT_WHEEL_OFFSETS

    def __post_init__(self):
        for name in ("mass", "body_inertia", "wheel_inertia", "roller_inertia",
                     "wheel_center_radius", "wheel_radius", "roller_radius"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not np.allclose(self.wheel_offsets, DEFAULT_WHEEL_OFFSETS,
                           atol=1e-12):
            raise ValueError("wheel offsets must be 0, 2pi/3, 4pi/3")

    @property
    def body_mass_matrix(self) -> np.ndarray:
        """3x3 diag(M, M, I_b) of the Cartesian coordinates."""
        return np.diag([self.mass, self.mass, self.body_inertia])

    @property
    def mass_matrix(self) -> np.ndarray:
        """9x9 generalized inertia diag(M, M, I_b, I_w*I, I_r*I)."""
        diag = [self.mass, self.mass, self.body_inertia]
        diag += [self.wheel_inertia] * 3 + [self.roller_inertia] * 3
        return np.diag(diag)

    @property
    def actuation_matrix(self) -> np.ndarray:
        """3x9 selector U mapping wheel torques into generalized forces."""
        U = np.zeros((3, 9))
        U[:, 3:6] = np.eye(3)
        return U


@dataclass(frozen=True)
class SlopeSpec:
    """Inclined-plane description: slope angle, heading of steepest ascent.

    ``convention`` selects the magnitude of the in-plane gravity term:
    "as-paper" uses m*g*cos(angle) (the published form), "physical" uses
    m*g*sin(angle). Tests and defaults pin the as-paper form.
    """

    angle: float = 0.0
    heading: float = 0.0
    gravity: float = 9.81
    convention: str = "as-paper"

    def __post_init__(self):
        if not 0.0 <= self.angle < np.pi / 2.0:
            raise ValueError("slope angle must lie in [0, pi/2)")
        if self.convention not in ("as-paper", "physical"):
            raise ValueError("convention must be 'as-paper' or 'physical'")


@dataclass(frozen=True)
class RollerFrictionParams:
    """tanh-softened Coulomb friction acting on the roller coordinates."""

    magnitude: float = 0.2     # B_r [N m]
    scaling: float = 0.4       # alpha [s/rad]

    def __post_init__(self):
        if self.magnitude < 0.0:
            raise ValueError("friction magnitude must be >= 0")
        if self.scaling <= 0.0:
            raise ValueError("friction scaling must be > 0")


@dataclass
class BaseState:
    """Generalized coordinates and velocities of the base.

    The layout is q = (x, y, theta, q_w0..2, q_r0..2) and likewise for qd.
    """

    q: np.ndarray = field(default_factory=lambda: np.zeros(9))
    qd: np.ndarray = field(default_factory=lambda: np.zeros(9))

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).copy()
        self.qd = np.asarray(self.qd, dtype=float).copy()
        if self.q.shape != (9,) or self.qd.shape != (9,):
            raise ValueError("q and qd must be 9-vectors")

    @classmethod
    def from_pose(cls, x=0.0, y=0.0, theta=0.0, xd=0.0, yd=0.0, thetad=0.0,
                  params: BaseParams | None = None) -> "BaseState":
        """State at a pose with wheel/roller rates consistent with rolling."""
        q = np.zeros(9)
        q[:3] = (x, y, theta)
        qd = np.zeros(9)
        qd[:3] = (xd, yd, thetad)
        if params is not None:
            jac = base_jacobians(params, theta)
            qd[3:6] = jac.J_cw @ qd[:3]
            qd[6:9] = jac.J_cr @ qd[:3]
        return cls(q, qd)

    @property
    def pose(self) -> np.ndarray:
        return self.q[:3]

    @property
    def pose_rate(self) -> np.ndarray:
        return self.qd[:3]

    @property
    def wheel_angles(self) -> np.ndarray:
        return self.q[3:6]

    @property
    def wheel_rates(self) -> np.ndarray:
        return self.qd[3:6]

    @property
    def roller_angles(self) -> np.ndarray:
        return self.q[6:9]

    @property
    def roller_rates(self) -> np.ndarray:
        return self.qd[6:9]


@dataclass(frozen=True)
class BaseJacobians:
    """Rolling-constraint Jacobians evaluated at one heading."""

    J_cw: np.ndarray       # 3x3, wheel rates from pose rates
    J_cr: np.ndarray       # 3x3, roller rates from pose rates
    J_c: np.ndarray        # 6x9, full constraint [[J_cw, -I, 0], [J_cr, 0, -I]]


@dataclass(frozen=True)
class DynamicsSolution:
    """Output of one constrained forward-dynamics solve."""

    qdd: np.ndarray        # 9, generalized accelerations
    lambda_c: np.ndarray   # 6, constraint forces (wheel rows then roller rows)

    @property
    def lambda_wheel(self) -> np.ndarray:
        return self.lambda_c[:3]

    @property
    def lambda_roller(self) -> np.ndarray:
        return self.lambda_c[3:]


def base_jacobians(params: BaseParams, theta: float) -> BaseJacobians:
    """Rolling-constraint Jacobians at body heading ``theta``.

    Row i of J_cw is (-sin(theta+phi_i), cos(theta+phi_i), R)/r_w and row i
    of J_cr is (cos(theta+phi_i), sin(theta+phi_i), 0)/r_r.
    """
    ang = theta + np.asarray(params.wheel_offsets)
    s, c = np.sin(ang), np.cos(ang)
    J_cw = np.column_stack([-s, c, np.full(3, params.wheel_center_radius)])
    J_cw /= params.wheel_radius
    J_cr = np.column_stack([c, s, np.zeros(3)]) / params.roller_radius
    J_c = np.zeros((6, 9))
    J_c[:3, :3] = J_cw
    J_c[:3, 3:6] = -np.eye(3)
    J_c[3:, :3] = J_cr
    J_c[3:, 6:9] = -np.eye(3)
    return BaseJacobians(J_cw=J_cw, J_cr=J_cr, J_c=J_c)


def base_jacobian_rates(params: BaseParams, theta: float,
                        thetad: float) -> BaseJacobians:
    """Time derivatives of the constraint Jacobians, packaged identically."""
    ang = theta + np.asarray(params.wheel_offsets)
    s, c = np.sin(ang), np.cos(ang)
    Jd_cw = np.column_stack([-c, -s, np.zeros(3)]) * thetad
    Jd_cw /= params.wheel_radius
    Jd_cr = np.column_stack([-s, c, np.zeros(3)]) * thetad / params.roller_radius
    Jd_c = np.zeros((6, 9))
    Jd_c[:3, :3] = Jd_cw
    Jd_c[3:, :3] = Jd_cr
    return BaseJacobians(J_cw=Jd_cw, J_cr=Jd_cr, J_c=Jd_c)


def gravity_vector(params: BaseParams, slope: SlopeSpec) -> np.ndarray:
    """In-plane gravity load as a 9-vector.

    Evaluates m*g*cos(angle)*(cos psi, sin psi, 0, ...) in the as-paper
    convention; the physical convention swaps cos(angle) for sin(angle).
    """
    scale = np.cos(slope.angle) if slope.convention == "as-paper" \
        else np.sin(slope.angle)
    G = np.zeros(9)
    mg = params.mass * slope.gravity * scale
    G[0] = mg * np.cos(slope.heading)
    G[1] = mg * np.sin(slope.heading)
    return G


def roller_friction(params: RollerFrictionParams,
                    roller_rates: np.ndarray) -> np.ndarray:
    """Friction torques B_r*tanh(alpha*qd_r) on the roller coordinates."""
    return params.magnitude * np.tanh(params.scaling * np.asarray(roller_rates))


def external_jacobian(pose: np.ndarray, point: np.ndarray) -> np.ndarray:
    """3x3 contact Jacobian J_ext,b for a wrench applied at a world point."""
    J = np.eye(3)
    J[0, 2] = pose[1] - point[1]
    J[1, 2] = point[0] - pose[0]
    return J


def forward_dynamics(params: BaseParams,
                     friction: RollerFrictionParams | None,
                     slope: SlopeSpec | None,
                     state: BaseState,
                     wheel_torques: np.ndarray,
                     ext_wrench: np.ndarray | None = None,
                     ext_point: np.ndarray | None = None,
                     extra_constraint: np.ndarray | None = None) -> DynamicsSolution:
    """Constrained accelerations and constraint forces for one instant.

    Solves the KKT system of A qdd + B + G + J_c^T lambda = U^T T + J_ext^T F
    subject to J_c qdd + Jd_c qd = 0. ``ext_wrench`` is the planar wrench
    (F_x, F_y, tau) applied at ``ext_point`` (world frame, defaults to the
    body center). ``extra_constraint`` appends rows to J_c (e.g. a wall row);
    appended rows are assumed stationary (zero time derivative).
    """
    theta, thetad = state.q[2], state.qd[2]
    jac = base_jacobians(params, theta)
    jac_rate = base_jacobian_rates(params, theta, thetad)
    J_c, Jd_c = jac.J_c, jac_rate.J_c
    if extra_constraint is not None:
        extra = np.atleast_2d(np.asarray(extra_constraint, dtype=float))
        J_c = np.vstack([J_c, extra])
        Jd_c = np.vstack([Jd_c, np.zeros_like(extra)])

    A = params.mass_matrix
    rhs = params.actuation_matrix.T @ np.asarray(wheel_torques, dtype=float)
    if friction is not None:
        rhs[6:9] -= roller_friction(friction, state.roller_rates)
    if slope is not None:
        rhs -= gravity_vector(params, slope)
    if ext_wrench is not None:
        point = state.pose[:2] if ext_point is None else np.asarray(ext_point)
        J_ext = external_jacobian(state.pose, point)
        rhs[:3] += J_ext.T @ np.asarray(ext_wrench, dtype=float)

    k = J_c.shape[0]
    kkt = np.zeros((9 + k, 9 + k))
    kkt[:9, :9] = A
    kkt[:9, 9:] = J_c.T
    kkt[9:, :9] = J_c
    vec = np.concatenate([rhs, -Jd_c @ state.qd])
    try:
        sol = np.linalg.solve(kkt, vec)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError("singular constrained mass matrix") from exc
    return DynamicsSolution(qdd=sol[:9], lambda_c=sol[9:])


def body_accel_from_wheels(params: BaseParams, theta: float, thetad: float,
                           wheel_rates: np.ndarray,
                           wheel_accels: np.ndarray) -> dict:
    """Body and roller accelerations implied by measured wheel motion.

    Uses xdd = J_cw^{-1} qdd_w + d/dt(J_cw^{-1}) qd_w with the derivative of
    the inverse expanded as -J_cw^{-1} Jd_cw J_cw^{-1}, then
    qdd_r = J_cr xdd + Jd_cr xd.
    """
    jac = base_jacobians(params, theta)
    jac_rate = base_jacobian_rates(params, theta, thetad)
    J_cw_inv = np.linalg.inv(jac.J_cw)
    J_cw_inv_dot = -J_cw_inv @ jac_rate.J_cw @ J_cw_inv
    xd = J_cw_inv @ np.asarray(wheel_rates, dtype=float)
    xdd = J_cw_inv @ np.asarray(wheel_accels, dtype=float) + J_cw_inv_dot @ wheel_rates
    roller_accels = jac.J_cr @ xdd + jac_rate.J_cr @ xd
    return {"body_accel": xdd, "roller_accels": roller_accels, "body_rate": xd}


def constraint_residual(params: BaseParams, state: BaseState) -> float:
    """Max-norm of J_c qd; zero for any state consistent with rolling."""
    jac = base_jacobians(params, state.q[2])
    return float(np.max(np.abs(jac.J_c @ state.qd)))
