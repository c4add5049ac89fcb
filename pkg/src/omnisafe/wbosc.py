"""Operational-space operators for constrained, underactuated systems.

Builds the constraint null space, dynamically consistent inverses, task
operators, prioritized hierarchies, and the constrained-manifold basis used
by the sampling planner. All pseudoinverses share one SVD cutoff so rank
decisions are consistent across operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Relative singular-value cutoff for pseudoinverses and rank decisions.
# Singular values <= SVD_CUTOFF * sigma_max are treated as null directions.
SVD_CUTOFF = 1e-10


def pinv(mat: np.ndarray, cutoff: float = SVD_CUTOFF) -> np.ndarray:
    """Moore-Penrose pseudoinverse with the module's relative cutoff."""
    mat = np.atleast_2d(mat)
    if mat.size == 0:
        return mat.T.copy()
    return np.linalg.pinv(mat, rcond=cutoff)


def matrix_rank(mat: np.ndarray, cutoff: float = SVD_CUTOFF) -> int:
    """Rank under the shared cutoff; values at the cutoff round down."""
    mat = np.atleast_2d(mat)
    if mat.size == 0:
        return 0
    sv = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(sv > cutoff * sv[0]))


def dyn_consistent_inverse(X: np.ndarray, weight_inv: np.ndarray) -> np.ndarray:
    """Weighted generalized inverse W X^T (X W X^T)^+ with W = weight_inv."""
    WXt = weight_inv @ X.T
    return WXt @ pinv(X @ WXt)


@dataclass(frozen=True)
class ConstrainedSystem:
    """Mass matrix, constraint Jacobian, and actuation selector.

    ``U`` rows must be distinct rows of the identity (which joints are
    actuated); ``J_c`` may be empty for an unconstrained system.
    """

    A: np.ndarray
    J_c: np.ndarray
    U: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        object.__setattr__(self, "A", A)
        n = A.shape[0]
        J_c = np.asarray(self.J_c, dtype=float).reshape(-1, n)
        object.__setattr__(self, "J_c", J_c)
        U = np.asarray(self.U, dtype=float).reshape(-1, n)
        object.__setattr__(self, "U", U)
        if not np.allclose(A, A.T):
            raise ValueError("mass matrix must be symmetric")
        if np.any(np.linalg.eigvalsh(A) <= 0.0):
            raise ValueError("mass matrix must be positive definite")
        row_sums = np.abs(U).sum(axis=1)
        if U.size and (not np.allclose(U @ U.T, np.eye(U.shape[0]))
                       or not np.allclose(row_sums, 1.0)):
            raise ValueError("U rows must be orthonormal identity rows")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def A_inv(self) -> np.ndarray:
        return np.linalg.inv(self.A)

    @classmethod
    def unconstrained(cls, A: np.ndarray) -> "ConstrainedSystem":
        """Fully actuated system with no constraints (N_c = I)."""
        n = np.asarray(A).shape[0]
        return cls(A=A, J_c=np.zeros((0, n)), U=np.eye(n))


@dataclass(frozen=True)
class TaskSpec:
    """One task: Jacobian, desired acceleration, and priority rank >= 1."""

    J: np.ndarray
    accel_des: np.ndarray = field(default_factory=lambda: np.zeros(0))
    priority: int = 1

    def __post_init__(self):
        J = np.atleast_2d(np.asarray(self.J, dtype=float))
        object.__setattr__(self, "J", J)
        a = np.asarray(self.accel_des, dtype=float)
        if a.size == 0:
            a = np.zeros(J.shape[0])
        object.__setattr__(self, "accel_des", a)
        if J.shape[0] > J.shape[1]:
            raise ValueError("task dimension exceeds configuration dimension")
        if self.priority < 1:
            raise ValueError("priority rank must be >= 1")


@dataclass(frozen=True)
class ProjectionSet:
    """Constraint-level operators shared by every task on one system.

    ``cancellation_residual`` is the max-norm defect of
    UNc_bar (U N_c) = N_c; it is zero when the actuation can span the
    constrained motion (the condition the torque recursion relies on) and
    is surfaced so degraded rank conditions are visible instead of silent.
    """

    Lambda_c: np.ndarray   # k x k constrained mass
    N_c: np.ndarray        # n x n constraint null space
    Jbar_c: np.ndarray     # n x k dynamically consistent inverse of J_c
    UNc_bar: np.ndarray    # n x m dynamically consistent inverse of U N_c
    cancellation_residual: float = 0.0


@dataclass(frozen=True)
class TaskOperators:
    """Operators for one task under the constraint set."""

    J_star: np.ndarray       # t x m torque-space task Jacobian
    Lambda_star: np.ndarray  # t x t effective task mass
    J_ts: np.ndarray         # t x n constraint-projected task Jacobian
    rank_deficient: bool


def constraint_operators(sys: ConstrainedSystem) -> ProjectionSet:
    """Lambda_c, N_c, Jbar_c (and the UN_c inverse) for the constraint set."""
    n = sys.n
    A_inv = sys.A_inv
    if sys.J_c.shape[0] == 0:
        Lambda_c = np.zeros((0, 0))
        Jbar_c = np.zeros((n, 0))
        N_c = np.eye(n)
    else:
        Lambda_c = pinv(sys.J_c @ A_inv @ sys.J_c.T)
        Jbar_c = A_inv @ sys.J_c.T @ Lambda_c
        N_c = np.eye(n) - Jbar_c @ sys.J_c
    UNc_bar = dyn_consistent_inverse(sys.U @ N_c, A_inv)
    residual = float(np.max(np.abs(UNc_bar @ (sys.U @ N_c) - N_c))) \
        if N_c.size else 0.0
    return ProjectionSet(Lambda_c=Lambda_c, N_c=N_c, Jbar_c=Jbar_c,
                         UNc_bar=UNc_bar, cancellation_residual=residual)


def task_operators(sys: ConstrainedSystem, proj: ProjectionSet,
                   task: TaskSpec) -> TaskOperators:
    """J* and Lambda* for a task; pseudoinverse + flag when rank-deficient."""
    J_ts = task.J @ proj.N_c
    core = J_ts @ sys.A_inv @ J_ts.T
    deficient = matrix_rank(core) < core.shape[0]
    Lambda_star = pinv(core) if deficient else np.linalg.inv(core)
    J_star = J_ts @ proj.UNc_bar
    return TaskOperators(J_star=J_star, Lambda_star=Lambda_star, J_ts=J_ts,
                         rank_deficient=deficient)


def osc_torque(sys: ConstrainedSystem, proj: ProjectionSet, task: TaskSpec,
               ops: TaskOperators | None = None,
               gravity: np.ndarray | None = None,
               jcdot_qdot: np.ndarray | None = None) -> np.ndarray:
    """Actuation torques T = J*^T F realizing the task acceleration.

    F compensates the constraint-consistent gravity term and the
    constraint-drift term J Jbar_c (Jd_c qd) so that the realized task
    acceleration equals ``task.accel_des``.
    """
    if ops is None:
        ops = task_operators(sys, proj, task)
    F = ops.Lambda_star @ task.accel_des
    if gravity is not None:
        F = F + ops.Lambda_star @ (ops.J_ts @ sys.A_inv @ proj.N_c.T @ gravity)
    if jcdot_qdot is not None and proj.Jbar_c.shape[1]:
        F = F + ops.Lambda_star @ (task.J @ proj.Jbar_c @ jcdot_qdot)
    return ops.J_star.T @ F


@dataclass(frozen=True)
class HierarchyOperators:
    """Two-level priority operators and the constrained-manifold basis."""

    N_1: np.ndarray          # n x n null projection of the priority task
    Lambda2_star: np.ndarray  # t2 x t2 lower-task mass under the hierarchy
    basis: np.ndarray        # columns u_1..u_r2 spanning the feasible accels
    rank: int


def hierarchy_operators(sys: ConstrainedSystem, proj: ProjectionSet,
                        task1: TaskSpec, task2: TaskSpec) -> HierarchyOperators:
    """Priority-protecting projection N_1 and the lower task's operators.

    N_1 = I - A^{-1} N_c^T J_1^T (J_1 A^{-1} N_c^T J_1^T)^+ J_1 N_c, and
    Lambda2* = J_2 N_1 A^{-1} N_1^T J_2^T. The singular vectors of Lambda2*
    with value above the shared cutoff span the accelerations the lower task
    can realize without disturbing task 1.
    """
    A_inv = sys.A_inv
    mid = task1.J @ A_inv @ proj.N_c.T @ task1.J.T
    N_1 = np.eye(sys.n) - A_inv @ proj.N_c.T @ task1.J.T @ pinv(mid) \
        @ task1.J @ proj.N_c
    Lambda2 = task2.J @ N_1 @ A_inv @ N_1.T @ task2.J.T
    Lambda2 = 0.5 * (Lambda2 + Lambda2.T)
    w, V = np.linalg.eigh(Lambda2)
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    if w.size and w[0] > 0.0:
        rank = int(np.sum(w > SVD_CUTOFF * w[0]))
    else:
        rank = 0
    return HierarchyOperators(N_1=N_1, Lambda2_star=Lambda2,
                              basis=V[:, :rank], rank=rank)


def project_displacement(sys: ConstrainedSystem, proj: ProjectionSet,
                         task1: TaskSpec, delta: np.ndarray) -> tuple[np.ndarray, bool]:
    """Project a configuration displacement onto the task-1-preserving span.

    Applies Lambda2*^+ Lambda2* with the lower task taken as the full joint
    posture (J_2 = I). Returns (projected delta, fully_constrained flag);
    the flag is set when the span is empty and the zero delta is returned.
    """
    posture = TaskSpec(J=np.eye(sys.n), priority=task1.priority + 1)
    hier = hierarchy_operators(sys, proj, task1, posture)
    if hier.rank == 0:
        return np.zeros(sys.n), True
    basis = hier.basis
    return basis @ (basis.T @ np.asarray(delta, dtype=float)), False


@dataclass(frozen=True)
class PriorityLevel:
    """Per-level operators of a prioritized hierarchy in torque space."""

    J_star_prec: np.ndarray  # t_i x m task Jacobian projected below its precursors
    N_prec: np.ndarray       # m x m null projection of this level
    Lambda_prec: np.ndarray  # t_i x t_i level mass


def prioritized_operators(sys: ConstrainedSystem, proj: ProjectionSet,
                          tasks: list[TaskSpec]) -> list[PriorityLevel]:
    """Recursive task hierarchy: J*_{i|prec(i)} and N_{i|prec(i)} per level.

    Levels act in the m-dimensional actuation space with mobility metric
    Phi* = U N_c A^{-1} (U N_c)^T; each level's Jacobian is projected into
    the product of all higher-priority null spaces.
    """
    UNc = sys.U @ proj.N_c
    Phi = UNc @ sys.A_inv @ UNc.T
    m = Phi.shape[0]
    levels: list[PriorityLevel] = []
    N_accum = np.eye(m)
    for task in sorted(tasks, key=lambda t: t.priority):
        J_star = task.J @ proj.N_c @ proj.UNc_bar
        J_prec = J_star @ N_accum
        Lambda = pinv(J_prec @ Phi @ J_prec.T)
        Jbar = Phi @ J_prec.T @ Lambda
        N_level = np.eye(m) - Jbar @ J_prec
        levels.append(PriorityLevel(J_star_prec=J_prec, N_prec=N_level,
                                    Lambda_prec=Lambda))
        N_accum = N_accum @ N_level
    return levels
