"""Serial-chain kinematics with capsule-approximated links."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Capsule, capsules_intersect


def _rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    a = axis
    K = np.array([[0.0, -a[2], a[1]],
                  [a[2], 0.0, -a[0]],
                  [-a[1], a[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


@dataclass(frozen=True)
class JointSpec:
    """Revolute joint: rotation axis, translation from the parent frame."""

    axis: np.ndarray
    offset: np.ndarray
    lower: float = -np.pi
    upper: float = np.pi

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        object.__setattr__(self, "axis", axis / np.linalg.norm(axis))
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))
        if self.lower > self.upper:
            raise ValueError("joint limits are inverted")


@dataclass(frozen=True)
class LinkCapsule:
    """Capsule template expressed in one joint frame."""

    joint: int
    start: np.ndarray
    end: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "end", np.asarray(self.end, dtype=float))


@dataclass(frozen=True)
class KinematicChain:
    """Joints, per-link capsule templates, and the tool point."""

    joints: tuple[JointSpec, ...]
    links: tuple[LinkCapsule, ...]
    tip_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    base: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "tip_offset",
                           np.asarray(self.tip_offset, dtype=float))
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def limits(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([j.lower for j in self.joints])
        hi = np.array([j.upper for j in self.joints])
        return lo, hi

    def within_limits(self, q: np.ndarray) -> bool:
        lo, hi = self.limits
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= lo - 1e-12) and np.all(q <= hi + 1e-12))

    def clamp(self, q: np.ndarray) -> np.ndarray:
        lo, hi = self.limits
        return np.clip(np.asarray(q, dtype=float), lo, hi)

    def frames(self, q: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        """World (rotation, origin) of every joint frame."""
        q = np.asarray(q, dtype=float)
        R = np.eye(3)
        p = self.base.copy()
        out = []
        for spec, angle in zip(self.joints, q):
            p = p + R @ spec.offset
            R = R @ _rotation(spec.axis, float(angle))
            out.append((R, p))
        return out

    def tip_position(self, q: np.ndarray) -> np.ndarray:
        R, p = self.frames(q)[-1]
        return p + R @ self.tip_offset


def fk_capsules(chain: KinematicChain, q: np.ndarray,
                config_id: int = -1) -> list[Capsule]:
    """World-frame capsules of every link at configuration ``q``."""
    frames = chain.frames(q)
    caps = []
    for link in chain.links:
        R, p = frames[link.joint]
        caps.append(Capsule(start=p + R @ link.start, end=p + R @ link.end,
                            radius=link.radius, config_id=config_id))
    return caps


def position_jacobian(chain: KinematicChain, q: np.ndarray) -> np.ndarray:
    """3 x N_j Jacobian of the tip position (revolute columns a x r)."""
    frames = chain.frames(q)
    tip = chain.tip_position(q)
    J = np.zeros((3, chain.n_joints))
    for i, (spec, (R_parent, origin)) in enumerate(zip(chain.joints, frames)):
        # world axis: parent rotation applied up to (not including) joint i
        if i == 0:
            R_prev = np.eye(3)
        else:
            R_prev = frames[i - 1][0]
        axis_world = R_prev @ spec.axis
        J[:, i] = np.cross(axis_world, tip - origin)
    return J


def self_collides(chain: KinematicChain, q: np.ndarray) -> bool:
    """True when any pair of non-adjacent link capsules overlaps."""
    caps = fk_capsules(chain, q)
    for i in range(len(caps)):
        for j in range(i + 2, len(caps)):
            if capsules_intersect(caps[i], caps[j]):
                return True
    return False


def planar_two_link(l1: float = 0.5, l2: float = 0.4,
                    radius: float = 0.04) -> KinematicChain:
    """Two z-axis joints in the xy-plane; handy for analytic checks."""
    joints = (
        JointSpec(axis=(0.0, 0.0, 1.0), offset=(0.0, 0.0, 0.0)),
        JointSpec(axis=(0.0, 0.0, 1.0), offset=(l1, 0.0, 0.0)),
    )
    links = (
        LinkCapsule(joint=0, start=(0.0, 0.0, 0.0), end=(l1, 0.0, 0.0),
                    radius=radius),
        LinkCapsule(joint=1, start=(0.0, 0.0, 0.0), end=(l2, 0.0, 0.0),
                    radius=radius),
    )
    return KinematicChain(joints=joints, links=links,
                          tip_offset=np.array([l2, 0.0, 0.0]))


def demo_arm() -> KinematicChain:
    """Four-joint arm with shoulder/upper-arm/forearm/hand capsules.

    A desk-scale stand-in for an upper-body humanoid arm: yaw shoulder,
    two pitch joints, and a wrist, all within a 2 m workspace cube.
    """
    joints = (
        JointSpec(axis=(0.0, 0.0, 1.0), offset=(0.0, 0.0, 0.6),
                  lower=-2.6, upper=2.6),
        JointSpec(axis=(0.0, 1.0, 0.0), offset=(0.0, 0.18, 0.0),
                  lower=-2.0, upper=2.0),
        JointSpec(axis=(0.0, 1.0, 0.0), offset=(0.28, 0.0, 0.0),
                  lower=-2.4, upper=2.4),
        JointSpec(axis=(0.0, 1.0, 0.0), offset=(0.26, 0.0, 0.0),
                  lower=-1.8, upper=1.8),
    )
    links = (
        LinkCapsule(joint=0, start=(0.0, 0.0, 0.0), end=(0.0, 0.16, 0.0),
                    radius=0.07),
        LinkCapsule(joint=1, start=(0.0, 0.0, 0.0), end=(0.28, 0.0, 0.0),
                    radius=0.055),
        LinkCapsule(joint=2, start=(0.0, 0.0, 0.0), end=(0.26, 0.0, 0.0),
                    radius=0.05),
        LinkCapsule(joint=3, start=(0.0, 0.0, 0.0), end=(0.16, 0.0, 0.0),
                    radius=0.045),
    )
    return KinematicChain(joints=joints, links=links,
                          tip_offset=np.array([0.16, 0.0, 0.0]))
