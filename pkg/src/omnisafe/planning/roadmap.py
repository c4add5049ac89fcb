"""Probabilistic roadmap with per-link reachable-volume octrees.

The learning phase samples configurations, walks from the nearest existing
node in fixed STEP increments (projected onto the goal-task manifold when
constrained), and registers every accepted configuration's link capsules in
per-link octrees. The roadmap serializes to a small versioned binary file
so learning and querying can run as separate invocations.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from ..wbosc import ConstrainedSystem, TaskSpec, constraint_operators, \
    project_displacement
from .geometry import Capsule, segment_distance
from .kinematics import KinematicChain, fk_capsules, position_jacobian, \
    self_collides
from .octree import Octree, DEFAULT_MAX_DEPTH, DEFAULT_WORKSPACE

STEP = 0.05                     # joint-space extension step [rad]
CONSTRAINT_TOL = 0.01           # allowed end-effector drift [m]
ROADMAP_MAGIC = b"OMNIRV1\x00"


class EmptyRoadmapError(RuntimeError):
    """Sampling produced no feasible configuration."""


@dataclass
class Roadmap:
    """Nodes, edges, per-link capsules, and their octrees.

    Construction is single-writer; once learning finishes the roadmap and
    its octrees are treated as immutable and may be queried concurrently.
    """

    chain: KinematicChain
    nodes: list = field(default_factory=list)         # configurations
    edges: list = field(default_factory=list)         # (i, j) index pairs
    link_capsules: list = field(default_factory=list)  # per link: list[Capsule]
    octrees: list = field(default_factory=list)        # per link: Octree
    constrained: bool = False
    goal: np.ndarray | None = None

    def __post_init__(self):
        if not self.link_capsules:
            self.link_capsules = [[] for _ in range(self.chain.n_links)]
        if not self.octrees:
            self.octrees = [Octree() for _ in range(self.chain.n_links)]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def add_node(self, q: np.ndarray, parent: int | None = None) -> int:
        idx = len(self.nodes)
        self.nodes.append(np.asarray(q, dtype=float).copy())
        if parent is not None:
            self.edges.append((parent, idx))
        for link_idx, cap in enumerate(fk_capsules(self.chain, q, config_id=idx)):
            self.link_capsules[link_idx].append(cap)
            self.octrees[link_idx].insert(cap)
        return idx

    def nearest(self, q: np.ndarray) -> int:
        pts = np.asarray(self.nodes)
        return int(np.argmin(np.linalg.norm(pts - q, axis=1)))

    def adjacency(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in self.nodes]
        for i, j in self.edges:
            w = float(np.linalg.norm(self.nodes[i] - self.nodes[j]))
            adj[i].append((j, w))
            adj[j].append((i, w))
        return adj

    def shortest_path(self, start: int, goals: set[int]) -> list[int] | None:
        """Uniform-cost search from ``start`` to the cheapest goal node."""
        import heapq
        adj = self.adjacency()
        dist = {start: 0.0}
        prev: dict[int, int] = {}
        heap = [(0.0, start)]
        visited: set[int] = set()
        while heap:
            d, node = heapq.heappop(heap)
            if node in visited:
                continue
            visited.add(node)
            if node in goals:
                path = [node]
                while node in prev:
                    node = prev[node]
                    path.append(node)
                return path[::-1]
            for nxt, w in adj[node]:
                nd = d + w
                if nd < dist.get(nxt, np.inf):
                    dist[nxt] = nd
                    prev[nxt] = node
                    heapq.heappush(heap, (nd, nxt))
        return None


def _constrained_projector(chain: KinematicChain, goal: np.ndarray):
    """Displacement projector preserving the tip-position task at q."""
    sys_template = ConstrainedSystem.unconstrained(np.eye(chain.n_joints))
    proj = constraint_operators(sys_template)

    def project(q: np.ndarray, delta: np.ndarray) -> np.ndarray:
        task = TaskSpec(J=position_jacobian(chain, q))
        out, _ = project_displacement(sys_template, proj, task, delta)
        return out

    return project


def _is_feasible(chain: KinematicChain, q: np.ndarray,
                 goal: np.ndarray | None) -> bool:
    if not chain.within_limits(q):
        return False
    if self_collides(chain, q):
        return False
    if goal is not None:
        if np.linalg.norm(chain.tip_position(q) - goal) > CONSTRAINT_TOL:
            return False
    return True


def prm_learn(chain: KinematicChain, rng: np.random.Generator,
              budget: int, goal: np.ndarray | None = None,
              seed_config: np.ndarray | None = None,
              step: float = STEP,
              max_extension_steps: int | None = None,
              workspace_width: float = DEFAULT_WORKSPACE,
              max_depth: int = DEFAULT_MAX_DEPTH) -> Roadmap:
    """Learning phase: sample, extend, and index reachable volumes.

    ``budget`` counts random samples. Each sample extends the roadmap from
    its nearest node in STEP increments until the walk becomes infeasible
    or reaches the sample; ``max_extension_steps`` caps the walk (None
    walks all the way). With a ``goal`` the walk direction is re-projected
    onto the tip-task manifold at every step and feasibility additionally
    requires the tip to stay within CONSTRAINT_TOL of the goal. The roadmap
    is seeded with ``seed_config`` (default: mid-range posture) so
    extensions always have a nearest node.
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    roadmap = Roadmap(chain=chain, constrained=goal is not None,
                      goal=None if goal is None else np.asarray(goal, float))
    roadmap.octrees = [Octree(width=workspace_width, max_depth=max_depth)
                       for _ in range(chain.n_links)]
    if budget == 0:
        return roadmap

    lo, hi = chain.limits
    if seed_config is None:
        seed_config = 0.5 * (lo + hi)
    seed_config = np.asarray(seed_config, dtype=float)
    if not _is_feasible(chain, seed_config, goal):
        raise EmptyRoadmapError("seed configuration infeasible")
    roadmap.add_node(seed_config)

    project = _constrained_projector(chain, goal) if goal is not None else None

    for _ in range(budget):
        q_new = rng.uniform(lo, hi)
        near_idx = roadmap.nearest(q_new)
        q_prev = roadmap.nodes[near_idx]
        remaining = q_new - q_prev
        parent = near_idx
        walk_cap = int(np.linalg.norm(remaining) / step) + 1
        if max_extension_steps is not None:
            walk_cap = min(walk_cap, max_extension_steps)
        for _ in range(walk_cap):
            direction = remaining if project is None else project(q_prev, remaining)
            norm = np.linalg.norm(direction)
            if norm < 1e-9 or np.linalg.norm(remaining) < step:
                break
            q = q_prev + direction / norm * step
            if not _is_feasible(chain, q, goal):
                break
            parent = roadmap.add_node(q, parent=parent)
            remaining = q_new - q
            q_prev = q
    if roadmap.n_nodes == 0:
        raise EmptyRoadmapError("no feasible configuration sampled")
    return roadmap


def search_intersections(roadmap: Roadmap, obj_position: np.ndarray,
                         obj_velocity: np.ndarray, obj_radius: float,
                         t_horizon: float) -> list[set[int]]:
    """Per-link sets of configurations whose stored capsule meets the path.

    The object's path is the segment from its position to position +
    velocity * t_horizon; a configuration joins link j's set when a stored
    capsule of that link comes within obj_radius + capsule radius of the
    segment. Octrees only pre-filter; the exact distance test decides.
    """
    p1 = np.asarray(obj_position, dtype=float)
    p2 = p1 + np.asarray(obj_velocity, dtype=float) * float(t_horizon)
    out: list[set[int]] = []
    for link_idx in range(roadmap.chain.n_links):
        tree = roadmap.octrees[link_idx]
        margin = obj_radius + tree.max_radius
        hits: set[int] = set()
        for cap in tree.candidates_near_segment(p1, p2, margin):
            if segment_distance(cap.start, cap.end, p1, p2) \
                    <= obj_radius + cap.radius:
                hits.add(cap.config_id)
        out.append(hits)
    return out


def brute_force_intersections(roadmap: Roadmap, obj_position, obj_velocity,
                              obj_radius: float,
                              t_horizon: float) -> list[set[int]]:
    """Reference linear scan over every stored capsule."""
    p1 = np.asarray(obj_position, dtype=float)
    p2 = p1 + np.asarray(obj_velocity, dtype=float) * float(t_horizon)
    out: list[set[int]] = []
    for caps in roadmap.link_capsules:
        hits = {cap.config_id for cap in caps
                if segment_distance(cap.start, cap.end, p1, p2)
                <= obj_radius + cap.radius}
        out.append(hits)
    return out


def save_roadmap(roadmap: Roadmap, path) -> None:
    """Versioned little-endian binary dump.

    Layout after the 8-byte magic: u32 flags (bit 0: constrained),
    u32 n_joints, u32 n_nodes, u32 n_edges, f64 goal[3] (zeros when
    unconstrained), f64 workspace width, u32 max_depth, then nodes
    (n_nodes x n_joints f64), then edges (n_edges x 2 u32). Octrees are
    rebuilt deterministically on load.
    """
    chain = roadmap.chain
    with open(path, "wb") as fh:
        fh.write(ROADMAP_MAGIC)
        flags = 1 if roadmap.constrained else 0
        goal = roadmap.goal if roadmap.goal is not None else np.zeros(3)
        tree = roadmap.octrees[0]
        fh.write(struct.pack("<IIII", flags, chain.n_joints,
                             roadmap.n_nodes, len(roadmap.edges)))
        fh.write(struct.pack("<3d", *goal))
        fh.write(struct.pack("<dI", tree.width, tree.max_depth))
        for q in roadmap.nodes:
            fh.write(struct.pack(f"<{chain.n_joints}d", *q))
        for i, j in roadmap.edges:
            fh.write(struct.pack("<II", i, j))


def load_roadmap(path, chain: KinematicChain) -> Roadmap:
    """Rebuild a roadmap (including octrees) from its binary dump."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != ROADMAP_MAGIC:
            raise ValueError("not a roadmap file (bad magic)")
        flags, n_joints, n_nodes, n_edges = struct.unpack("<IIII", fh.read(16))
        if n_joints != chain.n_joints:
            raise ValueError("roadmap was learned for a different chain")
        goal = np.array(struct.unpack("<3d", fh.read(24)))
        width, max_depth = struct.unpack("<dI", fh.read(12))
        constrained = bool(flags & 1)
        roadmap = Roadmap(chain=chain, constrained=constrained,
                          goal=goal if constrained else None)
        roadmap.octrees = [Octree(width=width, max_depth=max_depth)
                           for _ in range(chain.n_links)]
        for _ in range(n_nodes):
            q = np.array(struct.unpack(f"<{n_joints}d",
                                       fh.read(8 * n_joints)))
            roadmap.add_node(q)
        roadmap.edges = []
        for _ in range(n_edges):
            i, j = struct.unpack("<II", fh.read(8))
            roadmap.edges.append((i, j))
    return roadmap
