"""Octree index over stored link capsules.

Cells subdivide until MAX_DEPTH; a capsule is recorded in every deepest
cell whose center lies within (cell width + capsule radius) of its segment.
Because a passing leaf implies every ancestor passes the same test, the
recursive build and direct leaf-level rasterization store identical cell
sets; ``Octree`` uses the vectorized form and ``build_octree`` keeps the
recursive reference. The index only accelerates queries; results always
match a linear scan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Capsule, segment_distance

DEFAULT_MAX_DEPTH = 6
DEFAULT_WORKSPACE = 2.0   # cube edge length [m]

_OCTANTS = np.array([[sx, sy, sz] for sx in (-1, 1)
                     for sy in (-1, 1) for sz in (-1, 1)], dtype=float)


@dataclass
class OctreeNode:
    center: np.ndarray
    half_width: float
    depth: int
    children: list | None = None
    links: list = field(default_factory=list)

    @property
    def width(self) -> float:
        """Full edge length; the distance test uses this width."""
        return 2.0 * self.half_width

    def create_children(self):
        quarter = self.half_width / 2.0
        self.children = [
            OctreeNode(center=self.center + quarter * off, half_width=quarter,
                       depth=self.depth + 1)
            for off in _OCTANTS
        ]


def build_octree(capsule: Capsule, node: OctreeNode,
                 max_depth: int = DEFAULT_MAX_DEPTH) -> int:
    """Recursive insertion; returns the number of deepest cells touched."""
    if node.depth == max_depth:
        node.links.append(capsule)
        return 1
    if node.children is None:
        node.create_children()
    stored = 0
    for child in node.children:
        d = segment_distance(child.center, child.center,
                             capsule.start, capsule.end)
        if d <= child.width + capsule.radius:
            stored += build_octree(capsule, child, max_depth)
    return stored


def collect_leaves(node: OctreeNode, max_depth: int):
    """Populated deepest cells of a recursively built tree."""
    stack = [node]
    while stack:
        n = stack.pop()
        if n.depth == max_depth:
            if n.links:
                yield n
        elif n.children is not None:
            stack.extend(n.children)


def brute_force_leaf_cells(capsule: Capsule, center, width: float,
                           max_depth: int) -> set[tuple[int, int, int]]:
    """Index set of deepest cells passing the storage test, by linear scan."""
    n = 2 ** max_depth
    cell = width / n
    center = np.asarray(center, dtype=float)
    lo = center - width / 2.0
    hits = set()
    for ix in range(n):
        for iy in range(n):
            for iz in range(n):
                c = lo + cell * (np.array([ix, iy, iz]) + 0.5)
                d = segment_distance(c, c, capsule.start, capsule.end)
                if d <= cell + capsule.radius:
                    hits.add((ix, iy, iz))
    return hits


def _points_segment_distance(points: np.ndarray, a: np.ndarray,
                             b: np.ndarray) -> np.ndarray:
    """Distances from many points to one segment, vectorized."""
    e = b - a
    ee = float(e @ e)
    if ee < 1e-18:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ e / ee, 0.0, 1.0)
    closest = a + t[:, None] * e
    return np.linalg.norm(points - closest, axis=1)


class Octree:
    """Leaf-cell index for capsules, equivalent to the recursive tree.

    Cells are addressed by integer (ix, iy, iz) at the deepest level; the
    storage rule is the same center-distance test as ``build_octree``.
    """

    def __init__(self, center=(0.0, 0.0, 0.0), width: float = DEFAULT_WORKSPACE,
                 max_depth: int = DEFAULT_MAX_DEPTH):
        self.center = np.asarray(center, dtype=float)
        self.width = float(width)
        self.max_depth = int(max_depth)
        self.cells: dict[tuple[int, int, int], list[Capsule]] = {}
        # capsules not fully inside the cube bypass the spatial filter, so
        # filtered queries stay exactly equal to a linear scan
        self.overflow: list[Capsule] = []
        self.max_radius = 0.0
        self._n = 2 ** self.max_depth
        self._lo = self.center - self.width / 2.0
        self._centers_cache: np.ndarray | None = None
        self._keys_cache: list | None = None

    @property
    def leaf_width(self) -> float:
        return self.width / self._n

    def _inside(self, point: np.ndarray) -> bool:
        return bool(np.all(np.abs(point - self.center) <= self.width / 2.0))

    def populated_cells(self) -> set[tuple[int, int, int]]:
        """All populated deepest cells as (ix, iy, iz) tuples."""
        n = self._n
        return {(k // (n * n), (k // n) % n, k % n) for k in self.cells}

    def cell_center(self, cell: tuple[int, int, int]) -> np.ndarray:
        return self._lo + self.leaf_width * (np.asarray(cell) + 0.5)

    def _flat_hits(self, capsule: Capsule) -> np.ndarray:
        """Flat indices of deepest cells passing the storage test."""
        w = self.leaf_width
        reach = w + capsule.radius
        lo_pt = np.minimum(capsule.start, capsule.end) - reach - 0.5 * w
        hi_pt = np.maximum(capsule.start, capsule.end) + reach + 0.5 * w
        lo_idx = np.maximum(np.floor((lo_pt - self._lo) / w).astype(int), 0)
        hi_idx = np.minimum(np.floor((hi_pt - self._lo) / w).astype(int),
                            self._n - 1)
        if np.any(hi_idx < lo_idx):
            return np.zeros(0, dtype=np.int64)
        ranges = [np.arange(lo_idx[k], hi_idx[k] + 1) for k in range(3)]
        grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1)
        idx = grid.reshape(-1, 3)
        centers = self._lo + w * (idx + 0.5)
        d = _points_segment_distance(centers, capsule.start, capsule.end)
        hits = idx[d <= reach]
        return (hits[:, 0] * self._n + hits[:, 1]) * self._n + hits[:, 2]

    def leaf_cells(self, capsule: Capsule) -> set[tuple[int, int, int]]:
        """Deepest cells passing the storage test, as (ix, iy, iz) tuples."""
        n = self._n
        out = set()
        for key in self._flat_hits(capsule).tolist():
            out.add((key // (n * n), (key // n) % n, key % n))
        return out

    def insert(self, capsule: Capsule):
        hits = self._flat_hits(capsule).tolist()
        cells = self.cells
        for key in hits:
            bucket = cells.get(key)
            if bucket is None:
                cells[key] = [capsule]
            else:
                bucket.append(capsule)
        if not hits or not (self._inside(capsule.start)
                            and self._inside(capsule.end)):
            self.overflow.append(capsule)
        self.max_radius = max(self.max_radius, capsule.radius)
        self._centers_cache = None

    def _populated_centers(self):
        if self._centers_cache is None:
            self._keys_cache = list(self.cells.keys())
            if self._keys_cache:
                flat = np.asarray(self._keys_cache, dtype=np.int64)
                n = self._n
                idx = np.column_stack([flat // (n * n), (flat // n) % n,
                                       flat % n]).astype(float)
                self._centers_cache = self._lo + self.leaf_width * (idx + 0.5)
            else:
                self._centers_cache = np.zeros((0, 3))
        return self._keys_cache, self._centers_cache

    def candidates_near_segment(self, p1, p2, margin: float) -> list[Capsule]:
        """Capsules stored in cells whose center is near a query segment.

        ``margin`` is added to the cell width in the distance test; with
        margin >= query radius + stored radius the result is a superset of
        every stored capsule within reach of the segment.
        """
        keys, centers = self._populated_centers()
        found: list[Capsule] = []
        seen: set[int] = set()
        if keys:
            d = _points_segment_distance(centers, np.asarray(p1, float),
                                         np.asarray(p2, float))
            for k in np.nonzero(d <= self.leaf_width + margin)[0]:
                for cap in self.cells[keys[k]]:
                    if id(cap) not in seen:
                        seen.add(id(cap))
                        found.append(cap)
        for cap in self.overflow:
            if id(cap) not in seen:
                seen.add(id(cap))
                found.append(cap)
        return found
