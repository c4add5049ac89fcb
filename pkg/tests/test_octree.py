import numpy as np
import pytest

from omnisafe.planning.geometry import Capsule, segment_distance
from omnisafe.planning.octree import (Octree, OctreeNode,
                                      brute_force_leaf_cells, build_octree,
                                      collect_leaves)


class TestRecursiveBuild:
    def test_capsule_outside_root(self):
        root = OctreeNode(center=np.zeros(3), half_width=1.0, depth=0)
        cap = Capsule([5.0, 5.0, 5.0], [6.0, 5.0, 5.0], radius=0.05)
        stored = build_octree(cap, root, max_depth=3)
        assert stored == 0
        assert list(collect_leaves(root, 3)) == []

    def test_matches_exhaustive_scan(self, rng):
        max_depth = 3
        for _ in range(10):
            root = OctreeNode(center=np.zeros(3), half_width=1.0, depth=0)
            p = rng.uniform(-0.9, 0.9, size=3)
            q = rng.uniform(-0.9, 0.9, size=3)
            cap = Capsule(p, q, radius=float(rng.uniform(0.02, 0.2)))
            build_octree(cap, root, max_depth=max_depth)
            width = 2.0 * root.half_width
            cell = width / 2 ** max_depth
            lo = root.center - root.half_width
            got = set()
            for leaf in collect_leaves(root, max_depth):
                idx = np.floor((leaf.center - lo) / cell).astype(int)
                got.add(tuple(int(v) for v in idx))
            expected = brute_force_leaf_cells(cap, root.center, width,
                                              max_depth)
            assert got == expected

    def test_axis_aligned_through_center(self):
        max_depth = 3
        root = OctreeNode(center=np.zeros(3), half_width=1.0, depth=0)
        cap = Capsule([-0.8, 0.0, 0.0], [0.8, 0.0, 0.0], radius=0.05)
        build_octree(cap, root, max_depth=max_depth)
        got = {tuple(np.floor((leaf.center - (root.center - 1.0)) / 0.25)
                     .astype(int).tolist())
               for leaf in collect_leaves(root, max_depth)}
        expected = brute_force_leaf_cells(cap, root.center, 2.0, max_depth)
        assert got == expected


class TestFastIndex:
    def test_depth_six_cell_size(self):
        tree = Octree(width=2.0, max_depth=6)
        assert tree.leaf_width == pytest.approx(0.03125)

    def test_matches_recursive_reference(self, rng):
        for _ in range(15):
            tree = Octree(width=2.0, max_depth=4)
            p = rng.uniform(-0.9, 0.9, size=3)
            q = rng.uniform(-0.9, 0.9, size=3)
            cap = Capsule(p, q, radius=float(rng.uniform(0.02, 0.15)))
            fast = tree.leaf_cells(cap)
            root = OctreeNode(center=np.zeros(3), half_width=1.0, depth=0)
            build_octree(cap, root, max_depth=4)
            lo = root.center - 1.0
            cell = 2.0 / 2 ** 4
            slow = {tuple(np.floor((leaf.center - lo) / cell).astype(int)
                          .tolist())
                    for leaf in collect_leaves(root, 4)}
            assert fast == slow

    def test_insert_and_populated_cells(self):
        tree = Octree(width=2.0, max_depth=4)
        cap = Capsule([-0.5, 0.0, 0.0], [0.5, 0.0, 0.0], radius=0.05)
        tree.insert(cap)
        assert tree.populated_cells() == tree.leaf_cells(cap)
        assert not tree.overflow

    def test_outside_capsule_goes_to_overflow(self):
        tree = Octree(width=2.0, max_depth=4)
        cap = Capsule([5.0, 0.0, 0.0], [6.0, 0.0, 0.0], radius=0.05)
        tree.insert(cap)
        assert tree.overflow == [cap]
        assert not tree.cells

    def test_boundary_capsule_in_overflow_too(self):
        tree = Octree(width=2.0, max_depth=4)
        cap = Capsule([0.9, 0.0, 0.0], [1.4, 0.0, 0.0], radius=0.05)
        tree.insert(cap)
        assert tree.cells            # partially stored
        assert tree.overflow == [cap]

    def test_candidate_filter_superset(self, rng):
        tree = Octree(width=2.0, max_depth=4)
        caps = []
        for i in range(60):
            p = rng.uniform(-0.95, 0.95, size=3)
            q = p + rng.uniform(-0.3, 0.3, size=3)
            cap = Capsule(p, q, radius=0.04, config_id=i)
            tree.insert(cap)
            caps.append(cap)
        for _ in range(20):
            a = rng.uniform(-1.2, 1.2, size=3)
            b = rng.uniform(-1.2, 1.2, size=3)
            r_query = 0.1
            margin = r_query + tree.max_radius
            cand = {c.config_id
                    for c in tree.candidates_near_segment(a, b, margin)}
            actual = {c.config_id for c in caps
                      if segment_distance(c.start, c.end, a, b)
                      <= r_query + c.radius}
            assert actual <= cand
