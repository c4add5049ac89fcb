import numpy as np
import pytest

from omnisafe.planning.kinematics import demo_arm, planar_two_link
from omnisafe.planning.roadmap import (EmptyRoadmapError, ROADMAP_MAGIC,
                                       brute_force_intersections, load_roadmap,
                                       prm_learn, save_roadmap,
                                       search_intersections)


@pytest.fixture(scope="module")
def arm_roadmaps():
    """One constrained and one unconstrained roadmap, shared by tests."""
    chain = demo_arm()
    rng = np.random.default_rng(42)
    seed = np.array([0.0, 0.4, 0.6, 0.2])
    goal = chain.tip_position(seed)
    constrained = prm_learn(chain, rng, budget=900, goal=goal,
                            seed_config=seed, max_extension_steps=4)
    unconstrained = prm_learn(chain, rng, budget=500, seed_config=seed,
                              max_extension_steps=4)
    return {"chain": chain, "goal": goal, "seed": seed,
            "constrained": constrained, "unconstrained": unconstrained}


class TestLearning:
    def test_zero_budget_empty(self):
        chain = planar_two_link()
        rm = prm_learn(chain, np.random.default_rng(0), budget=0)
        assert rm.n_nodes == 0
        assert rm.edges == []

    def test_infeasible_seed_raises(self):
        chain = demo_arm()
        with pytest.raises(EmptyRoadmapError):
            prm_learn(chain, np.random.default_rng(0), budget=5,
                      seed_config=np.array([0.0, 1.2, 2.4, 1.8]))

    def test_nodes_feasible_and_connected(self, arm_roadmaps):
        rm = arm_roadmaps["unconstrained"]
        chain = arm_roadmaps["chain"]
        assert rm.n_nodes > 100
        for q in rm.nodes:
            assert chain.within_limits(q)
        # the extension discipline produces one connected tree
        seen = {0}
        frontier = [0]
        adj = rm.adjacency()
        while frontier:
            node = frontier.pop()
            for nxt, _ in adj[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        assert seen == set(range(rm.n_nodes))

    def test_constrained_nodes_hold_goal(self, arm_roadmaps):
        rm = arm_roadmaps["constrained"]
        chain = arm_roadmaps["chain"]
        goal = arm_roadmaps["goal"]
        assert rm.n_nodes > 50
        for q in rm.nodes:
            assert np.linalg.norm(chain.tip_position(q) - goal) <= 0.01

    def test_unconstrained_annulus_coverage(self):
        # forearm reachable volume of the planar two-link arm: cells inside
        # the analytic annulus are covered and nothing falls outside it
        chain = planar_two_link(l1=0.5, l2=0.4, radius=0.04)
        rng = np.random.default_rng(7)
        rm = prm_learn(chain, rng, budget=10_000, max_extension_steps=1)
        tree = rm.octrees[1]
        inner, outer = 0.1, 0.9
        w = tree.leaf_width
        covered = tree.populated_cells()
        n = tree._n
        margin = 2 * w + 0.04
        total = hit = 0
        for ix in range(n):
            for iy in range(n):
                cx, cy, _ = tree.cell_center((ix, iy, 0))
                r = float(np.hypot(cx, cy))
                for iz in (n // 2 - 1, n // 2):
                    if inner + margin <= r <= outer - margin:
                        total += 1
                        hit += (ix, iy, iz) in covered
        assert total > 1000
        assert hit / total >= 0.95
        for cell in covered:
            cx, cy, cz = tree.cell_center(cell)
            r = float(np.hypot(cx, cy))
            assert inner - margin <= r <= outer + margin
            assert abs(cz) <= margin


class TestSearch:
    def test_trajectory_outside_workspace(self, arm_roadmaps):
        rm = arm_roadmaps["unconstrained"]
        hits = search_intersections(rm, [10.0, 10.0, 10.0], [0.0, 0.0, 1.0],
                                    0.1, 4.0)
        assert all(len(s) == 0 for s in hits)

    def test_through_stored_capsule(self, arm_roadmaps):
        rm = arm_roadmaps["unconstrained"]
        cap = rm.link_capsules[2][0]
        mid = 0.5 * (cap.start + cap.end)
        start = mid + np.array([0.0, 0.0, 1.0])
        hits = search_intersections(rm, start, [0.0, 0.0, -1.0], 0.05, 2.0)
        assert cap.config_id in hits[2]

    def test_equals_brute_force_random_scenes(self, arm_roadmaps, rng):
        for rm in (arm_roadmaps["unconstrained"],
                   arm_roadmaps["constrained"]):
            for _ in range(25):
                p = rng.uniform(-1.2, 1.2, size=3)
                v = rng.normal(scale=0.5, size=3)
                r = float(rng.uniform(0.02, 0.2))
                t_h = float(rng.uniform(0.5, 5.0))
                fast = search_intersections(rm, p, v, r, t_h)
                slow = brute_force_intersections(rm, p, v, r, t_h)
                assert fast == slow


class TestPaths:
    def test_shortest_path_reaches_goal_set(self, arm_roadmaps):
        rm = arm_roadmaps["unconstrained"]
        goals = {rm.n_nodes - 1, rm.n_nodes - 2}
        path = rm.shortest_path(0, goals)
        assert path is not None
        assert path[0] == 0
        assert path[-1] in goals
        for a, b in zip(path, path[1:]):
            assert (a, b) in rm.edges or (b, a) in rm.edges

    def test_unreachable_goal_none(self, arm_roadmaps):
        rm = arm_roadmaps["unconstrained"]
        assert rm.shortest_path(0, set()) is None


class TestSerialization:
    def test_round_trip(self, arm_roadmaps, tmp_path):
        rm = arm_roadmaps["constrained"]
        chain = arm_roadmaps["chain"]
        path = tmp_path / "volume.omniroadmap"
        save_roadmap(rm, path)
        assert path.read_bytes()[:8] == ROADMAP_MAGIC
        loaded = load_roadmap(path, chain)
        assert loaded.n_nodes == rm.n_nodes
        assert loaded.edges == rm.edges
        assert loaded.constrained
        np.testing.assert_allclose(loaded.goal, arm_roadmaps["goal"])
        for a, b in zip(loaded.nodes, rm.nodes):
            np.testing.assert_array_equal(a, b)
        # octrees rebuilt identically
        for t_new, t_old in zip(loaded.octrees, rm.octrees):
            assert t_new.populated_cells() == t_old.populated_cells()

    def test_bad_magic_rejected(self, tmp_path, arm_roadmaps):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTAMAP!" + b"\x00" * 64)
        with pytest.raises(ValueError):
            load_roadmap(path, arm_roadmaps["chain"])

    def test_wrong_chain_rejected(self, tmp_path, arm_roadmaps):
        rm = arm_roadmaps["unconstrained"]
        path = tmp_path / "volume.omniroadmap"
        save_roadmap(rm, path)
        with pytest.raises(ValueError):
            load_roadmap(path, planar_two_link())
