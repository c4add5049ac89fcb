"""Reachable volumes and intervention planning for the four-joint arm.

An offline learning phase grows constrained (tip pinned at a goal) and
unconstrained roadmaps while indexing every link capsule into per-link
octrees. Online, a ball on a collision course is intercepted by the most
convenient link, preferring postures that keep the tip on its goal.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from omnisafe.planning import (DecisionContext, ObjectTrack, decide_and_plan,
                               demo_arm, prm_learn)

OUT = Path("out")
OUT.mkdir(exist_ok=True)

chain = demo_arm()
rng = np.random.default_rng(42)
home = np.array([0.0, 0.4, 0.6, 0.2])
goal = chain.tip_position(home)
print(f"tip goal: {np.round(goal, 3)}")

print("learning constrained roadmap (tip pinned within 1 cm) ...")
constrained = prm_learn(chain, rng, budget=700, goal=goal, seed_config=home,
                        max_extension_steps=4)
print(f"  {constrained.n_nodes} nodes")
print("learning unconstrained roadmap ...")
unconstrained = prm_learn(chain, rng, budget=400, seed_config=home,
                          max_extension_steps=4)
print(f"  {unconstrained.n_nodes} nodes")

ctx = DecisionContext(constrained=constrained, unconstrained=unconstrained)
# a ball heading for the far side of the forearm's reachable region
from omnisafe.planning import fk_capsules
from omnisafe.planning.planner import _config_intersects

home_caps = fk_capsules(chain, home)
centroid = np.mean([0.5 * (c.start + c.end) for c in home_caps], axis=0)
ref = 0.5 * (home_caps[2].start + home_caps[2].end)
ball = None
for cap in sorted(constrained.link_capsules[2],
                  key=lambda c: -np.linalg.norm(0.5 * (c.start + c.end)
                                                - ref)):
    mid = 0.5 * (cap.start + cap.end)
    d = (mid - centroid) / np.linalg.norm(mid - centroid)
    candidate = ObjectTrack(position=mid + d,
                            velocity=-d * (1.0 - 0.05) / 4.0, radius=0.05)
    if _config_intersects(constrained, home, candidate, 4.0) is None:
        ball = candidate
        break
plan = decide_and_plan(home, False, ctx, ball)
print(f"decision branch: {plan.branch}")
print(f"intervening link: {plan.link}, path length: "
      f"{len(plan.path) if plan.path is not None else None}, "
      f"goal task violated: {plan.constraint_violated}")

fig, ax = plt.subplots(figsize=(6.5, 6))
tree = constrained.octrees[2]
cells = np.array([tree.cell_center(c) for c in tree.populated_cells()])
ax.scatter(cells[:, 0], cells[:, 2], s=4, alpha=0.25,
           label="forearm reachable cells (x-z)")
if plan.path:
    dest = constrained.nodes[plan.path[-1]]
    for name, q, color in (("home", home, "k"), ("plan end", dest, "r")):
        caps = fk_capsules(chain, q)
        for c in caps:
            ax.plot([c.start[0], c.end[0]], [c.start[2], c.end[2]], color,
                    lw=3, alpha=0.8)
        ax.plot([], [], color, label=name)
ax.plot(ball.position[0], ball.position[2], "go", label="ball")
seg_end = ball.position + ball.velocity * 4.0
ax.plot([ball.position[0], seg_end[0]], [ball.position[2], seg_end[2]],
        "g--", label="predicted path")
ax.set_xlabel("x [m]")
ax.set_ylabel("z [m]")
ax.legend(loc="lower left", fontsize=8)
ax.set_title("intercepting a predicted trajectory")
fig.tight_layout()
fig.savefig(OUT / "intervention_planning.png", dpi=130)
print(f"wrote {OUT / 'intervention_planning.png'}")
