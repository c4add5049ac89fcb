"""Wall detection and constrained sliding.

A commanded circle runs into a 45-degree wall. The pose error flags the
contact, the wall heading is fitted from the motion data, and the
controller projects its commands onto the wall tangent until the planned
path clears the obstacle.
"""

import importlib.resources
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from omnisafe.scenario import load_scenario
from omnisafe.simulator import run_scenario

OUT = Path("out")
OUT.mkdir(exist_ok=True)

ref = importlib.resources.files("omnisafe") / "scenarios" / "wall_follow.scn"
with importlib.resources.as_file(ref) as path:
    scenario = load_scenario(path)
log = run_scenario(scenario)

records = log.base_records
poses = np.array([r.pose for r in records])
targets = np.array([r.target for r in records])
active = np.array([r.wall_active for r in records])
print(f"wall contact steps: {int(active.sum())}")
print(f"estimated slope: {log.wall_slope:.4f} (true {scenario.wall.slope})")

fig, ax = plt.subplots(figsize=(6, 6))
ax.plot(targets[:, 0], targets[:, 1], "k--", label="planned circle")
ax.plot(poses[:, 0], poses[:, 1], label="base path")
ax.plot(poses[active, 0], poses[active, 1], "r.", ms=2,
        label="in contact")
xs = np.linspace(poses[:, 0].min() - 0.1, poses[:, 0].max() + 0.1, 10)
ax.plot(xs, scenario.wall.slope * xs + scenario.wall.offset, "g",
        label="wall")
ax.set_aspect("equal")
ax.set_xlabel("x [m]")
ax.set_ylabel("y [m]")
ax.legend()
ax.set_title("sliding along an estimated wall")
fig.tight_layout()
fig.savefig(OUT / "wall_following.png", dpi=130)
print(f"wrote {OUT / 'wall_following.png'}")
