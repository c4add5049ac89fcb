"""Collision risk between two tracked objects.

Two uncertain discs approach, pass, and recede. At each observation the
accumulated collision probability over a 4 s horizon is recomputed; the
agent would intervene while the risk at the time threshold stays above
eta = 0.5.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from omnisafe.collision_prediction import (Gaussian, GaussianBelief,
                                           NoiseParams, PredictionConfig,
                                           cumulative_cp, instantaneous_cp)

OUT = Path("out")
OUT.mkdir(exist_ok=True)

noise = NoiseParams(dt=0.033, sigma_d=1e-4, sigma_a=0.01, sigma_s=0.0004,
                    dims=2)
config = PredictionConfig(eta=0.5, time_threshold=4.0, horizon=152)
radius_sum = 0.28

print("accumulated risk as the gap closes:")
gaps = [3.0, 2.5, 2.0, 1.5, 1.0]
series = {}
for gap in gaps:
    b_i = GaussianBelief(np.array([gap, 0.0, -0.5, 0.0]),
                         np.diag([1e-3, 1e-3, 1e-4, 1e-4]))
    b_j = GaussianBelief(np.zeros(4), np.diag([1e-3, 1e-3, 1e-6, 1e-6]))
    risk = cumulative_cp(b_i, b_j, radius_sum, noise, config)
    k_thr = int(round(config.time_threshold / noise.dt))
    p = risk.p_ac[min(k_thr, config.horizon - 1)]
    series[gap] = risk.p_ac
    print(f"  gap {gap:.1f} m: p_ac at the 4 s threshold = {p:.3f}"
          f"{'  -> intervene' if p >= config.eta else ''}")

print("\ninstantaneous overlap probability at a 0.35 m gap:")
p = instantaneous_cp(Gaussian([0.35, 0.0], 0.01 * np.eye(2)),
                     Gaussian([0.0, 0.0], 0.01 * np.eye(2)), radius_sum)
print(f"  p_ic = {p:.4f}")

fig, ax = plt.subplots(figsize=(7, 4.5))
t = noise.dt * np.arange(config.horizon)
for gap in gaps:
    ax.plot(t, series[gap], label=f"gap {gap:.1f} m")
ax.axhline(config.eta, color="r", ls="--", label="eta = 0.5")
ax.axvline(config.time_threshold, color="k", ls=":", label="T_th = 4 s")
ax.set_xlabel("prediction horizon [s]")
ax.set_ylabel("accumulated collision probability")
ax.legend()
ax.set_title("risk forecasts while an object approaches")
fig.tight_layout()
fig.savefig(OUT / "collision_prediction.png", dpi=130)
print(f"\nwrote {OUT / 'collision_prediction.png'}")
