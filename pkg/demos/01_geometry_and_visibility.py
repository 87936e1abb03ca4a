"""Constellation geometry walk-through.

Places users on a Fibonacci lattice, propagates a Starlink-like shell,
and looks at slant ranges, elevation statistics and per-link Doppler.
Figures land in demos/output/.
"""

import math
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from leoprs import (
    ShellConfig,
    UserLocation,
    channel_params,
    fibonacci_lattice,
    max_slant_range,
    visible_set,
)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

shell = ShellConfig(altitude_m=554e3, inclination_rad=math.radians(53.0),
                    plane_count=72, sats_per_plane=22, phasing=1)
print(f"shell: {shell.total} satellites at {shell.altitude_m/1e3:.0f} km, "
      f"inclination {math.degrees(shell.inclination_rad):.0f} deg")

# --- user lattice ---------------------------------------------------------
users = fibonacci_lattice(100)
fig, ax = plt.subplots(figsize=(7, 3.5))
ax.scatter([math.degrees(u.lon) for u in users],
           [math.degrees(u.lat) for u in users], s=12)
ax.set_xlabel("longitude [deg]")
ax.set_ylabel("latitude [deg]")
ax.set_title("100 users on a Fibonacci lattice")
ax.grid(alpha=0.3)
fig.savefig(os.path.join(OUT, "01_user_lattice.png"), dpi=150,
            bbox_inches="tight")
plt.close(fig)

# --- slant range vs elevation mask ----------------------------------------
masks = np.linspace(0.0, 90.0, 91)
ranges = [max_slant_range(shell.altitude_m, math.radians(d)) / 1e3
          for d in masks]
print(f"max slant range: {ranges[0]:.0f} km at the horizon, "
      f"{ranges[25]:.0f} km at a 25 deg mask, {ranges[-1]:.0f} km at zenith")

fig, ax = plt.subplots(figsize=(5, 3.5))
ax.plot(masks, ranges)
ax.set_xlabel("elevation mask [deg]")
ax.set_ylabel("max slant range [km]")
ax.grid(alpha=0.3)
fig.savefig(os.path.join(OUT, "01_slant_range.png"), dpi=150,
            bbox_inches="tight")
plt.close(fig)

# --- visibility and Doppler statistics -------------------------------------
rng = np.random.default_rng(0)
mask = math.radians(25.0)
counts, dopplers = [], []
for _ in range(300):
    user = UserLocation(0, math.asin(rng.uniform(-1, 1)),
                        rng.uniform(-math.pi, math.pi))
    t = float(rng.uniform(0.0, 5700.0))
    vs = visible_set(user, shell, t, mask, 30)
    counts.append(len(vs.links))
    for _, geom in vs.links[:4]:
        dopplers.append(channel_params(geom, 2.2e9, rng).doppler_hz / 1e3)

print(f"satellites above a 25 deg mask: median {np.median(counts):.0f}, "
      f"p5 {np.percentile(counts, 5):.0f}, p95 {np.percentile(counts, 95):.0f}")
print(f"fraction of draws with >= 4 visible: "
      f"{np.mean(np.array(counts) >= 4):.2%}")
print(f"top-4 link Doppler span: {min(dopplers):+.1f} .. "
      f"{max(dopplers):+.1f} kHz at 2.2 GHz")

fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
axes[0].hist(counts, bins=range(0, max(counts) + 2), edgecolor="k")
axes[0].set_xlabel("satellites above 25 deg")
axes[0].set_ylabel("draws")
axes[1].hist(dopplers, bins=40, edgecolor="k")
axes[1].set_xlabel("link Doppler [kHz]")
for ax in axes:
    ax.grid(alpha=0.3)
fig.savefig(os.path.join(OUT, "01_visibility_doppler.png"), dpi=150,
            bbox_inches="tight")
plt.close(fig)
print("figures written to", OUT)
