"""Delay-Doppler map of a four-satellite scene.

Builds one Monte Carlo draw (four visible satellites through their
delay/Doppler/path-loss channels), computes the full correlation grid
for the strongest satellite and marks every ground-truth location.
"""

import math
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from leoprs import (
    CampaignConfig,
    caf,
    composite_from_links,
    fibonacci_lattice,
    visible_set,
)
from leoprs.montecarlo import NUM_VISIBLE, build_links

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

config = CampaignConfig(users=10, m_values=(12,), cs_values=(4,),
                        ptx_dbw_values=(30.0,))
user = fibonacci_lattice(config.users)[4]
rng = np.random.default_rng(2024)

# scan for an epoch with four satellites above the mask
for t in np.arange(0.0, 600.0, 7.0):
    vis = visible_set(user, config.shell, float(t), config.theta_mask_rad,
                      NUM_VISIBLE)
    if not vis.insufficient:
        break
print(f"user {user.user_id} at t={t:.0f} s sees satellites "
      f"{[sid for sid, _ in vis.links]} "
      f"(elevations {[f'{math.degrees(g.elevation):.0f}' for _, g in vis.links]} deg)")

links = build_links(vis, rng, config, m=12, cs=4, ptx_dbw=30.0)
composite = composite_from_links(links)
soi = links[0]

for lk in links:
    print(f"  sat {lk.sat_id}: delay {1e3*lk.params.delay_s:.3f} ms, "
          f"Doppler {lk.params.doppler_hz/1e3:+.1f} kHz, "
          f"path gain {10*math.log10(lk.params.gain):.1f} dB")

dopplers = np.arange(-config.doppler_max_hz,
                     config.doppler_max_hz + config.doppler_step_hz / 2,
                     config.doppler_step_hz)
ddm = caf(composite, soi.clean, dopplers, soi.config)
peak_delay, peak_doppler, peak_value = ddm.peak()
print(f"DDM grid {ddm.values.shape[0]} delays x {ddm.values.shape[1]} "
      f"Doppler bins; peak {10*math.log10(peak_value):.1f} dBW at "
      f"({1e3*peak_delay:.3f} ms, {peak_doppler/1e3:+.1f} kHz)")
print(f"truth for sat {soi.sat_id}: "
      f"({1e3*soi.shift/composite.fs:.3f} ms, "
      f"{soi.params.doppler_hz/1e3:+.1f} kHz)")

fig, ax = plt.subplots(figsize=(8, 4))
db = 10 * np.log10(ddm.values + 1e-40)
im = ax.imshow(db.T, aspect="auto", origin="lower",
               extent=[0, 1e3 * ddm.delays[-1],
                       dopplers[0] / 1e3, dopplers[-1] / 1e3],
               vmin=db.max() - 60, vmax=db.max(), cmap="viridis")
for lk in links:
    in_window = abs(lk.params.doppler_hz) <= config.doppler_max_hz
    ax.plot(1e3 * lk.shift / composite.fs, lk.params.doppler_hz / 1e3,
            "rx" if in_window else "r^", markersize=9)
ax.set_xlabel("delay from receiver epoch [ms]")
ax.set_ylabel("Doppler [kHz]")
ax.set_title(f"|CAF|^2 for satellite {soi.sat_id} (x = ground truth)")
fig.colorbar(im, label="dBW")
fig.savefig(os.path.join(OUT, "03_ddm.png"), dpi=150, bbox_inches="tight")
plt.close(fig)
print("figure written to", OUT)
