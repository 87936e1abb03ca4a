"""Extreme-value modeling of the interference samples.

Fits the six candidate distributions to one campaign group, overlays the
winning GEV density on the empirical histogram, then regresses the GEV
parameters against symbol count and transmit power.
"""

import math
import os
import time

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from leoprs import (
    CampaignConfig,
    GevParams,
    fit_candidates,
    fit_gev,
    fit_parameter_models,
    gev_pdf,
    model_eval,
    run_campaign,
)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

config = CampaignConfig(users=6, iterations=80, master_seed=5,
                        m_values=(1, 2, 4, 8, 12), cs_values=(4,),
                        ptx_dbw_values=(1.0, 30.0))
start = time.time()
samples = run_campaign(config)
print(f"campaign: {len(samples.samples)} samples in {time.time()-start:.1f} s")


def group(m, ptx):
    return np.array([s.i_dbw for s in samples.samples
                     if s.m == m and s.ptx_dbw == ptx
                     and "zero_floor" not in s.flags])


# --- candidate comparison on one group --------------------------------------
values = group(12, 30.0)
report = fit_candidates(values)
print(f"\ncandidates on (m=12, cs=4, 30 dBW), n={len(values)}:")
for c in report.candidates:
    marker = " <- winner" if c.name == report.winner else ""
    print(f"  {c.name:10s} D={c.ks_d:.4f} p={c.p_value:.3f}{marker}")

gev = report.by_name("gev").params
params = GevParams(shape=gev["shape"], scale=gev["scale"], loc=gev["loc"])
xs = np.linspace(values.min(), values.max(), 400)

fig, ax = plt.subplots(figsize=(6.5, 4))
ax.hist(values, bins=50, density=True, alpha=0.5, label="Monte Carlo")
ax.plot(xs, gev_pdf(xs, params), "r", lw=2,
        label=f"GEV(k={params.shape:.2f}, sigma={params.scale:.1f}, "
              f"mu={params.loc:.1f})")
ax.set_xlabel("interference [dBW]")
ax.set_ylabel("PDF")
ax.legend()
ax.grid(alpha=0.3)
fig.savefig(os.path.join(OUT, "05_pdf_fit.png"), dpi=150, bbox_inches="tight")
plt.close(fig)

# --- parameter models vs configuration --------------------------------------
fits = []
for m in config.m_values:
    for ptx in config.ptx_dbw_values:
        fits.append((m, ptx, 4, fit_gev(group(m, ptx))))
model = fit_parameter_models(fits)
c = model.per_cs[4]
print(f"\nmu(m, ptx) = {c.a1:+.3f}/sqrt(m) {c.a2:+.3f} ptx {c.a3:+.1f} "
      f"(rms {c.rms_mu:.2f} dB)")
print(f"sigma(m)   = {c.b1:+.3f} m {c.b2:+.2f} (rms {c.rms_sigma:.2f} dB)")
print(f"k(m)       = {c.c1:+.3f}/sqrt(m) {c.c2:+.3f} (rms {c.rms_k:.3f})")

ms = np.array(config.m_values, dtype=float)
fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
for ptx, color in [(1.0, "tab:orange"), (30.0, "tab:blue")]:
    fitted = [g.loc for m_, p_, _, g in fits if p_ == ptx]
    axes[0].plot(ms, fitted, "o", color=color, label=f"fitted, {ptx:.0f} dBW")
    axes[0].plot(ms, [model_eval(model, int(m_), ptx, 4).loc for m_ in ms],
                 "-", color=color)
axes[0].set_ylabel("mu [dBW]")
axes[0].legend(fontsize=8)

fitted_sigma = [g.scale for m_, p_, _, g in fits if p_ == 30.0]
axes[1].plot(ms, fitted_sigma, "ko", label="fitted")
axes[1].plot(ms, [model_eval(model, int(m_), 30.0, 4).scale for m_ in ms],
             "k-", label="model")
axes[1].set_ylabel("sigma [dB]")
axes[1].legend(fontsize=8)

fitted_k = [g.shape for m_, p_, _, g in fits if p_ == 30.0]
axes[2].plot(ms, fitted_k, "ko", label="fitted")
axes[2].plot(ms, [model_eval(model, int(m_), 30.0, 4).shape for m_ in ms],
             "k-", label="model")
axes[2].set_ylabel("k")
axes[2].legend(fontsize=8)

for ax in axes:
    ax.set_xlabel("OFDM symbols m")
    ax.grid(alpha=0.3)
fig.savefig(os.path.join(OUT, "05_parameter_models.png"), dpi=150,
            bbox_inches="tight")
plt.close(fig)
print("figures written to", OUT)
