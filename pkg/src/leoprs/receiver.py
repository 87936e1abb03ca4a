"""Matched-filter receiver: delay-Doppler maps, interference and SINR.

The correlator integrates over OFDM symbol bodies only (cyclic prefixes are
masked out of the replica) and divides by the body sample count. With both
the burst and the replica carrying sqrt(p_tx), a clean aligned link then
peaks at exactly gain * p_tx^2, and disjoint combs are exactly orthogonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .channel import ReceivedComposite, SatLink
from .prs import BasebandSignal, PrsConfig, body_sample_mask

ZERO_FLOOR_DBW = -400.0


@dataclass(frozen=True)
class DelayDopplerMap:
    """|CAF|^2 grid: rows follow the delay axis, columns the Doppler axis."""

    values: np.ndarray    # (n_delays, n_dopplers), watts
    delays: np.ndarray    # s, sample-spaced
    dopplers: np.ndarray  # Hz

    def peak(self):
        """(delay_s, doppler_hz, value) of the grid maximum."""
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return float(self.delays[i]), float(self.dopplers[j]), float(self.values[i, j])


@dataclass(frozen=True)
class Contribution:
    """One interferer's share of the matched-filter interference."""

    sat_id: int
    dtau_s: float     # tau_i - tau_s
    dnu_hz: float     # nu_i - nu_s
    power_w: float


@dataclass(frozen=True)
class InterferenceSample:
    """Aggregate interference at the matched-filter peak of one satellite."""

    i_watts: float
    i_dbw: float
    contributions: tuple
    m: int
    cs: int
    ptx_dbw: float
    sat_of_interest: int
    user_id: int = -1
    iteration: int = -1
    epoch: float = float("nan")
    flags: tuple = field(default_factory=tuple)


def _masked_replica(link: SatLink) -> tuple[np.ndarray, int]:
    """Replica with CP samples zeroed, and the effective sample count."""
    cfg = link.config
    replica = link.clean.samples * body_sample_mask(cfg, cfg.m)
    return replica, cfg.m * cfg.n_fft


def correlate_at(y: BasebandSignal, replica: np.ndarray, doppler_hz: float,
                 lag: int, fs: float, n_eff: int) -> complex:
    """Time-averaged correlation of y against a counter-rotated replica at one lag.

    `y.t0` locates the signal inside the receiver buffer; samples outside its
    support count as zero. The rotation time base is the receiver epoch.
    """
    shift_y = round(y.t0 * fs)
    lo = max(lag, shift_y)
    hi = min(lag + len(replica), shift_y + len(y.samples))
    if lo >= hi:
        return 0.0 + 0.0j
    n = np.arange(lo, hi)
    seg_y = y.samples[lo - shift_y:hi - shift_y]
    seg_r = replica[lo - lag:hi - lag]
    rot = np.exp(-2j * math.pi * doppler_hz * n / fs)
    return complex(np.dot(seg_y * rot, seg_r.conj()) / n_eff)


def caf(y, replica: BasebandSignal, dopplers, config: PrsConfig) -> DelayDopplerMap:
    """Cross-ambiguity |chi|^2 over all integer lags and a Doppler grid.

    `y` is a ReceivedComposite (or any object with samples/fs); `replica` is
    the clean transmit burst of the satellite under test.
    """
    dopplers = np.atleast_1d(np.asarray(dopplers, dtype=float))
    if dopplers.size == 0:
        raise ValueError("empty Doppler grid")
    y_samples = y.samples
    fs = y.fs
    if len(y_samples) == 0:
        raise ValueError("empty received buffer")
    if len(replica.samples) > len(y_samples):
        raise ValueError("replica longer than the received buffer")

    n_symbols = len(replica.samples) // config.samples_per_symbol
    r = replica.samples * body_sample_mask(config, n_symbols)
    n_eff = n_symbols * config.n_fft
    kernel = r[::-1].conj()

    n = np.arange(len(y_samples))
    n_lags = len(y_samples)
    values = np.empty((n_lags, dopplers.size))
    for j, nu in enumerate(dopplers):
        y_rot = y_samples * np.exp(-2j * math.pi * nu * n / fs)
        corr = fftconvolve(y_rot, kernel)[len(r) - 1:len(r) - 1 + n_lags]
        values[:, j] = np.abs(corr / n_eff) ** 2
    return DelayDopplerMap(values=values, delays=n / fs, dopplers=dopplers)


def interference_sample(links, i: int, user_id: int = -1, iteration: int = -1,
                        epoch: float = float("nan")) -> InterferenceSample:
    """Aggregate interference on satellite i from every other link.

    Each interferer is correlated against satellite i's replica at the lag of
    satellite i and counter-rotated to its Doppler; the squared magnitudes
    add up. An exact-zero total is floored at -400 dBW and flagged.
    """
    if len(links) < 2:
        raise ValueError("need at least two links")
    if not 0 <= i < len(links):
        raise ValueError("satellite index out of range")
    soi = links[i]
    replica, n_eff = _masked_replica(soi)
    fs = soi.clean.fs

    contributions = []
    total = 0.0
    for s, link in enumerate(links):
        if s == i:
            continue
        c = correlate_at(link.applied, replica, soi.params.doppler_hz,
                         soi.shift, fs, n_eff)
        power = abs(c) ** 2
        contributions.append(Contribution(
            sat_id=link.sat_id,
            dtau_s=soi.params.delay_s - link.params.delay_s,
            dnu_hz=soi.params.doppler_hz - link.params.doppler_hz,
            power_w=power,
        ))
        total += power

    flags = ()
    if total == 0.0:
        i_dbw = ZERO_FLOOR_DBW
        flags = ("zero_floor",)
    else:
        i_dbw = 10.0 * math.log10(total)
    return InterferenceSample(
        i_watts=total, i_dbw=i_dbw, contributions=tuple(contributions),
        m=soi.config.m, cs=soi.config.cs, ptx_dbw=soi.config.p_tx_dbw,
        sat_of_interest=soi.sat_id, user_id=user_id, iteration=iteration,
        epoch=epoch, flags=flags,
    )


def sinr(i: int, links, noise_var: float = 0.0) -> float:
    """Post-matched-filter SINR of satellite i.

    Numerator gain_i * p_tx; interference normalised to the same scale, so
    with no interferers the value reduces to p_tx * gain_i / noise_var and
    scaling every distance by a common factor leaves the noise-free value
    unchanged.
    """
    sample = interference_sample(links, i)
    p_tx = links[i].config.p_tx_w
    denom = sample.i_watts / p_tx + noise_var
    num = links[i].params.gain * p_tx
    if denom == 0.0:
        return math.inf
    return num / denom
