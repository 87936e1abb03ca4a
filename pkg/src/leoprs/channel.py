"""Delay/Doppler/path-loss channel application and composite formation.

Delays are applied as integer-sample shifts (the interference statistic
aggregates over millisecond differential delays, so sub-sample error is
negligible). The channel is static over the burst.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ChannelParams
from .prs import BasebandSignal, PrsConfig


@dataclass(frozen=True)
class LinkTruth:
    """Ground truth for one link inside a composite."""

    sat_id: int
    params: ChannelParams
    shift: int              # sample offset from the receiver epoch
    tau_quantized: float    # round(tau * fs) / fs


@dataclass(frozen=True)
class SatLink:
    """One satellite's contribution to a received scene.

    `clean` is the transmit-side replica the receiver correlates against;
    `applied` is the same burst after the channel, offset by `shift` samples
    from the receiver epoch.
    """

    sat_id: int
    config: PrsConfig
    params: ChannelParams
    clean: BasebandSignal
    applied: BasebandSignal
    shift: int


@dataclass(frozen=True)
class ReceivedComposite:
    """Sum of channel-applied bursts plus optional noise, with ground truth."""

    samples: np.ndarray
    fs: float
    truth: tuple = field(default_factory=tuple)   # LinkTruth entries
    noise_var: float = 0.0


def apply_channel(x: BasebandSignal, p: ChannelParams,
                  delay_origin_s: float = 0.0) -> BasebandSignal:
    """Scale by sqrt(gain), rotate by the Doppler ramp and the random phase,
    and delay by round(tau * fs) samples (relative to `delay_origin_s`).

    The Doppler ramp time base is the receiver epoch, i.e. the output's own
    buffer position, so composites formed later stay phase-consistent.
    """
    if abs(p.doppler_hz) >= x.fs / 2:
        raise ValueError("Doppler shift at or beyond Nyquist would alias")
    shift = round(p.delay_s * x.fs) - round(delay_origin_s * x.fs)
    n = np.arange(len(x.samples)) + shift
    ramp = np.exp(2j * math.pi * p.doppler_hz * n / x.fs)
    samples = math.sqrt(p.gain) * np.exp(1j * p.phase) * ramp * x.samples
    return BasebandSignal(samples=samples, fs=x.fs, t0=shift / x.fs)


def combine(signals, noise_var: float = 0.0, rng=None,
            truth=()) -> ReceivedComposite:
    """Sum delayed bursts into one buffer sized to the latest arrival.

    Complex white Gaussian noise of total variance `noise_var` is added when
    positive; `rng` is then required so the result is reproducible.
    """
    if not signals:
        raise ValueError("no signals to combine")
    fs = signals[0].fs
    if any(s.fs != fs for s in signals):
        raise ValueError("mismatched sample rates")

    shifts = [round(s.t0 * fs) for s in signals]
    length = max(sh + len(s.samples) for sh, s in zip(shifts, signals))
    buffer = np.zeros(length, dtype=np.complex128)
    for sh, s in zip(shifts, signals):
        buffer[sh:sh + len(s.samples)] += s.samples
    if noise_var > 0.0:
        if rng is None:
            raise ValueError("rng required when noise is enabled")
        sigma = math.sqrt(noise_var / 2.0)
        buffer += rng.normal(0.0, sigma, length) + 1j * rng.normal(0.0, sigma, length)
    return ReceivedComposite(samples=buffer, fs=fs, truth=tuple(truth),
                             noise_var=noise_var)


def composite_from_links(links, noise_var: float = 0.0,
                         rng=None) -> ReceivedComposite:
    """Combine a scene of SatLink objects, keeping per-satellite ground truth."""
    truth = tuple(
        LinkTruth(sat_id=lk.sat_id, params=lk.params, shift=lk.shift,
                  tau_quantized=round(lk.params.delay_s * lk.clean.fs)
                  / lk.clean.fs)
        for lk in links
    )
    return combine([lk.applied for lk in links], noise_var=noise_var,
                   rng=rng, truth=truth)
