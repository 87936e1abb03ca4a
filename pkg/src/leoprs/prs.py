"""Positioning-pilot waveforms: Gold sequences, comb resource grids, CP-OFDM.

Transmit power accounting uses the OFDM symbol bodies (cyclic prefix
excluded): each body carries a mean power of exactly `p_tx_w`. The matched
filter in `receiver` integrates over the same window, so auto-correlation
peaks and comb orthogonality are exact rather than statistical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

GOLD_WARMUP = 1600
SYMBOLS_PER_SLOT = 14

# Per-symbol comb frequency offsets (TS 38.211-style patterns); any fixed
# permutation keeping the per-symbol partition disjoint would do.
COMB_OFFSETS = {
    4: (0, 2, 1, 3),
    6: (0, 3, 1, 4, 2, 5),
    12: (0, 6, 3, 9, 1, 7, 4, 10, 2, 8, 5, 11),
}


@dataclass(frozen=True)
class PrsConfig:
    """Waveform knobs for one transmitter's pilot burst."""

    m: int                      # OFDM symbol count, 1..12
    cs: int                     # comb size: 4, 6 or 12
    p_tx_dbw: float = 30.0      # transmit power, dBW
    n_id: int = 0               # sequence identity (0..4095)
    k_offset: int = 0           # comb frequency offset, 0..cs-1
    n_scs: int = 288            # occupied subcarriers
    scs_hz: float = 30e3        # subcarrier spacing
    n_fft: int = 512            # IFFT size
    n_cp: int = 36              # cyclic prefix length, samples
    slot_index: int = 0
    random_payload: bool = False  # seeded uniform QPSK instead of Gold bits

    def __post_init__(self):
        if not 1 <= self.m <= 12:
            raise ValueError("symbol count m must be in 1..12")
        if self.cs not in COMB_OFFSETS:
            raise ValueError(f"comb size must be one of {sorted(COMB_OFFSETS)}")
        if self.n_scs % self.cs != 0:
            raise ValueError("comb size must divide the subcarrier count")
        if not 0 <= self.k_offset < self.cs:
            raise ValueError("k_offset outside [0, cs)")
        if self.n_fft < self.n_scs:
            raise ValueError("FFT size smaller than occupied subcarriers")
        if not 0 <= self.n_id < 4096:
            raise ValueError("n_id outside [0, 4096)")

    @property
    def p_tx_w(self) -> float:
        return 10.0 ** (self.p_tx_dbw / 10.0)

    @property
    def fs(self) -> float:
        return self.n_fft * self.scs_hz

    @property
    def samples_per_symbol(self) -> int:
        return self.n_fft + self.n_cp

    @property
    def re_per_symbol(self) -> int:
        return self.n_scs // self.cs


@dataclass(frozen=True)
class ResourceGrid:
    """Frequency-domain resource grid: m symbols by n_scs subcarriers."""

    values: np.ndarray  # complex, (m, n_scs)
    mask: np.ndarray    # bool, True where a pilot RE is mapped


@dataclass(frozen=True)
class BasebandSignal:
    """Complex sample stream at rate fs, starting t0 seconds after the epoch."""

    samples: np.ndarray
    fs: float
    t0: float = 0.0

    @property
    def duration(self) -> float:
        return len(self.samples) / self.fs


@lru_cache(maxsize=65536)
def _gold_cached(c_init: int, length: int) -> np.ndarray:
    total = GOLD_WARMUP + length + 31
    x1 = np.zeros(total, dtype=np.uint8)
    x2 = np.zeros(total, dtype=np.uint8)
    x1[0] = 1
    for i in range(31):
        x2[i] = (c_init >> i) & 1
    # x(n+31) depends on x(n..n+3), so 28 terms can be advanced per block
    n = 0
    while n + 31 < total:
        b = min(28, total - 31 - n)
        x1[n + 31:n + 31 + b] = x1[n + 3:n + 3 + b] ^ x1[n:n + b]
        x2[n + 31:n + 31 + b] = (x2[n + 3:n + 3 + b] ^ x2[n + 2:n + 2 + b]
                                 ^ x2[n + 1:n + 1 + b] ^ x2[n:n + b])
        n += b
    out = x1[GOLD_WARMUP:GOLD_WARMUP + length] ^ x2[GOLD_WARMUP:GOLD_WARMUP + length]
    out.flags.writeable = False
    return out


def gold_sequence(c_init: int, length: int) -> np.ndarray:
    """Length-31 Gold sequence bits c(0..length-1) for the given initializer."""
    if not 0 <= c_init < 2**31:
        raise ValueError("c_init must fit in 31 bits")
    if length < 0:
        raise ValueError("length must be >= 0")
    return _gold_cached(int(c_init), int(length))


def prs_c_init(n_id: int, slot_index: int, symbol_index: int) -> int:
    """Sequence initializer for pilot symbol `symbol_index` of slot `slot_index`."""
    n_low = n_id % 1024
    return ((2**22) * (n_id // 1024)
            + (2**10) * (SYMBOLS_PER_SLOT * slot_index + symbol_index + 1)
            * (2 * n_low + 1)
            + n_low) % 2**31


def prs_symbols(config: PrsConfig, symbol_index: int,
                slot_index: int | None = None) -> np.ndarray:
    """Unit-modulus QPSK pilot symbols for one OFDM symbol."""
    if not 0 <= symbol_index < config.m:
        raise ValueError("symbol index outside the burst")
    n_s = config.slot_index if slot_index is None else slot_index
    n_re = config.re_per_symbol
    if config.random_payload:
        rng = np.random.default_rng([config.n_id, n_s, symbol_index])
        c = rng.integers(0, 2, size=2 * n_re)
    else:
        c = gold_sequence(prs_c_init(config.n_id, n_s, symbol_index), 2 * n_re)
    re = 1.0 - 2.0 * c[0::2].astype(np.float64)
    im = 1.0 - 2.0 * c[1::2].astype(np.float64)
    return (re + 1j * im) / math.sqrt(2.0)


def map_resource_grid(config: PrsConfig) -> ResourceGrid:
    """Map the pilot onto its comb: RE (l, k) is occupied iff
    (k - k_offset - delta[l mod cs]) mod cs == 0.

    Occupied REs share one amplitude, chosen so each modulated OFDM symbol
    body has mean power p_tx_w (Parseval with the numpy ifft convention).
    """
    delta = COMB_OFFSETS[config.cs]
    amp = config.n_fft * math.sqrt(config.p_tx_w / config.re_per_symbol)
    values = np.zeros((config.m, config.n_scs), dtype=np.complex128)
    mask = np.zeros((config.m, config.n_scs), dtype=bool)
    for l in range(config.m):
        start = (config.k_offset + delta[l % config.cs]) % config.cs
        cols = np.arange(start, config.n_scs, config.cs)
        values[l, cols] = amp * prs_symbols(config, l)
        mask[l, cols] = True
    return ResourceGrid(values=values, mask=mask)


def _subcarrier_bins(config: PrsConfig) -> np.ndarray:
    """FFT bin index for each subcarrier, grid centred on DC."""
    return np.mod(np.arange(config.n_scs) - config.n_scs // 2, config.n_fft)


def ofdm_modulate(grid: ResourceGrid, config: PrsConfig) -> BasebandSignal:
    """CP-OFDM modulate the grid: centred zero-padding, IFFT, prepend CP."""
    m = grid.values.shape[0]
    bins = _subcarrier_bins(config)
    spectrum = np.zeros((m, config.n_fft), dtype=np.complex128)
    spectrum[:, bins] = grid.values
    bodies = np.fft.ifft(spectrum, axis=1)
    symbols = np.concatenate([bodies[:, -config.n_cp:], bodies], axis=1)
    return BasebandSignal(samples=symbols.reshape(-1), fs=config.fs, t0=0.0)


def ofdm_demodulate(signal: BasebandSignal, config: PrsConfig) -> np.ndarray:
    """Invert `ofdm_modulate`: strip CPs, FFT, extract the subcarrier bins."""
    sps = config.samples_per_symbol
    if len(signal.samples) % sps != 0:
        raise ValueError("signal length is not a whole number of symbols")
    m = len(signal.samples) // sps
    symbols = signal.samples.reshape(m, sps)[:, config.n_cp:]
    spectrum = np.fft.fft(symbols, axis=1)
    return spectrum[:, _subcarrier_bins(config)]


def body_sample_mask(config: PrsConfig, n_symbols: int) -> np.ndarray:
    """Boolean mask over a burst's samples, True outside the cyclic prefixes."""
    one = np.concatenate([
        np.zeros(config.n_cp, dtype=bool),
        np.ones(config.n_fft, dtype=bool),
    ])
    return np.tile(one, n_symbols)


def grid_to_csv(grid: ResourceGrid, path) -> None:
    """Dump occupied REs as `symbol,subcarrier,re,im` rows (debug/golden files)."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["symbol", "subcarrier", "re", "im"])
        for l, k in zip(*np.nonzero(grid.mask)):
            v = grid.values[l, k]
            writer.writerow([int(l), int(k),
                             repr(float(v.real)), repr(float(v.imag))])
