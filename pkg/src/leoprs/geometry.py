"""Constellation propagation, user placement, visibility and per-link channel parameters.

All positions are ECEF metres on a spherical Earth; angles are radians.
Satellites fly circular Walker-delta orbits; users are static on the surface.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .constants import (
    EARTH_GM,
    EARTH_RADIUS_M,
    EARTH_ROTATION_RATE,
    SPEED_OF_LIGHT,
)

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0

PASS_TABLE_FIELDS = (
    "user_id", "t_s", "sat_id",
    "x_m", "y_m", "z_m",
    "vx_mps", "vy_mps", "vz_mps",
)


@dataclass(frozen=True)
class UserLocation:
    """Static ground user: geodetic latitude/longitude (rad) and altitude (m)."""

    user_id: int
    lat: float
    lon: float
    alt: float = 0.0

    def __post_init__(self):
        if not -math.pi / 2 <= self.lat <= math.pi / 2:
            raise ValueError(f"latitude {self.lat} outside [-pi/2, pi/2]")
        if not -math.pi <= self.lon < math.pi:
            raise ValueError(f"longitude {self.lon} outside [-pi, pi)")
        if self.alt < 0:
            raise ValueError("altitude must be >= 0")

    def ecef(self) -> np.ndarray:
        r = EARTH_RADIUS_M + self.alt
        cl = math.cos(self.lat)
        return np.array([
            r * cl * math.cos(self.lon),
            r * cl * math.sin(self.lon),
            r * math.sin(self.lat),
        ])


@dataclass(frozen=True)
class SatelliteState:
    """Satellite position/velocity snapshot in ECEF."""

    sat_id: int
    position: np.ndarray   # m
    velocity: np.ndarray   # m/s
    epoch: float           # s


@dataclass(frozen=True)
class ShellConfig:
    """Single-altitude Walker-delta shell."""

    altitude_m: float
    inclination_rad: float
    plane_count: int
    sats_per_plane: int
    phasing: int = 1

    def __post_init__(self):
        if self.plane_count < 1 or self.sats_per_plane < 1:
            raise ValueError("plane_count and sats_per_plane must be >= 1")
        if not 0.0 <= self.inclination_rad <= math.pi:
            raise ValueError("inclination outside [0, pi]")
        if self.altitude_m <= 0:
            raise ValueError("altitude must be > 0")

    @property
    def total(self) -> int:
        return self.plane_count * self.sats_per_plane

    @property
    def semi_major_axis(self) -> float:
        return EARTH_RADIUS_M + self.altitude_m

    @property
    def mean_motion(self) -> float:
        return math.sqrt(EARTH_GM / self.semi_major_axis**3)


@dataclass(frozen=True)
class LookGeometry:
    """User-to-satellite line-of-sight geometry at one instant."""

    elevation: float        # rad above local horizon
    slant_range: float      # m
    range_rate: float       # m/s, negative while approaching
    central_angle: float    # rad between user and subsatellite point
    unit_vector: np.ndarray  # user -> satellite, unit norm


@dataclass(frozen=True)
class ChannelParams:
    """Single-link delay/Doppler channel parameters."""

    gain: float         # linear power gain (free-space), < 1
    delay_s: float      # propagation delay, s
    doppler_hz: float   # carrier Doppler shift, Hz
    phase: float        # random carrier phase, rad in [0, 2pi)
    slant_range: float  # m, kept for distance-ratio bookkeeping


@dataclass(frozen=True)
class VisibleSet:
    """Satellites above the mask, best-elevation first."""

    links: tuple            # ((sat_id, LookGeometry), ...)
    insufficient: bool      # fewer than the requested count were visible


def fibonacci_lattice(n: int) -> list[UserLocation]:
    """Place n quasi-uniform users on the sphere via the Fibonacci lattice."""
    if n < 1:
        raise ValueError("lattice size must be >= 1")
    users = []
    for i in range(n):
        lat = math.asin(1.0 - 2.0 * (i + 0.5) / n)
        lon = math.fmod(2.0 * math.pi * i / GOLDEN_RATIO, 2.0 * math.pi)
        if lon >= math.pi:
            lon -= 2.0 * math.pi
        elif lon < -math.pi:
            lon += 2.0 * math.pi
        users.append(UserLocation(user_id=i, lat=lat, lon=lon, alt=0.0))
    return users


def _raan_and_phase(shell: ShellConfig, sat_ids: np.ndarray):
    """Walker-delta orbital slots: RAAN per plane, in-plane argument at t=0."""
    planes = sat_ids // shell.sats_per_plane
    slots = sat_ids % shell.sats_per_plane
    raan = 2.0 * math.pi * planes / shell.plane_count
    arg0 = 2.0 * math.pi * (slots / shell.sats_per_plane
                            + shell.phasing * planes / shell.total)
    return raan, arg0


def shell_states(shell: ShellConfig, t: float,
                 sat_ids: np.ndarray | None = None):
    """ECEF positions and velocities of shell satellites at time t.

    Returns (sat_ids, positions (N,3), velocities (N,3)). Velocities are
    expressed in the rotating ECEF frame (Earth rotation included).
    """
    if t < 0:
        raise ValueError("time must be >= 0")
    if sat_ids is None:
        sat_ids = np.arange(shell.total)
    else:
        sat_ids = np.asarray(sat_ids)
        if np.any(sat_ids < 0) or np.any(sat_ids >= shell.total):
            raise ValueError("unknown sat_id")

    a = shell.semi_major_axis
    n_mot = shell.mean_motion
    raan, arg0 = _raan_and_phase(shell, sat_ids)
    u = arg0 + n_mot * t

    cos_u, sin_u = np.cos(u), np.sin(u)
    cos_o, sin_o = np.cos(raan), np.sin(raan)
    cos_i, sin_i = math.cos(shell.inclination_rad), math.sin(shell.inclination_rad)

    # Rz(raan) @ Rx(incl) applied to in-plane circular motion
    r_eci = np.stack([
        a * (cos_o * cos_u - sin_o * cos_i * sin_u),
        a * (sin_o * cos_u + cos_o * cos_i * sin_u),
        a * (sin_i * sin_u),
    ], axis=1)
    v_eci = np.stack([
        a * n_mot * (-cos_o * sin_u - sin_o * cos_i * cos_u),
        a * n_mot * (-sin_o * sin_u + cos_o * cos_i * cos_u),
        a * n_mot * (sin_i * cos_u),
    ], axis=1)

    # Rotate into ECEF and subtract the frame rotation omega x r
    theta = EARTH_ROTATION_RATE * t
    ct, st = math.cos(theta), math.sin(theta)
    rot = np.array([[ct, st, 0.0], [-st, ct, 0.0], [0.0, 0.0, 1.0]])
    r_ecef = r_eci @ rot.T
    v_ecef = v_eci @ rot.T
    v_ecef[:, 0] += EARTH_ROTATION_RATE * r_ecef[:, 1]
    v_ecef[:, 1] -= EARTH_ROTATION_RATE * r_ecef[:, 0]
    return sat_ids, r_ecef, v_ecef


def propagate(shell: ShellConfig, sat_id: int, t: float) -> SatelliteState:
    """State of one shell satellite at time t (deterministic)."""
    if not 0 <= sat_id < shell.total:
        raise ValueError(f"unknown sat_id {sat_id} for shell of {shell.total}")
    _, r, v = shell_states(shell, t, np.array([sat_id]))
    return SatelliteState(sat_id=sat_id, position=r[0], velocity=v[0], epoch=t)


def look_geometry(user: UserLocation, sat: SatelliteState) -> LookGeometry:
    """Elevation, slant range and range rate from a static user to a satellite."""
    r_ue = user.ecef()
    d = sat.position - r_ue
    rho = float(np.linalg.norm(d))
    if rho < 1.0:
        raise ValueError("satellite and user positions coincide")
    u_hat = d / rho

    up = r_ue / np.linalg.norm(r_ue)
    elevation = math.asin(float(np.clip(np.dot(u_hat, up), -1.0, 1.0)))
    # static user: range rate is the satellite velocity projected on the LOS
    range_rate = float(np.dot(u_hat, sat.velocity))
    r_sat_hat = sat.position / np.linalg.norm(sat.position)
    central = math.acos(float(np.clip(np.dot(up, r_sat_hat), -1.0, 1.0)))
    return LookGeometry(elevation=elevation, slant_range=rho,
                        range_rate=range_rate, central_angle=central,
                        unit_vector=u_hat)


def max_slant_range(h_sat: float, theta_mask: float) -> float:
    """Largest user-satellite distance at a given elevation mask.

    Closed form from the Earth-center/user/satellite triangle; the mask of
    pi/2 is the degenerate zenith case and returns the altitude itself.
    """
    if h_sat <= 0:
        raise ValueError("satellite altitude must be > 0")
    if not 0.0 <= theta_mask <= math.pi / 2:
        raise ValueError("elevation mask outside [0, pi/2]")
    if theta_mask == math.pi / 2:
        return h_sat
    r_orb = EARTH_RADIUS_M + h_sat
    psi = -theta_mask - math.asin(
        EARTH_RADIUS_M * math.sin(math.pi / 2 + theta_mask) / r_orb)
    return r_orb * math.sin(math.pi / 2 + psi) / math.sin(math.pi / 2 + theta_mask)


def channel_params(geom: LookGeometry, f_c: float, rng) -> ChannelParams:
    """Free-space gain, delay, Doppler and a random phase for one link."""
    if geom.slant_range <= 0:
        raise ValueError("slant range must be > 0")
    if f_c <= 0:
        raise ValueError("carrier frequency must be > 0")
    rho = geom.slant_range
    gain = (SPEED_OF_LIGHT / (4.0 * math.pi * f_c * rho)) ** 2
    delay = rho / SPEED_OF_LIGHT
    doppler = -(f_c / SPEED_OF_LIGHT) * geom.range_rate
    phase = float(rng.uniform(0.0, 2.0 * math.pi))
    return ChannelParams(gain=gain, delay_s=delay, doppler_hz=doppler,
                         phase=phase, slant_range=rho)


def visible_set(user: UserLocation, shell: ShellConfig, t: float,
                theta_mask: float, count: int) -> VisibleSet:
    """Best `count` satellites above the mask, elevation-descending.

    Ties break on ascending sat_id. Fewer visible than requested is not an
    error; the result is flagged `insufficient` and the caller resamples.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    sat_ids, r, v = shell_states(shell, t)

    r_ue = user.ecef()
    up = r_ue / np.linalg.norm(r_ue)
    d = r - r_ue
    rho = np.linalg.norm(d, axis=1)
    sin_el = (d @ up) / rho
    el = np.arcsin(np.clip(sin_el, -1.0, 1.0))

    above = np.flatnonzero(el >= theta_mask)
    order = sorted(above, key=lambda idx: (-el[idx], sat_ids[idx]))[:count]
    links = tuple(
        (int(sat_ids[idx]),
         look_geometry(user, SatelliteState(int(sat_ids[idx]), r[idx], v[idx], t)))
        for idx in order
    )
    return VisibleSet(links=links, insufficient=len(links) < count)


def write_pass_table(path, users, shell: ShellConfig, times,
                     theta_mask: float) -> int:
    """Write the pass-table CSV: one row per (user, time, visible satellite).

    Floats are written with repr so a load round-trips bit-exactly.
    Returns the number of rows written.
    """
    rows = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PASS_TABLE_FIELDS)
        for t in times:
            sat_ids, r, v = shell_states(shell, float(t))
            for user in users:
                r_ue = user.ecef()
                up = r_ue / np.linalg.norm(r_ue)
                d = r - r_ue
                rho = np.linalg.norm(d, axis=1)
                el = np.arcsin(np.clip((d @ up) / rho, -1.0, 1.0))
                for idx in np.flatnonzero(el >= theta_mask):
                    writer.writerow([
                        user.user_id, repr(float(t)), int(sat_ids[idx]),
                        repr(float(r[idx, 0])), repr(float(r[idx, 1])),
                        repr(float(r[idx, 2])), repr(float(v[idx, 0])),
                        repr(float(v[idx, 1])), repr(float(v[idx, 2])),
                    ])
                    rows += 1
    return rows
