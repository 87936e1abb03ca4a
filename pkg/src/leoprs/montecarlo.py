"""Monte Carlo campaign driver: users x iterations x waveform sweep.

Every draw gets its own generator seeded from (master_seed, user, iteration,
sweep index), so results are bit-identical regardless of execution order or
parallelism. Each draw picks a random epoch, takes the four best-elevation
satellites, synthesises their bursts, applies the channels and emits one
interference sample per satellite of interest.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import itertools
import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import SatLink, apply_channel
from .geometry import (
    EARTH_RADIUS_M,
    PASS_TABLE_FIELDS,
    SatelliteState,
    ShellConfig,
    UserLocation,
    channel_params,
    fibonacci_lattice,
    look_geometry,
    visible_set,
    VisibleSet,
)
from .prs import PrsConfig, map_resource_grid, ofdm_modulate
from .receiver import InterferenceSample, interference_sample

VERSION = "0.1.0"
NUM_VISIBLE = 4


class ConfigError(Exception):
    """Bad campaign configuration (file, key or value)."""


class GeometryError(Exception):
    """Campaign geometry cannot supply enough visible satellites."""


class PassTableError(Exception):
    """Malformed pass-table CSV; carries the offending line number."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class CampaignConfig:
    users: int = 10
    iterations: int = 100
    master_seed: int = 0
    f_c_hz: float = 2.2e9
    theta_mask_rad: float = math.radians(25.0)
    noise_var_w: float = 0.0
    retry_budget: int = 100
    shell: ShellConfig = field(default_factory=lambda: ShellConfig(
        altitude_m=554e3, inclination_rad=math.radians(53.0),
        plane_count=72, sats_per_plane=22, phasing=1))
    m_values: tuple = (12,)
    cs_values: tuple = (4,)
    ptx_dbw_values: tuple = (30.0,)
    n_scs: int = 288
    scs_hz: float = 30e3
    n_fft: int = 512
    n_cp: int = 36
    doppler_max_hz: float = 40e3
    doppler_step_hz: float = 500.0
    pass_source: str = "internal"
    pass_path: str = ""
    span_s: float = 600.0
    time_step_s: float = 1.0

    def __post_init__(self):
        if self.users < 1 or self.iterations < 1:
            raise ConfigError("users and iterations must be >= 1")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be >= 0")
        if self.f_c_hz <= 0:
            raise ConfigError("carrier frequency must be > 0")
        if not (self.m_values and self.cs_values and self.ptx_dbw_values):
            raise ConfigError("sweep lists must be non-empty")
        if self.pass_source not in ("internal", "external"):
            raise ConfigError("pass_source must be 'internal' or 'external'")
        if self.pass_source == "external" and not self.pass_path:
            raise ConfigError("external pass source needs pass_path")
        if self.span_s <= 0:
            raise ConfigError("span must be > 0")


@dataclass
class SampleSet:
    """Campaign output: ordered samples plus provenance metadata."""

    samples: list
    skipped_draws: int
    metadata: dict


def sweep_points(config: CampaignConfig):
    return list(itertools.product(config.m_values, config.cs_values,
                                  config.ptx_dbw_values))


def config_to_dict(config: CampaignConfig) -> dict:
    return {
        "users": config.users,
        "iterations": config.iterations,
        "master_seed": config.master_seed,
        "f_c_hz": config.f_c_hz,
        "theta_mask_rad": config.theta_mask_rad,
        "noise_var_w": config.noise_var_w,
        "retry_budget": config.retry_budget,
        "shell": {
            "altitude_m": config.shell.altitude_m,
            "inclination_rad": config.shell.inclination_rad,
            "plane_count": config.shell.plane_count,
            "sats_per_plane": config.shell.sats_per_plane,
            "phasing": config.shell.phasing,
        },
        "m_values": list(config.m_values),
        "cs_values": list(config.cs_values),
        "ptx_dbw_values": list(config.ptx_dbw_values),
        "n_scs": config.n_scs,
        "scs_hz": config.scs_hz,
        "n_fft": config.n_fft,
        "n_cp": config.n_cp,
        "doppler_max_hz": config.doppler_max_hz,
        "doppler_step_hz": config.doppler_step_hz,
        "pass_source": config.pass_source,
        "pass_path": config.pass_path,
        "span_s": config.span_s,
        "time_step_s": config.time_step_s,
    }


def config_hash(config: CampaignConfig) -> str:
    blob = json.dumps(config_to_dict(config), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Pass tables
# ---------------------------------------------------------------------------

class PassTable:
    """Satellite states indexed by (user_id, epoch)."""

    def __init__(self):
        self._by_user = {}

    def add(self, user_id: int, t: float, state: SatelliteState):
        self._by_user.setdefault(user_id, {}).setdefault(t, []).append(state)

    @property
    def user_ids(self):
        return sorted(self._by_user)

    def times(self, user_id: int) -> np.ndarray:
        return np.array(sorted(self._by_user.get(user_id, {})))

    def states(self, user_id: int, t: float):
        return tuple(self._by_user[user_id][t])

    def __len__(self):
        return sum(len(v) for u in self._by_user.values() for v in u.values())


def load_passes(path) -> PassTable:
    """Load and validate a pass-table CSV (see geometry.PASS_TABLE_FIELDS)."""
    table = PassTable()
    max_radius = EARTH_RADIUS_M + 2000e3
    last_t = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != PASS_TABLE_FIELDS:
            raise PassTableError(
                f"header mismatch, expected {','.join(PASS_TABLE_FIELDS)}", row=1)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(PASS_TABLE_FIELDS):
                raise PassTableError("wrong field count", row=line_no)
            try:
                user_id = int(row[0])
                t = float(row[1])
                sat_id = int(row[2])
                vals = [float(x) for x in row[3:9]]
            except ValueError as exc:
                raise PassTableError(str(exc), row=line_no) from None
            if not all(math.isfinite(v) for v in vals) or not math.isfinite(t):
                raise PassTableError("non-finite field", row=line_no)
            r = np.array(vals[:3])
            v = np.array(vals[3:])
            norm = float(np.linalg.norm(r))
            if not EARTH_RADIUS_M <= norm <= max_radius:
                raise PassTableError(
                    f"position norm {norm:.0f} m outside plausible shell",
                    row=line_no)
            if user_id in last_t and t < last_t[user_id]:
                raise PassTableError("non-monotonic time for user", row=line_no)
            last_t[user_id] = t
            table.add(user_id, t, SatelliteState(sat_id, r, v, t))
    return table


# ---------------------------------------------------------------------------
# Draw machinery
# ---------------------------------------------------------------------------

def _visible_from_states(user: UserLocation, states, theta_mask: float,
                         count: int) -> VisibleSet:
    """visible_set equivalent over explicit satellite states (external table)."""
    scored = []
    for st in states:
        geom = look_geometry(user, st)
        if geom.elevation >= theta_mask:
            scored.append((st.sat_id, geom))
    scored.sort(key=lambda sg: (-sg[1].elevation, sg[0]))
    links = tuple(scored[:count])
    return VisibleSet(links=links, insufficient=len(links) < count)


def build_links(vis: VisibleSet, rng, config: CampaignConfig,
                m: int, cs: int, ptx_dbw: float) -> list[SatLink]:
    """Synthesize the four bursts of one draw and run them through the channel.

    Comb offsets 0..3 are assigned in elevation order; sequence identities
    follow sat_id mod 1008. The receiver epoch is the earliest arrival.
    """
    params = [channel_params(geom, config.f_c_hz, rng) for _, geom in vis.links]
    tau_min = min(p.delay_s for p in params)
    links = []
    for rank, ((sat_id, _), p) in enumerate(zip(vis.links, params)):
        pcfg = PrsConfig(m=m, cs=cs, p_tx_dbw=ptx_dbw, n_id=sat_id % 1008,
                         k_offset=rank, n_scs=config.n_scs, scs_hz=config.scs_hz,
                         n_fft=config.n_fft, n_cp=config.n_cp)
        clean = ofdm_modulate(map_resource_grid(pcfg), pcfg)
        applied = apply_channel(clean, p, delay_origin_s=tau_min)
        shift = round(applied.t0 * clean.fs)
        links.append(SatLink(sat_id=sat_id, config=pcfg, params=p,
                             clean=clean, applied=applied, shift=shift))
    return links


def run_draw(config: CampaignConfig, user: UserLocation, iteration: int,
             sweep_index: int, m: int, cs: int, ptx_dbw: float,
             table: PassTable | None = None):
    """One (user, iteration, sweep point) draw.

    Returns a list of four InterferenceSample, or None when the retry budget
    ran out without four visible satellites.
    """
    rng = np.random.default_rng(
        [config.master_seed, user.user_id, iteration, sweep_index])
    vis = None
    epoch = float("nan")
    for _ in range(config.retry_budget + 1):
        if config.pass_source == "internal":
            epoch = float(rng.uniform(0.0, config.span_s))
            cand = visible_set(user, config.shell, epoch,
                               config.theta_mask_rad, NUM_VISIBLE)
        else:
            times = table.times(user.user_id)
            if len(times) == 0:
                return None
            epoch = float(times[rng.integers(len(times))])
            cand = _visible_from_states(user, table.states(user.user_id, epoch),
                                        config.theta_mask_rad, NUM_VISIBLE)
        if not cand.insufficient:
            vis = cand
            break
    if vis is None:
        return None

    links = build_links(vis, rng, config, m, cs, ptx_dbw)
    samples = []
    for i in range(len(links)):
        sample = interference_sample(links, i, user_id=user.user_id,
                                     iteration=iteration, epoch=epoch)
        if any(abs(c.dnu_hz) > config.doppler_max_hz
               for c in sample.contributions):
            sample = replace(sample, flags=sample.flags + ("doppler_clipped",))
        samples.append(sample)
    return samples


def _run_user(config: CampaignConfig, user: UserLocation):
    """All draws of one user, in canonical (iteration, sweep) order."""
    table = load_passes(config.pass_path) if config.pass_source == "external" else None
    sweep = sweep_points(config)
    samples = []
    skipped = 0
    for iteration in range(config.iterations):
        for sweep_index, (m, cs, ptx) in enumerate(sweep):
            drawn = run_draw(config, user, iteration, sweep_index,
                             m, cs, ptx, table=table)
            if drawn is None:
                skipped += 1
            else:
                samples.extend(drawn)
    return samples, skipped


def run_campaign(config: CampaignConfig, workers: int = 1) -> SampleSet:
    """Run the full campaign; aborts if most draws cannot see four satellites."""
    users = fibonacci_lattice(config.users)
    sweep = sweep_points(config)
    total_draws = config.users * config.iterations * len(sweep)

    if workers <= 1:
        results = [_run_user(config, user) for user in users]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_user, itertools.repeat(config), users))

    samples = []
    skipped = 0
    for user_samples, user_skipped in results:
        samples.extend(user_samples)
        skipped += user_skipped

    if skipped > 0.5 * total_draws:
        raise GeometryError(
            f"{skipped}/{total_draws} draws lacked {NUM_VISIBLE} visible "
            "satellites; shell or mask configuration is too sparse")

    metadata = {
        "version": VERSION,
        "master_seed": config.master_seed,
        "config_hash": config_hash(config),
        "config": config_to_dict(config),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "total_draws": total_draws,
        "skipped_draws": skipped,
        "emitted_samples": len(samples),
        "samples_per_draw": NUM_VISIBLE,
    }
    return SampleSet(samples=samples, skipped_draws=skipped, metadata=metadata)


# ---------------------------------------------------------------------------
# Sample CSV
# ---------------------------------------------------------------------------

SAMPLE_CSV_FIELDS = (
    "user_id", "iter", "m", "cs", "ptx_dbw", "sat_of_interest", "I_dbw",
    "dtau1_s", "dnu1_hz", "c1_dbw",
    "dtau2_s", "dnu2_hz", "c2_dbw",
    "dtau3_s", "dnu3_hz", "c3_dbw",
    "flags",
)

ZERO_FLOOR_DBW = -400.0


def _dbw(power_w: float) -> float:
    return 10.0 * math.log10(power_w) if power_w > 0.0 else ZERO_FLOOR_DBW


def write_samples_csv(path, sample_set: SampleSet) -> None:
    """Append-ordered campaign CSV; floats are repr'd for exact round-trips."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SAMPLE_CSV_FIELDS)
        for s in sample_set.samples:
            row = [s.user_id, s.iteration, s.m, s.cs, repr(s.ptx_dbw),
                   s.sat_of_interest, repr(s.i_dbw)]
            for c in s.contributions:
                row.extend([repr(c.dtau_s), repr(c.dnu_hz), repr(_dbw(c.power_w))])
            for _ in range(NUM_VISIBLE - 1 - len(s.contributions)):
                row.extend(["", "", ""])
            row.append(";".join(s.flags))
            writer.writerow(row)


def read_samples_csv(path):
    """Load a campaign CSV into a list of dict records."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != SAMPLE_CSV_FIELDS:
            raise PassTableError("sample CSV header mismatch", row=1)
        for row in reader:
            records.append({
                "user_id": int(row["user_id"]),
                "iter": int(row["iter"]),
                "m": int(row["m"]),
                "cs": int(row["cs"]),
                "ptx_dbw": float(row["ptx_dbw"]),
                "sat_of_interest": int(row["sat_of_interest"]),
                "I_dbw": float(row["I_dbw"]),
                "flags": tuple(f for f in row["flags"].split(";") if f),
            })
    return records


# ---------------------------------------------------------------------------
# Config files and overrides
# ---------------------------------------------------------------------------

def _parse_int_list(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _parse_float_list(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


# section -> key -> (parser, CampaignConfig field or special handler tag)
_CONFIG_SCHEMA = {
    "campaign": {
        "users": (int, "users"),
        "iterations": (int, "iterations"),
        "master_seed": (int, "master_seed"),
        "f_c_hz": (float, "f_c_hz"),
        "theta_mask_deg": (float, "@theta_mask_deg"),
        "noise_var_w": (float, "noise_var_w"),
        "retry_budget": (int, "retry_budget"),
    },
    "shell": {
        "altitude_m": (float, "@shell.altitude_m"),
        "inclination_deg": (float, "@shell.inclination_deg"),
        "planes": (int, "@shell.plane_count"),
        "sats_per_plane": (int, "@shell.sats_per_plane"),
        "phasing": (int, "@shell.phasing"),
    },
    "prs": {
        "m": (_parse_int_list, "m_values"),
        "cs": (_parse_int_list, "cs_values"),
        "ptx_dbw": (_parse_float_list, "ptx_dbw_values"),
        "n_scs": (int, "n_scs"),
        "scs_hz": (float, "scs_hz"),
        "n_fft": (int, "n_fft"),
        "n_cp": (int, "n_cp"),
    },
    "doppler": {
        "max_hz": (float, "doppler_max_hz"),
        "step_hz": (float, "doppler_step_hz"),
    },
    "passes": {
        "source": (str, "pass_source"),
        "path": (str, "pass_path"),
        "span_s": (float, "span_s"),
        "time_step_s": (float, "time_step_s"),
    },
}


def _apply_entry(fields: dict, shell_kw: dict, target: str, value):
    if target == "@theta_mask_deg":
        fields["theta_mask_rad"] = math.radians(value)
    elif target.startswith("@shell."):
        shell_kw[target.split(".", 1)[1]] = value
    else:
        fields[target] = value


def config_from_file(path) -> CampaignConfig:
    """Parse a key = value campaign config with section headers.

    Unknown sections or keys are errors; missing keys take their defaults.
    """
    import configparser

    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError:
        raise
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None

    fields: dict = {}
    shell_kw: dict = {}
    for section in parser.sections():
        if section not in _CONFIG_SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _CONFIG_SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            parse, target = _CONFIG_SCHEMA[section][key]
            try:
                value = parse(raw)
            except ValueError:
                raise ConfigError(
                    f"bad value for {section}.{key}: {raw!r}") from None
            _apply_entry(fields, shell_kw, target, value)
    return _build_config(fields, shell_kw)


def _build_config(fields: dict, shell_kw: dict) -> CampaignConfig:
    if "inclination_deg" in shell_kw:
        shell_kw["inclination_rad"] = math.radians(shell_kw.pop("inclination_deg"))
    if shell_kw:
        base = CampaignConfig().shell
        shell = ShellConfig(
            altitude_m=shell_kw.get("altitude_m", base.altitude_m),
            inclination_rad=shell_kw.get("inclination_rad", base.inclination_rad),
            plane_count=shell_kw.get("plane_count", base.plane_count),
            sats_per_plane=shell_kw.get("sats_per_plane", base.sats_per_plane),
            phasing=shell_kw.get("phasing", base.phasing),
        )
        fields["shell"] = shell
    try:
        return CampaignConfig(**fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def apply_overrides(config: CampaignConfig, overrides) -> CampaignConfig:
    """Apply `key=value` strings on top of a parsed config."""
    if not overrides:
        return config
    flat = {}
    for section, keys in _CONFIG_SCHEMA.items():
        for key, spec in keys.items():
            flat[key] = spec

    fields = config_to_dict(config)
    shell_dict = fields.pop("shell")
    shell_kw = {
        "altitude_m": shell_dict["altitude_m"],
        "inclination_rad": shell_dict["inclination_rad"],
        "plane_count": shell_dict["plane_count"],
        "sats_per_plane": shell_dict["sats_per_plane"],
        "phasing": shell_dict["phasing"],
    }
    fields["m_values"] = tuple(fields["m_values"])
    fields["cs_values"] = tuple(fields["cs_values"])
    fields["ptx_dbw_values"] = tuple(fields["ptx_dbw_values"])

    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key not in flat:
            raise ConfigError(f"unknown override key {key!r}")
        parse, target = flat[key]
        try:
            value = parse(raw.strip())
        except ValueError:
            raise ConfigError(f"bad override value for {key}: {raw!r}") from None
        if target == "@theta_mask_deg":
            fields["theta_mask_rad"] = math.radians(value)
        elif target.startswith("@shell."):
            skey = target.split(".", 1)[1]
            if skey == "inclination_deg":
                shell_kw["inclination_rad"] = math.radians(value)
            else:
                shell_kw[skey] = value
        else:
            fields[target] = value

    fields["shell"] = ShellConfig(**shell_kw)
    try:
        return CampaignConfig(**fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
