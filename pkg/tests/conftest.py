import math

import pytest

from leoprs import (
    ChannelParams,
    PrsConfig,
    SatLink,
    apply_channel,
    map_resource_grid,
    ofdm_modulate,
)


def make_params(gain=1.0, delay_s=0.0, doppler_hz=0.0, phase=0.0,
                slant_range=554e3):
    return ChannelParams(gain=gain, delay_s=delay_s, doppler_hz=doppler_hz,
                         phase=phase, slant_range=slant_range)


def make_link(sat_id=0, m=2, cs=4, ptx_dbw=30.0, k_offset=0, n_id=None,
              gain=1.0, delay_s=0.0, doppler_hz=0.0, phase=0.0,
              slant_range=554e3, delay_origin_s=0.0):
    """One synthetic satellite link with explicit channel parameters."""
    cfg = PrsConfig(m=m, cs=cs, p_tx_dbw=ptx_dbw,
                    n_id=sat_id if n_id is None else n_id, k_offset=k_offset)
    clean = ofdm_modulate(map_resource_grid(cfg), cfg)
    p = make_params(gain=gain, delay_s=delay_s, doppler_hz=doppler_hz,
                    phase=phase, slant_range=slant_range)
    applied = apply_channel(clean, p, delay_origin_s=delay_origin_s)
    shift = round(applied.t0 * clean.fs)
    return SatLink(sat_id=sat_id, config=cfg, params=p, clean=clean,
                   applied=applied, shift=shift)


@pytest.fixture
def tiny_config_text():
    return """\
[campaign]
users = 2
iterations = 2
master_seed = 11
f_c_hz = 2.2e9
theta_mask_deg = 25.0

[shell]
altitude_m = 554e3
inclination_deg = 53
planes = 72
sats_per_plane = 22
phasing = 1

[prs]
m = 2
cs = 4
ptx_dbw = 30

[doppler]
max_hz = 40e3
step_hz = 500

[passes]
source = internal
span_s = 600
time_step_s = 1.0
"""
