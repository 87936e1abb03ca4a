import math

import numpy as np
import pytest

from conftest import make_link

from leoprs import (
    caf,
    combine,
    interference_sample,
    sinr,
)
from leoprs.receiver import ZERO_FLOOR_DBW

FS = 512 * 30e3


# ---------------------------------------------------------------------------
# caf
# ---------------------------------------------------------------------------

def test_caf_auto_peak_at_origin():
    link = make_link()
    composite = combine([link.applied])
    ddm = caf(composite, link.clean, [-1000.0, 0.0, 1000.0], link.config)
    delay, doppler, _ = ddm.peak()
    assert delay == 0.0
    assert doppler == 0.0


def test_caf_clean_peak_equals_gain_times_ptx_squared():
    gain = 10 ** (-15.42)
    link = make_link(gain=gain, delay_s=37 / FS, doppler_hz=12.5e3, phase=2.4,
                     delay_origin_s=0.0)
    composite = combine([link.applied])
    ddm = caf(composite, link.clean, [link.params.doppler_hz], link.config)
    peak = ddm.values[link.shift, 0]
    expected = gain * link.config.p_tx_w ** 2
    assert 10 * abs(math.log10(peak / expected)) < 0.1


def test_caf_peak_location_at_quantized_delay_and_nearest_doppler():
    link = make_link(delay_s=55 / FS, doppler_hz=760.0)
    composite = combine([link.applied])
    grid = np.arange(-2000.0, 2001.0, 500.0)
    ddm = caf(composite, link.clean, grid, link.config)
    i, j = np.unravel_index(np.argmax(ddm.values), ddm.values.shape)
    assert i == 55
    assert grid[j] == 1000.0   # nearest grid point to 760 Hz
    assert np.all(ddm.values >= 0.0)
    assert np.all(np.diff(ddm.delays) > 0)


def test_caf_comb_disjoint_interferer_vanishes_at_shared_cell():
    soi = make_link(sat_id=0, k_offset=0)
    interferer = make_link(sat_id=1, k_offset=1)
    composite = combine([interferer.applied])   # satellite of interest absent
    ddm = caf(composite, soi.clean, [0.0], soi.config)
    auto = combine([soi.applied])
    auto_peak = caf(auto, soi.clean, [0.0], soi.config).values[0, 0]
    assert ddm.values[0, 0] <= 1e-10 * auto_peak


def test_caf_validates_arguments():
    link = make_link()
    composite = combine([link.applied])
    with pytest.raises(ValueError):
        caf(composite, link.clean, [], link.config)
    short = combine([make_link(m=1).applied])
    with pytest.raises(ValueError):
        caf(short, link.clean, [0.0], link.config)


# ---------------------------------------------------------------------------
# interference_sample
# ---------------------------------------------------------------------------

def test_aligned_comb_orthogonal_interferers():
    links = [make_link(sat_id=i, k_offset=i, gain=1e-15, phase=0.3 * i)
             for i in range(4)]
    sample = interference_sample(links, 0)
    bound = 1e-10 * (1e-15 * links[0].config.p_tx_w ** 2)
    for c in sample.contributions:
        assert c.power_w <= bound
    assert sample.flags == () or sample.i_watts <= 3 * bound


def test_interference_two_paths_agree():
    # pairwise evaluation vs the full-DDM cell at (tau_i, nu_i) with the
    # satellite of interest and noise excluded
    rng = np.random.default_rng(9)
    for _ in range(5):
        soi = make_link(sat_id=0, k_offset=0, gain=1e-15,
                        delay_s=int(rng.integers(0, 200)) / FS,
                        doppler_hz=float(rng.uniform(-30e3, 30e3)),
                        phase=float(rng.uniform(0, 2 * math.pi)))
        interferer = make_link(sat_id=1, k_offset=1, gain=2.5e-16,
                               delay_s=int(rng.integers(0, 400)) / FS,
                               doppler_hz=float(rng.uniform(-30e3, 30e3)),
                               phase=float(rng.uniform(0, 2 * math.pi)))
        sample = interference_sample([soi, interferer], 0)
        composite = combine([interferer.applied])
        ddm = caf(composite, soi.clean, [soi.params.doppler_hz], soi.config)
        cell = ddm.values[soi.shift, 0]
        pairwise = sample.contributions[0].power_w
        assert pairwise == pytest.approx(cell, rel=1e-6)


def test_interference_invariant_under_common_phase_rotation():
    def build(extra_phase):
        return [make_link(sat_id=i, k_offset=i, gain=10 ** (-15 - 0.1 * i),
                          delay_s=(40 * i) / FS, doppler_hz=4e3 * i - 6e3,
                          phase=(0.7 * i + extra_phase) % (2 * math.pi))
                for i in range(3)]

    a = interference_sample(build(0.0), 0)
    b = interference_sample(build(1.234), 0)
    assert a.i_watts == pytest.approx(b.i_watts, rel=1e-12)


def test_contribution_scales_linearly_with_interferer_gain():
    g = 3.7
    base = dict(delay_s=25 / FS, doppler_hz=7.2e3, phase=0.4)
    soi = make_link(sat_id=0, k_offset=0, gain=1e-15)
    weak = make_link(sat_id=1, k_offset=1, gain=1e-16, **base)
    strong = make_link(sat_id=1, k_offset=1, gain=g * 1e-16, **base)
    c_weak = interference_sample([soi, weak], 0).contributions[0].power_w
    c_strong = interference_sample([soi, strong], 0).contributions[0].power_w
    assert c_strong == pytest.approx(g * c_weak, rel=1e-9)


def test_interference_total_is_sum_of_contributions():
    links = [make_link(sat_id=i, k_offset=i, gain=10 ** (-15 - 0.2 * i),
                       delay_s=(30 * i) / FS, doppler_hz=5e3 * i - 7e3,
                       phase=0.5 * i) for i in range(4)]
    sample = interference_sample(links, 2)
    assert sample.i_watts == pytest.approx(
        sum(c.power_w for c in sample.contributions), rel=1e-9)
    assert sample.i_watts >= 0.0
    assert len(sample.contributions) == 3
    assert sample.sat_of_interest == 2


def test_interference_zero_floor_flag():
    # interferer entirely outside the correlation window
    soi = make_link(sat_id=0, k_offset=0, m=1)
    far = make_link(sat_id=1, k_offset=1, m=1, delay_s=5000 / FS)
    sample = interference_sample([soi, far], 0)
    assert sample.i_watts == 0.0
    assert sample.i_dbw == ZERO_FLOOR_DBW
    assert "zero_floor" in sample.flags


def test_interference_sample_validates_arguments():
    links = [make_link(sat_id=i, k_offset=i) for i in range(2)]
    with pytest.raises(ValueError):
        interference_sample(links, 2)
    with pytest.raises(ValueError):
        interference_sample(links[:1], 0)


# ---------------------------------------------------------------------------
# sinr
# ---------------------------------------------------------------------------

def test_sinr_noise_only_reduction():
    links = [make_link(sat_id=0, k_offset=0, m=1, gain=1e-15),
             make_link(sat_id=1, k_offset=1, m=1, gain=1e-15,
                       delay_s=5000 / FS)]   # no overlap: interference-free
    noise_var = 1e-13
    value = sinr(0, links, noise_var)
    p_tx = links[0].config.p_tx_w
    assert value == pytest.approx(p_tx * 1e-15 / noise_var, rel=1e-9)


def test_sinr_orthogonal_interferers_noise_free():
    links = [make_link(sat_id=i, k_offset=i, gain=1e-15) for i in range(4)]
    assert sinr(0, links, 0.0) >= 1e10


def test_sinr_invariant_under_common_distance_scaling():
    def build(scale):
        # doubling every distance scales all gains by 1/4
        kw = [dict(delay_s=20 / FS, doppler_hz=3e3, phase=0.2),
              dict(delay_s=70 / FS, doppler_hz=-9e3, phase=1.0)]
        return [make_link(sat_id=0, k_offset=0, gain=1e-15 / scale**2),
                make_link(sat_id=1, k_offset=1, gain=2e-15 / scale**2, **kw[0]),
                make_link(sat_id=2, k_offset=2, gain=3e-15 / scale**2, **kw[1])]

    assert sinr(0, build(1.0), 0.0) == pytest.approx(
        sinr(0, build(2.0), 0.0), rel=1e-9)


def test_sinr_infinite_when_denominator_vanishes():
    links = [make_link(sat_id=0, k_offset=0, m=1),
             make_link(sat_id=1, k_offset=1, m=1, delay_s=5000 / FS)]
    assert sinr(0, links, 0.0) == math.inf
