import csv
import json
import math

import numpy as np
import pytest

from leoprs.cli import main


@pytest.fixture
def config_path(tmp_path, tiny_config_text):
    path = tmp_path / "campaign.ini"
    path.write_text(tiny_config_text)
    return path


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# generate-passes
# ---------------------------------------------------------------------------

def test_generate_passes_writes_schema_and_is_deterministic(tmp_path,
                                                            config_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    fast = ["--override", "span_s=30"]
    assert main(["generate-passes", "--config", str(config_path),
                 "--out", str(out1)] + fast) == 0
    assert main(["generate-passes", "--config", str(config_path),
                 "--out", str(out2)] + fast) == 0
    rows = _read_csv(out1 / "passes.csv")
    assert rows[0] == ["user_id", "t_s", "sat_id", "x_m", "y_m", "z_m",
                       "vx_mps", "vy_mps", "vz_mps"]
    assert len(rows) > 1
    assert (out1 / "passes.csv").read_bytes() == (out2 / "passes.csv").read_bytes()


def test_generate_passes_near_zenith_mask_nearly_empty(tmp_path, config_path):
    out = tmp_path / "z"
    assert main(["generate-passes", "--config", str(config_path),
                 "--out", str(out),
                 "--override", "theta_mask_deg=89",
                 "--override", "span_s=20", "--override", "users=1"]) == 0
    assert len(_read_csv(out / "passes.csv")) <= 3   # header plus rare hits


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_emits_samples_and_metadata(tmp_path, config_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(config_path),
                 "--out", str(out)]) == 0
    rows = _read_csv(out / "samples.csv")
    assert rows[0][0] == "user_id" and rows[0][-1] == "flags"
    meta = json.loads((out / "metadata.json").read_text())
    assert len(rows) - 1 + 4 * meta["skipped_draws"] == 4 * meta["total_draws"]
    assert meta["master_seed"] == 11
    assert "config_hash" in meta and "version" in meta


def test_simulate_idempotent_modulo_timestamp(tmp_path, config_path):
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    for out in (out1, out2):
        assert main(["simulate", "--config", str(config_path),
                     "--out", str(out)]) == 0
    assert (out1 / "samples.csv").read_bytes() == (out2 / "samples.csv").read_bytes()
    m1 = json.loads((out1 / "metadata.json").read_text())
    m2 = json.loads((out2 / "metadata.json").read_text())
    m1.pop("timestamp"), m2.pop("timestamp")
    assert m1 == m2


def test_simulate_seed_flag_changes_outputs(tmp_path, config_path):
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["simulate", "--config", str(config_path),
                 "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(config_path), "--out", str(out2),
                 "--seed", "123"]) == 0
    assert (out1 / "samples.csv").read_bytes() != (out2 / "samples.csv").read_bytes()
    assert json.loads((out2 / "metadata.json").read_text())["master_seed"] == 123


def test_simulate_ptx_override_shifts_median_by_slope_two(tmp_path,
                                                          config_path):
    outs = {}
    for ptx in (30, 1):
        out = tmp_path / f"p{ptx}"
        assert main(["simulate", "--config", str(config_path),
                     "--out", str(out), "--override", f"ptx_dbw={ptx}"]) == 0
        vals = []
        for row in _read_csv(out / "samples.csv")[1:]:
            if "zero_floor" not in row[-1]:
                vals.append(float(row[6]))
        outs[ptx] = np.median(vals)
    assert outs[1] - outs[30] == pytest.approx(-58.0, abs=3.0)


def test_simulate_missing_pass_file_exits_4(tmp_path, config_path, capsys):
    out = tmp_path / "x"
    code = main(["simulate", "--config", str(config_path), "--out", str(out),
                 "--override", "source=external",
                 "--override", "path=/nonexistent/passes.csv"])
    assert code == 4
    assert "/nonexistent/passes.csv" in capsys.readouterr().err


def test_simulate_bad_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[campaign]\nusers = 0\n")
    code = main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert code == 2


def test_unknown_override_exits_2(tmp_path, config_path):
    code = main(["simulate", "--config", str(config_path),
                 "--out", str(tmp_path / "o"), "--override", "bogus=1"])
    assert code == 2


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def fit_outputs(tmp_path_factory):
    """A small but fit-worthy campaign run once for the fit/model/report tests."""
    root = tmp_path_factory.mktemp("fitrun")
    config = root / "c.ini"
    config.write_text("""\
[campaign]
users = 3
iterations = 25
master_seed = 21

[prs]
m = 2,6,12
cs = 4
ptx_dbw = 1,30
""")
    out = root / "out"
    assert main(["simulate", "--config", str(config), "--out", str(out)]) == 0
    assert main(["fit", "--samples", str(out / "samples.csv"),
                 "--out", str(out)]) == 0
    return out


def test_fit_one_winner_per_group(fit_outputs):
    report = json.loads((fit_outputs / "fit_report.json").read_text())
    assert len(report["groups"]) == 6
    for g in report["groups"]:
        names = [c["name"] for c in g["candidates"]]
        assert names == ["normal", "lognormal", "gamma", "rayleigh",
                         "rician", "gev"]
        best = min(g["candidates"], key=lambda c: c["ks_d"])
        assert g["winner"] == best["name"]


def test_fit_ecdf_file_ends_at_one(fit_outputs):
    report = json.loads((fit_outputs / "fit_report.json").read_text())
    g = report["groups"][0]
    tag = f"m{g['m']}_cs{g['cs']}_ptx{g['ptx_dbw']:g}"
    rows = _read_csv(fit_outputs / f"ecdf_{tag}.csv")
    assert rows[0] == ["x_dbw", "ecdf"]
    assert float(rows[-1][1]) == 1.0
    xs = [float(r[0]) for r in rows[1:]]
    assert xs == sorted(xs)
    assert (fit_outputs / f"pdf_hist_{tag}.csv").exists()
    assert (fit_outputs / f"pdf_gev_{tag}.csv").exists()


def test_fit_skips_underfilled_groups(tmp_path, capsys):
    path = tmp_path / "samples.csv"
    header = ("user_id,iter,m,cs,ptx_dbw,sat_of_interest,I_dbw,"
              "dtau1_s,dnu1_hz,c1_dbw,dtau2_s,dnu2_hz,c2_dbw,"
              "dtau3_s,dnu3_hz,c3_dbw,flags")
    lines = [header]
    for i in range(20):
        lines.append(f"0,{i},1,4,30.0,7,-130.{i},0,0,-140,0,0,-140,0,0,-140,")
    path.write_text("\n".join(lines) + "\n")
    out = tmp_path / "out"
    assert main(["fit", "--samples", str(path), "--out", str(out)]) == 0
    report = json.loads((out / "fit_report.json").read_text())
    assert report["groups"] == []
    assert report["skipped_groups"][0]["n_unflagged"] == 20
    assert "skipped" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------

def _planted_fit_report(path, ms=(1, 2, 4, 9), ptxs=(1.0, 30.0), css=(4, 12)):
    planted = {"a1": 1.0, "a2": 2.0, "a3": -180.0, "b1": -0.09, "b2": 8.35,
               "c1": -0.185, "c2": 0.038}
    groups = []
    for cs in css:
        for m in ms:
            for ptx in ptxs:
                params = {
                    "shape": planted["c1"] / math.sqrt(m) + planted["c2"],
                    "scale": planted["b1"] * m + planted["b2"],
                    "loc": (planted["a1"] / math.sqrt(m)
                            + planted["a2"] * ptx + planted["a3"]),
                }
                groups.append({
                    "m": m, "cs": cs, "ptx_dbw": ptx, "n_samples": 1000,
                    "winner": "gev",
                    "candidates": [{"name": "gev", "params": params,
                                    "ks_d": 0.01, "p_value": 0.5}],
                })
    path.write_text(json.dumps({"groups": groups, "skipped_groups": []}))
    return planted


def test_model_recovers_planted_coefficients(tmp_path):
    fit_path = tmp_path / "fit_report.json"
    planted = _planted_fit_report(fit_path)
    out = tmp_path / "out"
    assert main(["model", "--fit", str(fit_path), "--out", str(out)]) == 0
    model = json.loads((out / "gev_model.json").read_text())
    for cs in ("4", "12"):
        for key, value in planted.items():
            assert model[cs][key] == pytest.approx(value, abs=1e-6)
        assert model[cs]["rms_mu"] < 1e-9
    rows = _read_csv(out / "mu_curves.csv")
    assert rows[0] == ["cs", "ptx_dbw", "m", "fitted_mu", "model_mu"]
    assert len(rows) == 1 + 2 * 4 * 2
    assert (out / "sigma_curves.csv").exists()
    assert (out / "k_curves.csv").exists()


def test_model_insufficient_span_exits_2_naming_dimension(tmp_path, capsys):
    fit_path = tmp_path / "fit_report.json"
    _planted_fit_report(fit_path, ptxs=(30.0,), css=(4,))
    code = main(["model", "--fit", str(fit_path), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "transmit power" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# ddm
# ---------------------------------------------------------------------------

@pytest.fixture
def single_sat_config(tmp_path):
    path = tmp_path / "single.ini"
    path.write_text("""\
[campaign]
users = 1
theta_mask_deg = 25.0

[shell]
altitude_m = 554e3
inclination_deg = 0
planes = 1
sats_per_plane = 1
phasing = 0

[prs]
m = 2
cs = 4
ptx_dbw = 30
""")
    return path


def test_ddm_single_satellite_peak_at_truth(tmp_path, single_sat_config):
    # one-satellite equatorial shell directly over the single lattice user at
    # t=0: truth is delay bin 0 (receiver epoch) and Doppler 0 (zenith)
    out = tmp_path / "ddm"
    assert main(["ddm", "--config", str(single_sat_config),
                 "--out", str(out), "--user", "0", "--time", "0"]) == 0
    rows = _read_csv(out / "ddm.csv")
    header = rows[0]
    assert header[0] == "delay_s"
    assert len(header) - 1 == 161          # +-40 kHz at 500 Hz
    dopplers = [float(x) for x in header[1:]]
    assert dopplers[0] == -40e3 and dopplers[-1] == 40e3
    values = np.array([[float(x) for x in row[1:]] for row in rows[1:]])
    assert values.shape == (2 * (512 + 36), 161)
    assert np.all(values >= 0.0)
    i, j = np.unravel_index(np.argmax(values), values.shape)
    assert i == 0
    assert dopplers[j] == 0.0


def test_ddm_no_visible_satellite_exits_3(tmp_path, single_sat_config, capsys):
    # half an orbit later the satellite is on the far side of the Earth
    period = 2 * math.pi / math.sqrt(3.986004418e14 / (6371e3 + 554e3) ** 3)
    code = main(["ddm", "--config", str(single_sat_config),
                 "--out", str(tmp_path / "o"), "--user", "0",
                 "--time", str(period / 2)])
    assert code == 3


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def test_report_summarises_outputs(fit_outputs, capsys):
    assert main(["report", "--out", str(fit_outputs)]) == 0
    text = (fit_outputs / "report.txt").read_text()
    assert "winner" in text
    assert "median" in text
    out = capsys.readouterr().out
    assert "campaign report" in out
