"""Batch front-end wiring config -> campaign -> statistics -> plot-ready files.

Verbs: generate-passes, simulate, fit, model, ddm, report. All outputs are
CSV/JSON so any plotting tool can consume them. Exit codes: 0 success,
2 config error, 3 geometry error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .geometry import fibonacci_lattice, write_pass_table
from .montecarlo import (
    CampaignConfig,
    ConfigError,
    GeometryError,
    PassTableError,
    apply_overrides,
    config_from_file,
    load_passes,
    read_samples_csv,
    run_campaign,
    run_draw,
    sweep_points,
    write_samples_csv,
)
from .receiver import caf
from .stats import (
    EvaluationError,
    FitError,
    GevModel,
    GevParams,
    RegressionError,
    ecdf,
    fit_candidates,
    fit_parameter_models,
    gev_pdf,
    model_eval,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GEOMETRY = 3
EXIT_IO = 4

MIN_GROUP_SAMPLES = 50


def _load_config(args) -> CampaignConfig:
    if args.config is None:
        raise ConfigError("--config is required for this command")
    config = config_from_file(args.config)
    overrides = list(args.override or [])
    if args.seed is not None:
        overrides.append(f"master_seed={args.seed}")
    return apply_overrides(config, overrides)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _group_tag(m, cs, ptx) -> str:
    return f"m{m}_cs{cs}_ptx{ptx:g}"


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------

def cmd_generate_passes(args) -> int:
    config = _load_config(args)
    out = _outdir(args)
    users = fibonacci_lattice(config.users)
    times = np.arange(0.0, config.span_s + config.time_step_s / 2,
                      config.time_step_s)
    path = out / "passes.csv"
    rows = write_pass_table(path, users, config.shell, times,
                            config.theta_mask_rad)
    print(f"wrote {path}: {rows} rows, {config.users} users, "
          f"{config.shell.total} satellites, {len(times)} epochs")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _load_config(args)
    out = _outdir(args)
    sample_set = run_campaign(config, workers=args.workers)
    write_samples_csv(out / "samples.csv", sample_set)
    metadata = dict(sample_set.metadata)
    metadata["overrides"] = list(args.override or [])
    with open(out / "metadata.json", "w") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
    print(f"wrote {out / 'samples.csv'}: {len(sample_set.samples)} samples, "
          f"{sample_set.skipped_draws} skipped draws")
    return EXIT_OK


def _unflagged_groups(records):
    """Group I_dbw values by (m, cs, ptx); zero-floor samples are dropped."""
    groups: dict = {}
    for r in records:
        if "zero_floor" in r["flags"]:
            continue
        groups.setdefault((r["m"], r["cs"], r["ptx_dbw"]), []).append(r["I_dbw"])
    return {k: np.array(v) for k, v in sorted(groups.items())}


def cmd_fit(args) -> int:
    out = _outdir(args)
    records = read_samples_csv(args.samples)
    groups = _unflagged_groups(records)

    report = {"min_samples": MIN_GROUP_SAMPLES, "groups": [], "skipped_groups": []}
    for (m, cs, ptx), values in groups.items():
        if len(values) < MIN_GROUP_SAMPLES:
            report["skipped_groups"].append(
                {"m": m, "cs": cs, "ptx_dbw": ptx, "n_unflagged": len(values)})
            print(f"warning: group {_group_tag(m, cs, ptx)} has only "
                  f"{len(values)} unflagged samples, skipped", file=sys.stderr)
            continue
        fit = fit_candidates(values)
        tag = _group_tag(m, cs, ptx)

        steps = ecdf(values)
        with open(out / f"ecdf_{tag}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x_dbw", "ecdf"])
            n = len(steps.sorted_samples)
            for i, x in enumerate(steps.sorted_samples, start=1):
                w.writerow([repr(float(x)), repr(i / n)])

        counts, edges = np.histogram(values, bins=50, density=True)
        centers = 0.5 * (edges[:-1] + edges[1:])
        with open(out / f"pdf_hist_{tag}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_center_dbw", "density"])
            for c, d in zip(centers, counts):
                w.writerow([repr(float(c)), repr(float(d))])

        gev = fit.by_name("gev").params
        params = GevParams(shape=gev["shape"], scale=gev["scale"], loc=gev["loc"])
        xs = np.linspace(values.min(), values.max(), 400)
        with open(out / f"pdf_gev_{tag}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x_dbw", "density"])
            for x, d in zip(xs, gev_pdf(xs, params)):
                w.writerow([repr(float(x)), repr(float(d))])

        report["groups"].append({
            "m": m, "cs": cs, "ptx_dbw": ptx, "n_samples": int(len(values)),
            "shift_dbw": fit.shift_dbw,
            "winner": fit.winner,
            "candidates": [
                {"name": c.name, "params": c.params,
                 "ks_d": c.ks_d, "p_value": c.p_value}
                for c in fit.candidates
            ],
        })

    with open(out / "fit_report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    print(f"wrote {out / 'fit_report.json'}: {len(report['groups'])} groups, "
          f"{len(report['skipped_groups'])} skipped")
    return EXIT_OK


def cmd_model(args) -> int:
    out = _outdir(args)
    with open(args.fit) as fh:
        report = json.load(fh)
    fits = []
    for g in report["groups"]:
        gev = next(c for c in g["candidates"] if c["name"] == "gev")["params"]
        fits.append((g["m"], g["ptx_dbw"], g["cs"],
                     GevParams(shape=gev["shape"], scale=gev["scale"],
                               loc=gev["loc"])))
    model = fit_parameter_models(fits)

    with open(out / "gev_model.json", "w") as fh:
        json.dump(model.to_dict(), fh, indent=2, sort_keys=True)

    with open(out / "mu_curves.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cs", "ptx_dbw", "m", "fitted_mu", "model_mu"])
        for m, ptx, cs, params in fits:
            w.writerow([cs, repr(ptx), m, repr(params.loc),
                        repr(model_eval(model, m, ptx, cs).loc)])
    with open(out / "sigma_curves.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cs", "m", "fitted_sigma", "model_sigma"])
        for m, ptx, cs, params in fits:
            w.writerow([cs, m, repr(params.scale),
                        repr(model_eval(model, m, ptx, cs).scale)])
    with open(out / "k_curves.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cs", "m", "fitted_k", "model_k"])
        for m, ptx, cs, params in fits:
            w.writerow([cs, m, repr(params.shape),
                        repr(model_eval(model, m, ptx, cs).shape)])

    print(f"wrote {out / 'gev_model.json'}: comb sizes "
          f"{sorted(model.per_cs)}")
    return EXIT_OK


def cmd_ddm(args) -> int:
    config = _load_config(args)
    out = _outdir(args)
    users = fibonacci_lattice(config.users)
    if not 0 <= args.user < len(users):
        raise ConfigError(f"user {args.user} outside 0..{len(users) - 1}")
    m, cs, ptx = sweep_points(config)[0]

    from .channel import composite_from_links
    from .geometry import visible_set as _vis
    from .montecarlo import NUM_VISIBLE, build_links, _visible_from_states

    user = users[args.user]
    rng = np.random.default_rng([config.master_seed, args.user, 0, 0])
    if config.pass_source == "internal":
        vis = _vis(user, config.shell, args.time, config.theta_mask_rad,
                   NUM_VISIBLE)
    else:
        table = load_passes(config.pass_path)
        vis = _visible_from_states(user, table.states(user.user_id, args.time),
                                   config.theta_mask_rad, NUM_VISIBLE)
    if not vis.links:
        raise GeometryError(f"no visible satellites for user {args.user} "
                            f"at t={args.time}")
    links = build_links(vis, rng, config, m, cs, ptx)
    composite = composite_from_links(links, noise_var=config.noise_var_w,
                                     rng=rng)

    sat_index = 0
    if args.sat is not None:
        ids = [lk.sat_id for lk in links]
        if args.sat not in ids:
            raise GeometryError(f"satellite {args.sat} not in the visible set "
                                f"{ids}")
        sat_index = ids.index(args.sat)
    soi = links[sat_index]

    dopplers = np.arange(-config.doppler_max_hz,
                         config.doppler_max_hz + config.doppler_step_hz / 2,
                         config.doppler_step_hz)
    ddm = caf(composite, soi.clean, dopplers, soi.config)
    if abs(soi.params.doppler_hz) > config.doppler_max_hz:
        print(f"warning: true Doppler {soi.params.doppler_hz:.0f} Hz exceeds "
              f"the search window", file=sys.stderr)

    path = out / "ddm.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delay_s"] + [repr(float(nu)) for nu in ddm.dopplers])
        for i, delay in enumerate(ddm.delays):
            w.writerow([repr(float(delay))]
                       + [repr(float(v)) for v in ddm.values[i]])
    peak = ddm.peak()
    print(f"wrote {path}: {ddm.values.shape[0]} delays x "
          f"{ddm.values.shape[1]} dopplers, satellite {soi.sat_id}, "
          f"peak {peak[2]:.3e} W at ({peak[0] * 1e3:.3f} ms, {peak[1]:.0f} Hz)")
    return EXIT_OK


def cmd_report(args) -> int:
    out = _outdir(args)
    lines = [f"leoprs {__version__} campaign report", ""]

    meta_path = out / "metadata.json"
    if meta_path.exists():
        with open(meta_path) as fh:
            meta = json.load(fh)
        lines += [
            f"seed {meta['master_seed']}, config {meta['config_hash'][:12]}",
            f"draws {meta['total_draws']}, skipped {meta['skipped_draws']}, "
            f"samples {meta['emitted_samples']}",
            "",
        ]

    samples_path = out / "samples.csv"
    if samples_path.exists():
        records = read_samples_csv(samples_path)
        floored = sum(1 for r in records if "zero_floor" in r["flags"])
        clipped = sum(1 for r in records if "doppler_clipped" in r["flags"])
        lines.append(f"samples {len(records)}: {floored} zero-floored, "
                     f"{clipped} doppler-clipped")
        for key, values in _unflagged_groups(records).items():
            m, cs, ptx = key
            lines.append(f"  {_group_tag(m, cs, ptx)}: n={len(values)} "
                         f"median={np.median(values):.1f} dBW")
        lines.append("")

    fit_path = out / "fit_report.json"
    if fit_path.exists():
        with open(fit_path) as fh:
            report = json.load(fh)
        for g in report["groups"]:
            best = min(g["candidates"], key=lambda c: c["ks_d"])
            lines.append(f"fit {_group_tag(g['m'], g['cs'], g['ptx_dbw'])}: "
                         f"winner {g['winner']} (D={best['ks_d']:.4f})")
        lines.append("")

    model_path = out / "gev_model.json"
    if model_path.exists():
        with open(model_path) as fh:
            model = json.load(fh)
        for cs, coeffs in sorted(model.items(), key=lambda kv: int(kv[0])):
            lines.append(
                f"model cs={cs}: a=({coeffs['a1']:.3f}, {coeffs['a2']:.3f}, "
                f"{coeffs['a3']:.1f}) b=({coeffs['b1']:.3f}, {coeffs['b2']:.2f}) "
                f"c=({coeffs['c1']:.3f}, {coeffs['c2']:.3f})")

    text = "\n".join(lines).rstrip() + "\n"
    with open(out / "report.txt", "w") as fh:
        fh.write(text)
    print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leoprs",
        description="Interference campaigns for comb-multiplexed LEO "
                    "positioning pilots")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="campaign config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--override", action="append", metavar="KEY=VALUE",
                       help="config override, repeatable")

    p = sub.add_parser("generate-passes", help="write a satellite pass table")
    common(p)
    p.set_defaults(func=cmd_generate_passes)

    p = sub.add_parser("simulate", help="run the Monte Carlo campaign")
    common(p)
    p.add_argument("--workers", type=int, default=1,
                   help="parallel worker processes")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit candidate distributions per group")
    common(p, config=False)
    p.add_argument("--samples", required=True, help="campaign sample CSV")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("model", help="regress GEV parameters vs configuration")
    common(p, config=False)
    p.add_argument("--fit", required=True, help="fit_report.json from 'fit'")
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("ddm", help="dump a delay-Doppler map snapshot")
    common(p)
    p.add_argument("--user", type=int, required=True, help="user index")
    p.add_argument("--time", type=float, required=True, help="epoch seconds")
    p.add_argument("--sat", type=int, help="satellite of interest (default: "
                   "highest elevation)")
    p.set_defaults(func=cmd_ddm)

    p = sub.add_parser("report", help="summarise campaign outputs in one text")
    common(p, config=False)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RegressionError, EvaluationError, FitError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except PassTableError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
