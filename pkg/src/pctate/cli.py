"""Command-line entry point: ``pctate {estimate,did,simulate}``.

Settings come from built-in defaults, then an optional JSON ``--config``
document, then explicit flags; later sources win. Exit codes: 0 success,
2 input or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import __version__
from .data import read_panel, read_records
from .did import DEFAULT_WINDOW, estimate_did
from .errors import PctAteError, SchemaError
from .montecarlo import LARGE_RHO, SMALL_RHO, SimConfig, default_workers, run_experiment
from .pipeline import estimate_cross_section
from .report import EstimateRow, to_json, to_text

COMMON = {"config": None, "alpha": 0.05, "rho0": 0.0}
DEFAULTS = {
    "estimate": {
        **COMMON,
        "input": None,
        "output": None,
        "outcome": "y",
        "group": "group",
        "control": "control",
        "covariates": [],
        "cluster": None,
        "vcov": "HC0",
    },
    "did": {
        **COMMON,
        "input": None,
        "output": None,
        "unit": "unit",
        "time": "time",
        "cohort": "cohort",
        "outcome": "y",
        "covariates": [],
        "window": list(DEFAULT_WINDOW),
    },
    "simulate": {
        **COMMON,
        "output_dir": ".",
        "prefix": "simulation",
        "n_grid": [1000],
        "reps": 1000,
        "effects": "small",
        "rho_true": None,
        "weights": None,
        "p_s": 0.8,
        "errors": "normal",
        "seed": 20240101,
        "vcov": "HC0",
        "workers": None,
    },
}


def _common(p, with_input=True):
    p.add_argument("--config", help="JSON file with settings; flags override it")
    p.add_argument("--alpha", type=float, help="test size (default 0.05)")
    p.add_argument("--rho0", type=float, help="null value of the effect as a proportion (default 0)")
    if with_input:
        p.add_argument("input", nargs="?", help="CSV file with a header row")
        p.add_argument("-o", "--output", help="write the JSON report here and the text table next to it (.txt)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pctate",
        description="Average treatment effects in percentage points for semi-log models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", argument_default=argparse.SUPPRESS, help="cross-sectional semi-log regression")
    _common(est)
    est.add_argument("--outcome", help="positive outcome column (default y)")
    est.add_argument("--group", help="subgroup label column (default group)")
    est.add_argument("--control", help="label of untreated rows (default control)")
    est.add_argument("--covariates", nargs="*", help="numeric covariate columns")
    est.add_argument("--cluster", help="cluster id column; switches to CR1")
    est.add_argument("--vcov", choices=["HC0", "classical"], help="covariance estimator (default HC0)")

    did = sub.add_parser("did", argument_default=argparse.SUPPRESS, help="staggered difference-in-differences")
    _common(did)
    did.add_argument("--unit", help="unit id column (default unit)")
    did.add_argument("--time", help="integer period column (default time)")
    did.add_argument("--cohort", help="first treated period; blank for never treated (default cohort)")
    did.add_argument("--outcome", help="positive outcome column (default y)")
    did.add_argument("--covariates", nargs="*", help="time-varying numeric covariates")
    did.add_argument("--window", nargs=2, type=int, metavar=("RMIN", "RMAX"), help="event-time window (default -6 3)")

    sim = sub.add_parser("simulate", argument_default=argparse.SUPPRESS, help="Monte Carlo experiment")
    _common(sim, with_input=False)
    sim.add_argument("--output-dir", help="directory for the CSV and JSON tables (default .)")
    sim.add_argument("--prefix", help="file name stem (default simulation)")
    sim.add_argument("--n-grid", nargs="+", type=int, help="sample sizes (default 1000)")
    sim.add_argument("--reps", type=int, help="replications per sample size (default 1000)")
    sim.add_argument("--effects", choices=["small", "large"], help="preset subgroup effects (default small)")
    sim.add_argument("--rho-true", nargs="+", type=float, help="explicit subgroup effects; overrides --effects")
    sim.add_argument("--weights", nargs="+", type=float, help="population subgroup shares (default equal)")
    sim.add_argument("--p-s", type=float, help="probability of being treated (default 0.8)")
    sim.add_argument("--errors", choices=["normal", "skew_normal"], help="error distribution (default normal)")
    sim.add_argument("--seed", type=int, help="base seed (default 20240101)")
    sim.add_argument("--vcov", choices=["HC0", "classical"], help="covariance estimator (default HC0)")
    sim.add_argument("--workers", type=int, help="worker processes (default $PCTATE_WORKERS or 1)")
    return parser


def load_config(path, command) -> dict:
    """Read a JSON settings object and check its keys against ``command``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config {path} is not valid JSON: {exc.msg} (line {exc.lineno})") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"config {path} must hold a JSON object")
    allowed = DEFAULTS[command]
    out = {}
    for key, val in doc.items():
        name = key.replace("-", "_")
        if name == "command":
            if val != command:
                raise SchemaError(f"config is for command {val!r}, not {command!r}")
            continue
        if name not in allowed or name == "config":
            raise SchemaError(f"unknown config key {key!r} for {command}")
        out[name] = val
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags."""
    command = args.command
    flags = {k: v for k, v in vars(args).items() if k != "command"}
    settings = dict(DEFAULTS[command])
    if flags.get("config"):
        settings.update(load_config(flags["config"], command))
    settings.update(flags)
    _check_types(settings, command)
    return settings


def _check_types(s, command):
    def need(cond, key, what):
        if not cond:
            raise SchemaError(f"setting {key!r} must be {what}, got {s[key]!r}")

    num = (int, float)
    need(isinstance(s["alpha"], num) and 0 < s["alpha"] < 1, "alpha", "a number in (0, 1)")
    need(isinstance(s["rho0"], num) and s["rho0"] > -1, "rho0", "a number above -1")
    if command in ("estimate", "did"):
        need(isinstance(s["covariates"], list) and all(isinstance(c, str) for c in s["covariates"]),
             "covariates", "a list of column names")
    if command == "did":
        w = s["window"]
        need(isinstance(w, list) and len(w) == 2 and all(isinstance(v, int) for v in w) and w[0] <= 0 <= w[1],
             "window", "two integers bracketing 0")
    if command == "simulate":
        need(isinstance(s["n_grid"], list) and s["n_grid"] and all(isinstance(v, int) for v in s["n_grid"]),
             "n_grid", "a list of integers")
        need(isinstance(s["reps"], int) and s["reps"] >= 1, "reps", "a positive integer")
        need(isinstance(s["seed"], int) and s["seed"] >= 0, "seed", "a nonnegative integer")
        need(s["effects"] in ("small", "large"), "effects", "'small' or 'large'")
        need(s["errors"] in ("normal", "skew_normal"), "errors", "'normal' or 'skew_normal'")
        for key in ("rho_true", "weights"):
            need(s[key] is None or (isinstance(s[key], list) and all(isinstance(v, num) for v in s[key])),
                 key, "a list of numbers")
        need(s["workers"] is None or (isinstance(s["workers"], int) and s["workers"] >= 1),
             "workers", "a positive integer")
    if command in ("estimate", "simulate"):
        need(s["vcov"] in ("HC0", "classical"), "vcov", "'HC0' or 'classical'")


def _emit(rows, meta, output, title):
    text = to_text(rows, title)
    sys.stdout.write(text)
    if output:
        out = Path(output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(to_json(rows, meta), encoding="utf-8")
        out.with_suffix(".txt").write_text(text, encoding="utf-8")


def run_estimate(s) -> int:
    if not s["input"]:
        raise SchemaError("estimate needs an input CSV")
    frame = read_records(s["input"], s["outcome"], s["group"], s["covariates"], s["cluster"])
    row, effects, shares = estimate_cross_section(
        frame, s["outcome"], s["group"], s["covariates"], s["control"],
        cluster=s["cluster"], vcov=s["vcov"], alpha=s["alpha"], rho_0=s["rho0"],
    )
    meta = {
        "command": "estimate",
        "alpha": s["alpha"],
        "rho_0": s["rho0"],
        "cov_kind": effects.cov_kind,
        "groups": list(effects.labels),
        "group_counts": [int(c) for c in shares.group_counts],
    }
    _emit([row], meta, s["output"], "Estimates of the average effect in percentage points")
    return 0


def run_did(s) -> int:
    if not s["input"]:
        raise SchemaError("did needs an input CSV")
    panel = read_panel(s["input"], s["unit"], s["time"], s["cohort"], s["outcome"], s["covariates"])
    pdesign, effects, rows = estimate_did(panel, tuple(s["window"]), alpha=s["alpha"], rho_0=s["rho0"])
    out_rows = [
        EstimateRow(r.panel, r.label, len(r.cells), r.n_obs, r.point, r.inference) for r in rows
    ]
    meta = {
        "command": "did",
        "alpha": s["alpha"],
        "rho_0": s["rho0"],
        "window": list(pdesign.window),
        "n_units": pdesign.n_units,
        "cells": [
            {"cohort": c.cohort, "event_time": c.event_time, "n_obs": int(n),
             "tau": float(t), "se": float(v) ** 0.5}
            for c, n, t, v in zip(pdesign.cells, pdesign.cell_counts, effects.tau_hat, effects.variances)
        ],
        "notes": list(pdesign.notes),
    }
    _emit(out_rows, meta, s["output"], "Staggered DiD: effects in percentage points")
    return 0


def run_simulate(s) -> int:
    rho = s["rho_true"] or list(LARGE_RHO if s["effects"] == "large" else SMALL_RHO)
    config = SimConfig(
        N=s["n_grid"][0],
        reps=s["reps"],
        rho_true=tuple(rho),
        p_S=s["p_s"],
        w_true=tuple(s["weights"]) if s["weights"] else None,
        error_kind=s["errors"],
        base_seed=s["seed"],
        alpha=s["alpha"],
        vcov=s["vcov"],
    )
    workers = s["workers"] or default_workers()
    table = run_experiment(config, s["n_grid"], workers=workers)
    out = Path(s["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    csv_text = table.to_csv()
    (out / f"{s['prefix']}.csv").write_text(csv_text, encoding="utf-8")
    (out / f"{s['prefix']}.json").write_text(table.to_json() + "\n", encoding="utf-8")
    sys.stdout.write(csv_text)
    return 0


COMMANDS = {"estimate": run_estimate, "did": run_did, "simulate": run_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        settings = resolve(args)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](settings)
    except PctAteError as exc:
        print(f"pctate: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"pctate: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
