"""Command-line front end: CSV screening, Monte-Carlo simulation, KM curves.

Exit codes: 0 success, 2 input or validation error, 3 requested quantile not
identifiable from the (censored) sample.  Flag values override config-file
values, which override built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import survival
from .evaluation import format_table, report_to_json, run_benchmark
from .screening import METHODS, ScreeningConfig, screen
from .simulate import EXAMPLE_IDS
from .survival import UnreachableQuantileError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


class InputError(Exception):
    pass


def read_table(path: str) -> tuple[list[str], np.ndarray]:
    """Parse a numeric CSV with a header row; report offending line numbers."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise InputError(f"{path}: empty file")
        names = [h.strip() for h in header]
        rows: list[list[float]] = []
        errors: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                errors.append(f"line {lineno}: expected {len(names)} fields, got {len(row)}")
                continue
            vals = []
            for name, item in zip(names, row):
                try:
                    v = float(item)
                except ValueError:
                    errors.append(f"line {lineno}: field {name!r} value {item!r} is not numeric")
                    break
                if not math.isfinite(v):
                    errors.append(f"line {lineno}: field {name!r} value {item!r} is not finite")
                    break
                vals.append(v)
            else:
                rows.append(vals)
            if len(errors) >= 20:
                break
        if errors:
            raise InputError(f"{path}:\n  " + "\n  ".join(errors))
        if not rows:
            raise InputError(f"{path}: no data rows")
    return names, np.asarray(rows, dtype=float)


def _split_columns(names, data, response: str, status: str | None):
    if response not in names:
        raise InputError(f"response column {response!r} not found; columns: {names}")
    drop = {names.index(response)}
    y = data[:, names.index(response)]
    st = None
    if status is not None:
        if status not in names:
            raise InputError(f"status column {status!r} not found; columns: {names}")
        j = names.index(status)
        st = data[:, j]
        bad = np.flatnonzero(~np.isin(st, (0.0, 1.0)))
        if bad.size:
            raise InputError(
                f"status column {status!r} must be 0/1; offending line {bad[0] + 2}"
            )
        st = st.astype(int)
        drop.add(j)
    keep = [j for j in range(len(names)) if j not in drop]
    return [names[j] for j in keep], data[:, keep], y, st


def _parse_int_or_auto(value, flag: str) -> int | None:
    if value in (None, "auto"):
        return None
    try:
        return int(value)
    except (TypeError, ValueError):
        raise InputError(f"--{flag} must be an integer or 'auto', got {value!r}") from None


def _parse_alphas(value) -> list[float]:
    if isinstance(value, (int, float)):
        return [float(value)]
    try:
        alphas = [float(tok) for tok in str(value).split(",") if tok.strip()]
    except ValueError:
        raise InputError(f"--alpha expects a comma-separated list of levels, got {value!r}") from None
    if not alphas:
        raise InputError("--alpha needs at least one level")
    return alphas


def _merge_options(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicitly passed flags."""
    merged = dict(defaults)
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        try:
            with open(cfg_path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {cfg_path}: {exc}") from exc
        unknown = set(cfg) - set(defaults)
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        merged.update(cfg)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _screening_config(opts, alpha: float, method: str) -> ScreeningConfig:
    try:
        return ScreeningConfig(
            alpha=alpha,
            method=method,
            num_basis=_parse_int_or_auto(opts["basis"], "basis"),
            degree=opts["degree"],
            keep=_parse_int_or_auto(opts["keep"], "keep"),
            threshold=opts["threshold"],
            g_min=opts["gmin"],
            kernel=opts["kernel"],
            bandwidth=opts["bandwidth"],
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc


SCREEN_DEFAULTS = {
    "alpha": "0.5",
    "method": "qasis",
    "basis": "auto",
    "degree": None,
    "keep": "auto",
    "threshold": None,
    "gmin": survival.DEFAULT_G_MIN,
    "kernel": "epanechnikov",
    "bandwidth": None,
    "threads": 1,
    "output": None,
}


def cmd_screen(args) -> int:
    opts = _merge_options(args, SCREEN_DEFAULTS)
    names, data = read_table(args.input)
    if args.response is None:
        raise InputError("--response is required for screen")
    feature_names, X, y, status = _split_columns(names, data, args.response, args.status)
    alphas = _parse_alphas(opts["alpha"])
    method = str(opts["method"])
    if "," in method:
        raise InputError("screen takes a single --method; run once per method")
    if method not in METHODS:
        raise InputError(f"unknown method {method!r}; choose from {METHODS}")

    results = []
    for alpha in alphas:
        config = _screening_config(opts, alpha, method)
        try:
            results.append(screen(X, y, config, status=status))
        except UnreachableQuantileError:
            raise
        except ValueError as exc:
            raise InputError(str(exc)) from exc

    out_rows = [["feature_name", "utility", "rank", "selected", "status_flag"]]
    if len(alphas) > 1:
        out_rows[0].insert(0, "alpha")
    for alpha, res in zip(alphas, results):
        rank_of = np.empty(len(feature_names), dtype=int)
        rank_of[res.ranking] = np.arange(1, len(feature_names) + 1)
        sel = res.selected_mask
        for j, name in enumerate(feature_names):
            row = [name, repr(float(res.utilities[j])), str(rank_of[j]), str(int(sel[j])), res.flags[j]]
            if len(alphas) > 1:
                row.insert(0, f"{alpha:g}")
            out_rows.append(row)

    dest = opts["output"]
    _write_csv(out_rows, dest)
    report = sys.stdout if dest else sys.stderr
    for alpha, res in zip(alphas, results):
        top = ", ".join(feature_names[j] for j in res.ranking[:10])
        print(
            f"screen: method={method} alpha={alpha:g} n={X.shape[0]} p={X.shape[1]} "
            f"keep={res.keep} center={res.center:.6g}\n  top features: {top}",
            file=report,
        )
    return EXIT_OK


def _write_csv(rows, dest: str | None) -> None:
    if dest:
        with open(dest, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
    else:
        csv.writer(sys.stdout).writerows(rows)


SIMULATE_DEFAULTS = {
    "alpha": "0.5",
    "methods": None,
    "reps": 100,
    "seed": 0,
    "threads": 1,
    "n": None,
    "p": None,
    "basis": "auto",
    "degree": None,
    "keep": "auto",
    "threshold": None,
    "gmin": survival.DEFAULT_G_MIN,
    "kernel": "epanechnikov",
    "bandwidth": None,
    "output": None,
}


def cmd_simulate(args) -> int:
    opts = _merge_options(args, SIMULATE_DEFAULTS)
    example = args.example
    if example not in EXAMPLE_IDS:
        raise InputError(f"unknown example {example!r}; choose from {EXAMPLE_IDS}")
    if opts["methods"] is None:
        raise InputError("--methods is required for simulate")
    methods = [m.strip() for m in str(opts["methods"]).split(",") if m.strip()]
    alphas = _parse_alphas(opts["alpha"])
    overrides = {}
    if _parse_int_or_auto(opts["basis"], "basis") is not None:
        overrides["num_basis"] = _parse_int_or_auto(opts["basis"], "basis")
    if opts["degree"] is not None:
        overrides["degree"] = opts["degree"]
    if _parse_int_or_auto(opts["keep"], "keep") is not None:
        overrides["keep"] = _parse_int_or_auto(opts["keep"], "keep")
    if opts["threshold"] is not None:
        overrides["threshold"] = opts["threshold"]
    if opts["gmin"] != survival.DEFAULT_G_MIN:
        overrides["g_min"] = opts["gmin"]
    if opts["kernel"] != "epanechnikov":
        overrides["kernel"] = opts["kernel"]
    if opts["bandwidth"] is not None:
        overrides["bandwidth"] = opts["bandwidth"]

    try:
        report = run_benchmark(
            example,
            methods,
            alphas,
            reps=int(opts["reps"]),
            master_seed=int(opts["seed"]),
            n=opts["n"],
            p=opts["p"],
            workers=max(1, int(opts["threads"])),
            config_overrides=overrides,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    print(format_table(report))
    doc = report_to_json(report)
    if opts["output"]:
        with open(opts["output"], "w") as fh:
            fh.write(doc + "\n")
    else:
        print(doc)
    return EXIT_OK


KM_DEFAULTS = {"target": "event", "output": None}


def cmd_km(args) -> int:
    opts = _merge_options(args, KM_DEFAULTS)
    names, data = read_table(args.input)
    if args.response is None:
        raise InputError("--response is required for km")
    _, _, y, status = _split_columns(names, data, args.response, args.status)
    if status is None:
        status = np.ones(y.shape[0], dtype=int)
    target = {"event": survival.EVENT, "censoring": survival.CENSORING}.get(opts["target"])
    if target is None:
        raise InputError(f"--target must be 'event' or 'censoring', got {opts['target']!r}")
    curve = survival.fit_km(y, status, target)
    rows = [["t", "survival"]]
    rows += [[repr(float(t)), repr(float(s))] for t, s in zip(curve.jump_times, curve.survival_values)]
    _write_csv(rows, opts["output"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qascreen",
        description="Quantile-adaptive model-free variable screening",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_model=True):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--output", help="output file path")
        if with_model:
            p.add_argument("--alpha", "--alphas", dest="alpha", help="comma-separated quantile levels")
            p.add_argument("--basis", help="number of basis functions or 'auto'")
            p.add_argument("--degree", type=int, help="spline degree")
            p.add_argument("--keep", help="how many features to keep, or 'auto'")
            p.add_argument("--threshold", type=float, help="utility threshold overriding --keep")
            p.add_argument("--gmin", type=float, help="floor for censoring survival in IPW weights")
            p.add_argument("--kernel", choices=["epanechnikov", "gaussian", "uniform"])
            p.add_argument("--bandwidth", type=float, help="kernel bandwidth for the local method")
            p.add_argument("--threads", type=int, help="worker process cap")

    ps = sub.add_parser("screen", help="rank features of a CSV data set")
    ps.add_argument("--input", required=True)
    ps.add_argument("--response", help="response column name")
    ps.add_argument("--status", help="0/1 event column name for censored data")
    ps.add_argument("--method", "--methods", dest="method", help="screening method")
    add_common(ps)
    ps.set_defaults(func=cmd_screen)

    pm = sub.add_parser("simulate", help="run a Monte-Carlo benchmark example")
    pm.add_argument("--example", required=True, help=f"one of {', '.join(EXAMPLE_IDS)}")
    pm.add_argument("--methods", "--method", dest="methods", help="comma-separated methods")
    pm.add_argument("--reps", type=int, help="number of replications")
    pm.add_argument("--seed", type=int, help="master seed")
    pm.add_argument("--n", type=int, help="override sample size")
    pm.add_argument("--p", type=int, help="override feature count")
    add_common(pm)
    pm.set_defaults(func=cmd_simulate)

    pk = sub.add_parser("km", help="Kaplan-Meier curve of a CSV data set")
    pk.add_argument("--input", required=True)
    pk.add_argument("--response", help="time column name")
    pk.add_argument("--status", help="0/1 event column name")
    pk.add_argument("--target", choices=["event", "censoring"])
    add_common(pk, with_model=False)
    pk.set_defaults(func=cmd_km)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnreachableQuantileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
