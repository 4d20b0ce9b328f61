"""Command-line entry point ``qmeter``.

Exit status is 0 on success, 2 for configuration or input errors and 3 for
numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .classify import classify_mean_distribution
from .config import ConfigError, ExperimentConfig
from .report import TABLES, formula_table, parse_ranges
from .runner import _jsonable, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
DEFAULT_OUT = "qmeter-out"
SAMPLE_COLUMNS = ("y", "y_mean", "value", "sample", "samples")


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    # argparse exits with status 2 on usage errors, the config-error code
    p = argparse.ArgumentParser(prog="qmeter", description="Quantum measurement and cloning experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by a JSON config")
    run.add_argument("--config", required=True, help="path of the JSON experiment config")
    run.add_argument("--seed", type=_u64, help="override the config seed")
    run.add_argument("--out", help=f"output directory (default: config 'out' or ./{DEFAULT_OUT})")
    run.add_argument("--workers", type=_positive, help="worker processes (results do not depend on it)")

    cl = sub.add_parser("classify", help="classify a sample of single-copy averages")
    cl.add_argument("--samples", required=True, help="CSV file of samples")
    cl.add_argument("--eigenvalues", help="comma-separated eigenvalues s1,s2,...")
    cl.add_argument("--true-mean", type=float, help="expectation value to test centring against")
    cl.add_argument("--column", help="CSV column holding the samples")

    fm = sub.add_parser("formulas", help="tabulate cloning fidelity formulas")
    fm.add_argument("--table", required=True, choices=sorted(TABLES))
    fm.add_argument("--ranges", required=True, help="inclusive ranges such as n=1:3,m=1:10,d=2:4")
    return p


def _read_samples(path: str, column: str | None) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise ConfigError("--samples", f"cannot read {path}: {exc.strerror}") from exc
    if not rows:
        raise ConfigError("--samples", "file is empty")
    try:
        [float(x) for x in rows[0]]
        header = None
    except ValueError:
        header, rows = rows[0], rows[1:]
    if header is None:
        if column is not None:
            raise ConfigError("--column", "the samples file has no header row")
        idx = 0
    elif column is not None:
        if column not in header:
            raise ConfigError("--column", f"no column {column!r} in {', '.join(header)}")
        idx = header.index(column)
    else:
        known = [c for c in SAMPLE_COLUMNS if c in header]
        if known:
            idx = header.index(known[0])
        elif len(header) == 1:
            idx = 0
        else:
            raise ConfigError("--column", "several columns present; choose one with --column")
    try:
        return np.array([float(r[idx]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise ConfigError("--samples", f"non-numeric or missing sample: {exc}") from exc


def _parse_eigenvalues(text: str | None):
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("--eigenvalues", f"cannot parse {text!r}") from None


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    out = args.out or cfg.out or DEFAULT_OUT
    summary = run_experiment(cfg, out_dir=out, workers=args.workers)
    report = summary.to_dict(include_runtime=True)
    report["outputs"] = summary.outputs
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _cmd_classify(args) -> int:
    x = _read_samples(args.samples, args.column)
    ev = _parse_eigenvalues(args.eigenvalues)
    try:
        verdict = classify_mean_distribution(x, ev, args.true_mean)
    except ValueError as exc:
        raise ConfigError("--samples", str(exc)) from exc
    print(json.dumps(_jsonable(verdict.to_dict()), indent=2))
    return EXIT_OK


def _cmd_formulas(args) -> int:
    try:
        rows = formula_table(args.table, parse_ranges(args.ranges))
    except ValueError as exc:
        raise ConfigError("--ranges", str(exc)) from exc
    if not rows:
        raise ConfigError("--ranges", "no (N, M) pairs with 1 <= N <= M")
    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "classify": _cmd_classify, "formulas": _cmd_formulas}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"qmeter: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"qmeter: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # invalid physical parameters, e.g. an unnormalized state
        print(f"qmeter: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"qmeter: I/O failure: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
