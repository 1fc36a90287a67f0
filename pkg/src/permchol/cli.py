"""Command-line entry point: simulate benchmarks, estimate from CSV, classify.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
All commands honor --seed and write JSON reports that are byte-identical
across runs except for the wall-clock duration field.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .baselines import estimate_ave, estimate_bic_order
from .ensemble import estimate_m1, estimate_m2
from .errors import IngestionError, NumericalError
from .lda import lda_predict_rows, lda_train, misclassification_error
from .mcd import Method
from .simulation import LOSS_NAMES, ExperimentConfig, ModelSpec, run_experiment

SIM_METHODS = ("m1", "m2", "ave", "bic")
CLASSIFY_ESTIMATORS = {
    "m1": Method.M1,
    "m2": Method.M2,
    "ave": Method.AVE,
    "bic": Method.BIC_ORDER,
    "dlda": Method.DIAGONAL,
}


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("PERMCHOL_THREADS", "1")))
    except ValueError:
        return 1


def read_numeric_csv(path: str, header: bool = False):
    """Read a CSV of observations (rows) by variables (columns).

    Returns (column names or None, float matrix).  Raises IngestionError
    naming the offending row/column (1-based, counting the header line).
    """
    names = None
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader, start=1):
            if not record or all(cell.strip() == "" for cell in record):
                continue
            if header and names is None:
                names = [cell.strip() for cell in record]
                continue
            rows.append((lineno, record))
    if not rows:
        raise IngestionError(f"{path}: no data rows")
    width = len(rows[0][1])
    data = np.empty((len(rows), width))
    for i, (lineno, record) in enumerate(rows):
        if len(record) != width:
            raise IngestionError(
                f"{path}: row {lineno}: expected {width} fields, found {len(record)}"
            )
        for j, cell in enumerate(record):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise IngestionError(
                    f"{path}: row {lineno}, column {j + 1}: not a number: {cell.strip()!r}"
                ) from None
    if names is not None and len(names) != width:
        raise IngestionError(
            f"{path}: header has {len(names)} fields but rows have {width}"
        )
    return names, data


def read_labeled_csv(path: str, label_col: str, header: bool):
    """Read a CSV with one label column; features parsed as floats,
    labels kept as strings.  Returns (X, labels, feature names or None)."""
    names = None
    raw = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader, start=1):
            if not record or all(cell.strip() == "" for cell in record):
                continue
            if header and names is None:
                names = [cell.strip() for cell in record]
                continue
            raw.append((lineno, record))
    if not raw:
        raise IngestionError(f"{path}: no data rows")
    width = len(raw[0][1])

    try:
        idx = int(label_col)
    except ValueError:
        if names is None:
            raise IngestionError(
                f"label column {label_col!r} needs --header to resolve by name"
            ) from None
        if label_col not in names:
            raise IngestionError(f"{path}: label column {label_col!r} not found") from None
        idx = names.index(label_col)
    if idx < 0:
        idx += width
    if not 0 <= idx < width:
        raise IngestionError(f"{path}: label column index {label_col} out of range")

    labels = []
    data = np.empty((len(raw), width - 1))
    for i, (lineno, record) in enumerate(raw):
        if len(record) != width:
            raise IngestionError(
                f"{path}: row {lineno}: expected {width} fields, found {len(record)}"
            )
        labels.append(record[idx].strip())
        col = 0
        for j, cell in enumerate(record):
            if j == idx:
                continue
            try:
                data[i, col] = float(cell)
            except ValueError:
                raise IngestionError(
                    f"{path}: row {lineno}, column {j + 1}: not a number: {cell.strip()!r}"
                ) from None
            col += 1
    feature_names = None
    if names is not None:
        feature_names = [nm for j, nm in enumerate(names) if j != idx]
    return data, np.array(labels), feature_names


def _write_json(path: str, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def cmd_simulate(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    bad = [m for m in methods if m not in SIM_METHODS]
    if not methods or bad:
        raise ValueError(f"--methods must be a comma list from {SIM_METHODS}, got {args.methods!r}")
    cfg = ExperimentConfig(
        model=ModelSpec(id=args.model, p=args.p, perm_seed=args.perm_seed),
        n=args.n,
        reps=args.reps,
        m=args.M,
        methods=methods,
        seed=args.seed,
        threads=args.threads,
    )
    t0 = time.perf_counter()
    report = run_experiment(cfg)
    duration = time.perf_counter() - t0

    payload = report.to_dict()
    payload.update(
        command="simulate",
        version=__version__,
        seed=args.seed,
        duration_seconds=duration,
    )
    _write_json(args.out, payload)
    _print_table(report)
    return 0


def _print_table(report):
    col = 18
    print("method".ljust(8) + "".join(name.rjust(col) for name in LOSS_NAMES))
    for meth, losses in report.results.items():
        cells = []
        for name in LOSS_NAMES:
            mean, se = losses[name]
            if mean is None:
                cells.append("-".rjust(col))
            elif se is None:
                cells.append(f"{mean:.4f}".rjust(col))
            else:
                cells.append(f"{mean:.4f} ({se:.4f})".rjust(col))
        print(meth.ljust(8) + "".join(cells))
        if report.failures.get(meth):
            print(f"  ({meth}: {report.failures[meth]} failed reps excluded)")


def cmd_estimate(args) -> int:
    _, data = read_numeric_csv(args.input, header=args.header)
    x = data - data.mean(axis=0)
    t0 = time.perf_counter()
    if args.method == "m1":
        est = estimate_m1(x, args.M, args.seed)
    elif args.method == "m2":
        est = estimate_m2(x, args.M, args.seed)
    elif args.method == "ave":
        est = estimate_ave(x, args.M, args.seed)
    else:
        est = estimate_bic_order(x)
    duration = time.perf_counter() - t0

    omega = est.omega
    p = omega.shape[0]
    off_nonzero = int(np.count_nonzero(omega) - np.count_nonzero(np.diag(omega)))
    payload = {
        "command": "estimate",
        "version": __version__,
        "config": {
            "input": args.input,
            "method": args.method,
            "M": args.M,
            "seed": args.seed,
            "header": args.header,
        },
        "p": p,
        "method": args.method,
        "delta_opt": est.delta if args.method == "m2" else None,
        "nonzero_offdiag_count": off_nonzero,
        "omega": omega.tolist(),
        "duration_seconds": duration,
    }
    _write_json(args.out, payload)
    print(f"estimated {p}x{p} precision matrix ({args.method}), "
          f"{off_nonzero} nonzero off-diagonal entries -> {args.out}")
    return 0


def cmd_classify(args) -> int:
    if args.screen_top is not None and args.screen_top < 1:
        raise ValueError("--screen-top must be >= 1")
    x_train, y_train, _ = read_labeled_csv(args.train, args.label_col, args.header)
    x_test, y_test, _ = read_labeled_csv(args.test, args.label_col, args.header)
    if x_test.shape[1] != x_train.shape[1]:
        raise IngestionError(
            f"test data has {x_test.shape[1]} feature columns, train has {x_train.shape[1]}"
        )

    t0 = time.perf_counter()
    model = lda_train(
        x_train,
        y_train,
        CLASSIFY_ESTIMATORS[args.estimator],
        m=args.M,
        seed=args.seed,
        screen_top=args.screen_top,
    )
    unseen = sorted(set(y_test) - set(model.classes.tolist()))
    if unseen:
        raise IngestionError(f"test labels not present in training data: {unseen}")
    count, rate = misclassification_error(model, x_test, y_test)
    duration = time.perf_counter() - t0

    pred = lda_predict_rows(model, x_test)
    class_index = {c: i for i, c in enumerate(model.classes.tolist())}
    k = len(model.classes)
    confusion = [[0] * k for _ in range(k)]
    for truth, guess in zip(y_test.tolist(), pred.tolist()):
        confusion[class_index[truth]][class_index[guess]] += 1

    payload = {
        "command": "classify",
        "version": __version__,
        "config": {
            "train": args.train,
            "test": args.test,
            "label_col": args.label_col,
            "estimator": args.estimator,
            "screen_top": args.screen_top,
            "M": args.M,
            "seed": args.seed,
            "header": args.header,
        },
        "classes": model.classes.tolist(),
        "selected_variables": model.selected.tolist(),
        "error_count": count,
        "error_rate": rate,
        "confusion": confusion,
        "duration_seconds": duration,
    }
    _write_json(args.out, payload)
    print(f"classified {x_test.shape[0]} rows: {count} errors (rate {rate:.4f}) -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permchol",
        description="Order-invariant sparse precision matrix estimation and LDA",
    )
    parser.add_argument("--version", action="version", version=f"permchol {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte-Carlo benchmark against a known model")
    sim.add_argument("--model", type=int, required=True, choices=range(1, 7))
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--reps", type=int, default=50)
    sim.add_argument("--M", type=int, default=100)
    sim.add_argument("--methods", default="m1,m2", help="comma list from m1,m2,ave,bic")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--perm-seed", type=int, default=0, help="model 2 truth permutation seed")
    sim.add_argument("--threads", type=int, default=_default_threads())
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="estimate a precision matrix from CSV data")
    est.add_argument("--input", required=True)
    est.add_argument("--method", required=True, choices=["m1", "m2", "ave", "bic"])
    est.add_argument("--M", type=int, default=100)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--header", action="store_true", help="first CSV row is a header")
    est.add_argument("--threads", type=int, default=_default_threads())
    est.add_argument("--out", required=True)
    est.set_defaults(func=cmd_estimate)

    cls = sub.add_parser("classify", help="train LDA on one CSV and score another")
    cls.add_argument("--train", required=True)
    cls.add_argument("--test", required=True)
    cls.add_argument("--label-col", required=True, help="label column name (with --header) or index")
    cls.add_argument("--estimator", required=True, choices=sorted(CLASSIFY_ESTIMATORS))
    cls.add_argument("--screen-top", type=int, default=None)
    cls.add_argument("--M", type=int, default=100)
    cls.add_argument("--seed", type=int, default=0)
    cls.add_argument("--header", action="store_true")
    cls.add_argument("--threads", type=int, default=_default_threads())
    cls.add_argument("--out", required=True)
    cls.set_defaults(func=cmd_classify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IngestionError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
