"""Command-line interface.

Subcommands::

    confset simulate    write a synthetic training set + labeled test batch
    confset predict     score a test CSV against a training CSV
    confset evaluate    score prediction sets against known truth
    confset experiment  run a replicated grid experiment from a YAML config
    confset validate    run Monte Carlo checks of the statistical guarantees

Exit codes: 0 success, 2 usage error, 3 data/validation error,
4 one or more validate checks failed.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .conformal import predict
from .core import DataError, OracleParams
from .datagen import (
    DEFAULT_ATOM_SEED,
    generate,
    multi_class_config,
    one_class_config,
    oracle_params,
)
from .experiment import run_experiment
from .io import (
    load_config,
    load_csv,
    load_json,
    read_batch_csv,
    read_sets_csv,
    render_results,
    save_json,
    write_batch_csv,
    write_dataset_csv,
    write_results,
    write_pvalues_csv,
    write_sets_csv,
    write_thresholds_csv,
)
from .metrics import evaluate_sets
from .validation import CHECKS, run_checks

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_DATA = 3
EXIT_CHECK = 4


def _default_workers() -> int:
    return int(os.environ.get("CONFSET_WORKERS", "1"))


def _add_simulate(sub):
    p = sub.add_parser(
        "simulate", help="generate a synthetic dataset and test batch as CSV"
    )
    p.add_argument(
        "--scenario",
        choices=["one_class", "multi_class", "one", "multi"],
        default="multi_class",
        help="'one'/'multi' are accepted shorthands",
    )
    p.add_argument("--p", type=int, default=500, help="feature dimension")
    p.add_argument("--nk", type=int, default=500, help="training rows per class")
    p.add_argument("--m", type=int, default=1000, help="test batch size")
    p.add_argument("--rho", type=float, default=0.0, help="serial correlation")
    p.add_argument("--inlier-ratio", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0, help="stream seed for the draws")
    p.add_argument("--atom-seed", type=int, default=DEFAULT_ATOM_SEED)
    p.add_argument(
        "--out",
        required=True,
        metavar="PREFIX",
        help="writes PREFIX_train.csv, PREFIX_test.csv, PREFIX_oracle.json",
    )
    p.set_defaults(func=cmd_simulate)


def cmd_simulate(args) -> int:
    scenario = {"one": "one_class", "multi": "multi_class"}.get(
        args.scenario, args.scenario
    )
    maker = one_class_config if scenario == "one_class" else multi_class_config
    config = maker(
        p=args.p,
        n_k=args.nk,
        rho=args.rho,
        m=args.m,
        inlier_ratio=args.inlier_ratio,
        atom_seed=args.atom_seed,
        run_seed=args.seed,
    )
    train, test = generate(config)
    write_dataset_csv(f"{args.out}_train.csv", train)
    write_batch_csv(f"{args.out}_test.csv", test)
    save_json(oracle_params(config), f"{args.out}_oracle.json")
    n_out = int(np.sum(test.truth == config.n_classes + 1))
    print(
        f"{scenario}: {train.n} training rows over {train.n_classes} classes, "
        f"p={train.n_features}"
    )
    print(f"test batch: {test.m} rows ({test.m - n_out} inliers, {n_out} outliers)")
    print(f"wrote {args.out}_train.csv, {args.out}_test.csv, {args.out}_oracle.json")
    return EXIT_OK


def _add_predict(sub):
    p = sub.add_parser(
        "predict", help="compute p-values and prediction sets for a test CSV"
    )
    p.add_argument("--train", required=True, help="training CSV")
    p.add_argument("--label-column", default="label")
    p.add_argument(
        "--outlier-label",
        default=None,
        help="training rows with this label are excluded from fitting",
    )
    p.add_argument("--test", required=True, help="test CSV")
    p.add_argument(
        "--truth-column",
        default=None,
        help="optional truth column in the test CSV, ignored for prediction",
    )
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--mode", choices=["empirical", "oracle"], default="empirical")
    p.add_argument(
        "--oracle-params",
        default=None,
        help="JSON file with known class parameters (required for --mode oracle)",
    )
    p.add_argument("--variance-floor", type=float, default=None)
    p.add_argument(
        "--out",
        required=True,
        metavar="PREFIX",
        help="writes PREFIX_pvalues.csv, PREFIX_sets.csv, PREFIX_thresholds.csv",
    )
    p.set_defaults(func=cmd_predict)


def cmd_predict(args) -> int:
    loaded = load_csv(args.train, args.label_column, outlier_label=args.outlier_label)
    if args.outlier_label is None:
        data, label_map = loaded
    else:
        data, dropped, label_map = loaded
        if dropped is not None:
            print(
                f"note: {dropped.m} rows labeled {args.outlier_label!r} "
                "excluded from fitting"
            )
    batch = read_batch_csv(
        args.test,
        truth_column=args.truth_column,
        label_map=label_map if args.truth_column else None,
        outlier_label=args.outlier_label,
    )
    oracle = None
    if args.mode == "oracle":
        if not args.oracle_params:
            raise DataError("--mode oracle requires --oracle-params")
        oracle = load_json(args.oracle_params)
        if not isinstance(oracle, OracleParams):
            raise DataError(f"{args.oracle_params}: not a known-parameters file")
        if oracle.means.shape != (data.n_classes, data.n_features):
            raise DataError(
                f"oracle parameters are for {oracle.means.shape[0]} classes x "
                f"{oracle.means.shape[1]} features; data has "
                f"{data.n_classes} x {data.n_features}"
            )
    pvals, sets = predict(
        data, batch, args.alpha, oracle=oracle, variance_floor=args.variance_floor
    )
    write_pvalues_csv(f"{args.out}_pvalues.csv", pvals)
    write_sets_csv(f"{args.out}_sets.csv", sets)
    write_thresholds_csv(f"{args.out}_thresholds.csv", pvals)
    sizes = sets.sizes
    print(
        f"predicted {sets.m} rows over {sets.n_classes} classes at "
        f"alpha={args.alpha:g} ({args.mode})"
    )
    print(
        f"sets: {int(np.sum(sizes == 0))} empty (flagged outliers), "
        f"{int(np.sum(sizes == 1))} singletons, mean size {sizes.mean():.3f}"
    )
    print(f"wrote {args.out}_pvalues.csv, {args.out}_sets.csv, {args.out}_thresholds.csv")
    return EXIT_OK


def _add_evaluate(sub):
    p = sub.add_parser(
        "evaluate", help="compute error/power metrics for prediction sets"
    )
    p.add_argument("--sets", required=True, help="prediction-sets CSV from predict")
    p.add_argument("--test", required=True, help="test CSV holding the truth column")
    p.add_argument("--truth-column", default="truth")
    p.add_argument(
        "--n-classes", type=int, required=True, help="number of training classes"
    )
    p.add_argument("--out", default=None, help="optional results CSV path")
    p.set_defaults(func=cmd_evaluate)


def cmd_evaluate(args) -> int:
    sets = read_sets_csv(args.sets, args.n_classes)
    batch = read_batch_csv(args.test, truth_column=args.truth_column)
    if batch.truth is None or batch.m != sets.m:
        raise DataError(
            f"{args.sets} has {sets.m} rows but {args.test} has {batch.m}"
        )
    report = evaluate_sets(sets, batch.truth)
    if args.out:
        print(write_results([report], args.out), end="")
        print(f"wrote {args.out}")
    else:
        print(render_results([report]), end="")
    return EXIT_OK


def _add_experiment(sub):
    p = sub.add_parser(
        "experiment", help="run a replicated grid experiment from a YAML config"
    )
    p.add_argument("--config", required=True, help="YAML experiment config")
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--out-dir", default=None, help="override the config out_dir")
    p.add_argument(
        "--mode",
        choices=["empirical", "oracle", "both"],
        default=None,
        help="override the config mode",
    )
    p.set_defaults(func=cmd_experiment)


def cmd_experiment(args) -> int:
    config = load_config(args.config)
    if args.out_dir:
        config = replace(config, out_dir=args.out_dir)
    if args.mode:
        config = replace(config, mode=args.mode)
    run_experiment(config, workers=args.workers, echo=print)
    return EXIT_OK


def _add_validate(sub):
    p = sub.add_parser(
        "validate", help="Monte Carlo checks of the statistical guarantees"
    )
    p.add_argument(
        "--check",
        action="append",
        default=None,
        metavar="NAME",
        help=f"check(s) to run, comma-separable; available: {', '.join(sorted(CHECKS))}",
    )
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--nk", type=int, default=None, help="training rows per class")
    p.add_argument("--p", type=int, default=None, help="feature dimension")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--draws", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--test-sets", type=int, default=None)
    p.set_defaults(func=cmd_validate)


def cmd_validate(args) -> int:
    names = None
    if args.check:
        names = [n for chunk in args.check for n in chunk.split(",") if n]
    overrides = {}
    for flag, keys in (
        ("seed", ("seed",)),
        ("alpha", ("alpha",)),
        ("nk", ("n_k",)),
        ("p", ("p",)),
        ("rho", ("rho",)),
        ("draws", ("n_draws", "draws")),
        ("trials", ("trials",)),
        ("replicates", ("replicates",)),
        ("test_sets", ("test_sets",)),
    ):
        value = getattr(args, flag)
        if value is not None:
            for key in keys:
                overrides[key] = value
    results = run_checks(names, echo=print, **overrides)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="confset",
        description=(
            "Set-valued classification with simultaneous outlier detection "
            "via conformal p-values and per-class FDR control."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_simulate(sub)
    _add_predict(sub)
    _add_evaluate(sub)
    _add_experiment(sub)
    _add_validate(sub)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
