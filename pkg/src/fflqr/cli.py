"""Command-line interface: simulate, fit, predict, interval, benchmark.

Every command writes its outputs plus a ``manifest.json`` recording the
resolved configuration and seed, so any run can be reproduced from its
output directory alone. Exit codes: 0 success, 2 configuration error,
3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bands import bootstrap_band, direct_band, write_band_csv
from .errors import ConfigError, DataError, NumericalError
from .fdata import read_sample_csv, write_sample_csv
from .model import (
    FflqrFit,
    fit_fflqr,
    load_model,
    predict,
    save_model,
    score_objective,
)
from .selection import (
    SelectionResult,
    forward_select,
    select_truncation,
    write_trace_csv,
)
from .simulate import (
    ALL_METHODS,
    ALL_MODELS,
    SimConfig,
    generate_dataset,
    run_monte_carlo,
    write_results_csv,
)

_METRICS = ("mspe", "cpd", "score")


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def _out_dir(path_str: str) -> Path:
    out = Path(path_str)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out, command, config, inputs, outputs, seed, started):
    doc = {
        "command": command,
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "master_seed": seed,
        "version": __version__,
        "started": started,
        "finished": _now(),
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


def _load_config(args) -> SimConfig:
    d = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config JSON must be an object of field values")
        d.update(loaded)
    overrides = {
        "seed": "master_seed",
        "n_train": "n_train",
        "n_test": "n_test",
        "replicates": "n_replicates",
        "sigma": "sigma",
        "error_dist": "error_dist",
        "contamination": "contamination_rate",
        "tau": "tau",
    }
    for flag, name in overrides.items():
        value = getattr(args, flag, None)
        if value is not None:
            d[name] = value
    return SimConfig.from_dict(d)


def _read_samples(y_path, x_paths):
    Y = read_sample_csv(y_path)
    X = [read_sample_csv(p) for p in x_paths]
    for p, x in zip(x_paths, X):
        if x.n != Y.n:
            raise DataError(
                f"{p} holds {x.n} curves but {y_path} holds {Y.n}"
            )
    return Y, X


def cmd_simulate(args) -> int:
    started = _now()
    config = _load_config(args)
    out = _out_dir(args.out)
    data = generate_dataset(config, np.random.SeedSequence(config.master_seed))

    outputs = []

    def dump(sample, name):
        path = out / name
        write_sample_csv(sample, path)
        outputs.append(name)

    dump(data.Y_train, "Y_train.csv")
    dump(data.Y_test, "Y_test.csv")
    for m in range(1, config.M + 1):
        dump(data.X_train[m - 1], f"X{m}_train.csv")
        dump(data.X_test[m - 1], f"X{m}_test.csv")

    truth = {
        "significant": list(config.significant),
        "surfaces": {str(m): f"beta_{m}" for m in config.significant},
        "master_seed": config.master_seed,
        "contaminated_train_rows": list(data.contaminated),
    }
    with open(out / "truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2)
    outputs.append("truth.json")

    _write_manifest(
        out, "simulate", config.to_dict(),
        [args.config] if args.config else [], outputs,
        config.master_seed, started,
    )
    return 0


def cmd_fit(args) -> int:
    started = _now()
    out = _out_dir(args.out)
    Y, X = _read_samples(args.y, args.x)
    outputs = []

    if args.select:
        sel = forward_select(
            Y, X, args.tau, fixed_k=args.fixed_k,
            k_y_max=args.ky_max, k_x_max=args.kx_max,
        )
        write_trace_csv(sel, out / "selection_trace.csv")
        outputs.append("selection_trace.csv")
        indices = sel.chosen_predictors
        k_y, k_x = sel.chosen_k_y, sel.chosen_k_x
        X_fit = [X[i - 1] for i in indices]
    elif args.tune:
        k_y, k_x, trace = select_truncation(Y, X, args.tau, args.ky_max, args.kx_max)
        write_trace_csv(
            SelectionResult(k_y, k_x, tuple(range(1, len(X) + 1)), tuple(trace)),
            out / "bic_trace.csv",
        )
        outputs.append("bic_trace.csv")
        indices = tuple(range(1, len(X) + 1))
        X_fit = X
    else:
        if args.ky is None or args.kx is None:
            raise ConfigError("provide --ky and --kx, or use --tune / --select")
        k_y, k_x = args.ky, args.kx
        indices = tuple(range(1, len(X) + 1))
        X_fit = X

    fit = fit_fflqr(Y, X_fit, args.tau, k_y, k_x, indices)
    save_model(fit, out / "model.json")
    outputs.append("model.json")

    report = {
        "tau": args.tau,
        "k_y": k_y,
        "k_x": k_x,
        "predictors": list(indices),
        "n": Y.n,
        "in_sample_objective": score_objective(fit, Y, X_fit).tolist(),
    }
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    outputs.append("report.json")

    _write_manifest(
        out, "fit",
        {"tau": args.tau, "k_y": k_y, "k_x": k_x, "predictors": list(indices)},
        [args.y, *args.x], outputs, None, started,
    )
    return 0


def cmd_predict(args) -> int:
    started = _now()
    out = _out_dir(args.out)
    fit = load_model(args.model)
    X = [read_sample_csv(p) for p in args.x]
    try:
        pred = predict(fit, X)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    write_sample_csv(pred, out / "Y_pred.csv")
    _write_manifest(
        out, "predict", {"model": str(args.model)},
        [args.model, *args.x], ["Y_pred.csv"], None, started,
    )
    return 0


def cmd_interval(args) -> int:
    started = _now()
    out = _out_dir(args.out)
    fit = load_model(args.model)
    if not isinstance(fit, FflqrFit) or fit.method != "fflqr":
        raise ConfigError("interval construction needs a quantile (fflqr) model")
    X = [read_sample_csv(p) for p in args.x]
    Y_train, X_train = _read_samples(args.train_y, args.train_x)
    k_y = fit.response_basis.n_components
    k_x = fit.predictor_bases[0].n_components
    try:
        pred = predict(fit, X)
    except ValueError as exc:
        raise DataError(str(exc)) from exc

    if args.method == "bootstrap":
        band = bootstrap_band(
            Y_train, X_train, X, fit.tau, args.alpha, k_y, k_x,
            R=args.R, seed=args.seed,
        )
    else:
        band = direct_band(Y_train, X_train, X, args.alpha, k_y, k_x)

    write_sample_csv(pred, out / "Y_pred.csv")
    write_band_csv(band, out / "lower.csv", out / "upper.csv")
    meta = {
        "alpha": args.alpha,
        "method": args.method,
        "R": args.R if args.method == "bootstrap" else None,
        "seed": args.seed if args.method == "bootstrap" else None,
        "crossing_rate": band.crossing_rate,
    }
    with open(out / "band.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
    _write_manifest(
        out, "interval", meta,
        [args.model, args.train_y, *args.train_x, *args.x],
        ["Y_pred.csv", "lower.csv", "upper.csv", "band.json"],
        args.seed, started,
    )
    return 0


def _summary_rows(reports):
    rows = []
    for model in ALL_MODELS:
        for method in (*ALL_METHODS, "fflqr-direct"):
            group = [r for r in reports if r.model == model and r.method == method]
            if not group:
                continue
            for metric in _METRICS:
                attr = {"mspe": "mspe", "cpd": "cpd", "score": "interval_score"}[metric]
                values = [getattr(r, attr) for r in group if getattr(r, attr) is not None]
                if not values:
                    continue
                arr = np.array(values, dtype=float)
                median = float(np.median(arr))
                iqr = float(np.quantile(arr, 0.75) - np.quantile(arr, 0.25))
                rows.append((method, model, metric, median, iqr, len(values)))
    return rows


def cmd_benchmark(args) -> int:
    started = _now()
    config = _load_config(args)
    out = _out_dir(args.out)
    methods = args.methods.split(",") if args.methods else list(ALL_METHODS)
    models = args.models.split(",") if args.models else list(ALL_MODELS)
    n_threads = args.threads
    if n_threads is None:
        env = os.environ.get("FFLQR_THREADS")
        if env is not None:
            try:
                n_threads = int(env)
            except ValueError as exc:
                raise ConfigError(f"FFLQR_THREADS={env!r} is not an integer") from exc

    reports = run_monte_carlo(
        config, methods, models, alpha=args.alpha, n_threads=n_threads
    )
    write_results_csv(reports, out / "results.csv")

    with open(out / "summary.csv", "w", encoding="utf-8") as fh:
        fh.write("method,model,metric,median,iqr,n\n")
        for method, model, metric, median, iqr, n in _summary_rows(reports):
            fh.write(f"{method},{model},{metric},{median:.17g},{iqr:.17g},{n}\n")

    with open(out / "long.csv", "w", encoding="utf-8") as fh:
        fh.write("seed,replicate,method,model,scenario,metric,value\n")
        for r in reports:
            for metric, value in (
                ("mspe", r.mspe), ("cpd", r.cpd), ("score", r.interval_score)
            ):
                if value is None:
                    continue
                fh.write(
                    f"{r.seed},{r.replicate},{r.method},{r.model},"
                    f"{r.scenario},{metric},{value:.17g}\n"
                )

    _write_manifest(
        out, "benchmark",
        {
            **config.to_dict(),
            "methods": methods,
            "models": models,
            "alpha": args.alpha,
        },
        [args.config] if args.config else [],
        ["results.csv", "summary.csv", "long.csv"],
        config.master_seed, started,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fflqr",
        description="Function-on-function linear quantile regression toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("--config", help="config JSON path")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--n-train", dest="n_train", type=int)
        p.add_argument("--n-test", dest="n_test", type=int)
        p.add_argument("--replicates", type=int)
        p.add_argument("--sigma", type=float)
        p.add_argument("--error-dist", dest="error_dist", choices=["normal", "chisq1"])
        p.add_argument("--contamination", type=float)
        p.add_argument("--tau", type=float)

    p = sub.add_parser("simulate", help="generate one synthetic train/test split")
    add_config_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the quantile model to CSV data")
    p.add_argument("--y", required=True, help="response CSV")
    p.add_argument("--x", required=True, nargs="+", help="predictor CSVs in order")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--ky", type=int, help="response truncation")
    p.add_argument("--kx", type=int, help="predictor truncation")
    p.add_argument("--tune", action="store_true", help="pick K by exhaustive BIC")
    p.add_argument("--select", action="store_true",
                   help="forward predictor selection, then tune K")
    p.add_argument("--ky-max", dest="ky_max", type=int, default=5)
    p.add_argument("--kx-max", dest="kx_max", type=int, default=5)
    p.add_argument("--fixed-k", dest="fixed_k", type=int, default=2,
                   help="truncation used while selecting predictors")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict curves from a saved model")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--x", required=True, nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("interval", help="prediction bands for new curves")
    p.add_argument("--model", required=True)
    p.add_argument("--x", required=True, nargs="+", help="prediction predictor CSVs")
    p.add_argument("--train-y", dest="train_y", required=True,
                   help="training response CSV (bands refit the model)")
    p.add_argument("--train-x", dest="train_x", required=True, nargs="+",
                   help="training predictor CSVs")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--method", choices=["bootstrap", "direct"], default="bootstrap")
    p.add_argument("--R", type=int, default=100, help="bootstrap replicates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_interval)

    p = sub.add_parser("benchmark", help="Monte Carlo method comparison")
    add_config_flags(p)
    p.add_argument("--methods", help="comma-separated subset of "
                   + ",".join(ALL_METHODS))
    p.add_argument("--models", help="comma-separated subset of "
                   + ",".join(ALL_MODELS))
    p.add_argument("--alpha", type=float,
                   help="when set, also evaluate prediction bands")
    p.add_argument("--threads", type=int,
                   help="worker threads (default: FFLQR_THREADS or all cores)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
