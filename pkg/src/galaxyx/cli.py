"""Command-line front end: bench, synth, sweep, train, predict.

Every run echoes its fully resolved configuration into the report, all
output files are written atomically, and reruns with the same flags and
seed are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import (
    EUCLIDEAN,
    METRICS,
    SOFTENING_MODES,
    SofteningConfig,
    distances_to_centers,
    score_matrix,
    train_galaxy,
)
from .classifiers import CLASSIFIER_KINDS, LINEAR_SVM, LinearSvmParams
from .dataset import UNKNOWN_LABEL, CsvSchema, load_csv, load_feature_csv, save_csv
from .evaluation import (
    DEFAULT_DELTA_GRID,
    H_GALAXY,
    METHOD_NAMES,
    LpcoConfig,
    MethodSettings,
    delta_sweep,
    min_max_normalize,
    run_benchmark,
)
from .figures import render_benchmark_figure, render_sweep_figure
from .modelio import load_model, save_model, write_text_atomic
from .synth import SyntheticSpec, generate_synthetic


def _parse_label_col(value):
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        return value


def _parse_floats(value: str) -> tuple[float, ...]:
    items = tuple(float(v) for v in value.split(",") if v.strip())
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers")
    return items


def _parse_ints(value: str) -> tuple[int, ...]:
    items = tuple(int(v) for v in value.split(",") if v.strip())
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers")
    return items


def _parse_methods(value: str) -> tuple[str, ...]:
    return tuple(m.strip() for m in value.split(",") if m.strip())


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", type=Path, help="labeled CSV file")
    parser.add_argument(
        "--label-col",
        default=None,
        help="label column name or index in --data (default: last column)",
    )
    group = parser.add_argument_group("synthetic data (alternative to --data)")
    group.add_argument("--synth-classes", type=int, help="number of Gaussian classes")
    group.add_argument("--synth-per-class", type=int, default=500)
    group.add_argument("--synth-dim", type=int, default=2)
    group.add_argument("--synth-stddev", type=float, default=1.0)
    group.add_argument("--synth-min-dist", type=float, default=2.0)
    group.add_argument("--synth-link-dist", type=float, default=5.0)
    group.add_argument("--synth-seed", type=int, help="generator seed (required with --synth-classes)")


def _add_protocol_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--delta", type=float, default=-0.3, help="fixed softening value")
    parser.add_argument("--softening-mode", choices=SOFTENING_MODES, default="relative")
    parser.add_argument(
        "--delta-grid",
        type=_parse_floats,
        default=DEFAULT_DELTA_GRID,
        help="comma-separated softening grid for the sweep methods",
    )
    parser.add_argument("--folds", type=int, default=5, help="cross-validation folds per iteration")
    parser.add_argument("--iters", type=int, default=10, help="max held-out combinations per openness")
    parser.add_argument("--seed", type=int, required=True, help="master seed (mandatory)")
    parser.add_argument("--quantile", type=float, default=0.95, help="two-step envelope quantile")
    parser.add_argument("--local", choices=CLASSIFIER_KINDS, default=LINEAR_SVM,
                        help="closed-set classifier used locally and in baselines")
    parser.add_argument("--metric", choices=METRICS, default=EUCLIDEAN)
    parser.add_argument("--threads", type=int, default=0, help="fold workers; 0 = all cores")
    parser.add_argument("--out", type=Path, required=True, help="output directory")


def _dataset_from_args(args) -> tuple:
    wants_synth = args.synth_classes is not None
    if (args.data is None) == (not wants_synth):
        raise ValueError("provide exactly one of --data or --synth-classes")
    if args.data is not None:
        data = load_csv(args.data, CsvSchema(label_col=_parse_label_col(args.label_col)))
        source = {"data": str(args.data), "label_col": args.label_col}
    else:
        if args.synth_seed is None:
            raise ValueError("--synth-seed is mandatory when generating data")
        spec = SyntheticSpec(
            class_count=args.synth_classes,
            per_class=args.synth_per_class,
            seed=args.synth_seed,
            dim=args.synth_dim,
            stddev=args.synth_stddev,
            min_center_distance=args.synth_min_dist,
            link_distance=args.synth_link_dist,
        )
        data = generate_synthetic(spec)
        source = {"synthetic": spec.__dict__.copy()}
    return data, source


def _settings_from_args(args, methods: tuple[str, ...]) -> MethodSettings:
    return MethodSettings(
        methods=methods,
        softening_mode=args.softening_mode,
        delta=args.delta,
        delta_grid=tuple(args.delta_grid),
        local_kind=args.local,
        svm_params=LinearSvmParams(),
        quantile=args.quantile,
        metric=args.metric,
    )


def _threads(args) -> int | None:
    if args.threads < 0:
        raise ValueError("--threads must be >= 0")
    return None if args.threads == 0 else args.threads


def _curves_csv(report) -> str:
    lines = ["openness,method,mean_f,std_f,mean_rej_f,std_rej_f"]
    for r in sorted(report.results, key=lambda r: (r.openness, r.method)):
        lines.append(
            f"{r.openness!r},{r.method},{r.mean_f!r},{r.std_f!r},"
            f"{r.mean_rejection_f!r},{r.std_rejection_f!r}"
        )
    return "\n".join(lines) + "\n"


def _manifest_csv(report) -> str:
    lines = ["p,iteration,combination,fold,train_ids,test_ids"]
    for row in report.manifest:
        comb = "|".join(row.combination)
        train = " ".join(str(i) for i in row.train_ids)
        test = " ".join(str(i) for i in row.test_ids)
        lines.append(f"{row.p},{row.iteration},{comb},{row.fold},{train},{test}")
    return "\n".join(lines) + "\n"


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def cmd_bench(args) -> int:
    methods = tuple(args.methods)
    settings = _settings_from_args(args, methods)
    for p in args.hold_out:
        if p < 0:
            raise ValueError("hold-out counts must be >= 0")
    data, source = _dataset_from_args(args)
    config = {
        "command": "bench",
        "source": source,
        "methods": list(methods),
        "delta": args.delta,
        "softening_mode": args.softening_mode,
        "delta_grid": list(args.delta_grid),
        "hold_out": list(args.hold_out),
        "folds": args.folds,
        "iters": args.iters,
        "seed": args.seed,
        "quantile": args.quantile,
        "local": args.local,
        "metric": args.metric,
        "threads": args.threads,
    }
    report = run_benchmark(
        data,
        args.hold_out,
        settings,
        n_folds=args.folds,
        alpha=args.iters,
        master_seed=args.seed,
        threads=_threads(args),
        config_extra={"cli": config},
    )
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_text_atomic(out / "report.json", _json_text(report.to_json_dict()))
    write_text_atomic(out / "curves.csv", _curves_csv(report))
    write_text_atomic(out / "fold_manifest.csv", _manifest_csv(report))
    render_benchmark_figure(report, out / "curves.png")
    print(f"wrote report.json, curves.csv, fold_manifest.csv, curves.png to {out}")
    return 0


def cmd_sweep(args) -> int:
    settings = _settings_from_args(args, (H_GALAXY,))
    data, source = _dataset_from_args(args)
    cfg = LpcoConfig(args.hold_out, n_folds=args.folds, alpha=args.iters, master_seed=args.seed)
    sweep = delta_sweep(data, cfg, args.delta_grid, settings, threads=_threads(args))
    doc = {
        "config": {
            "command": "sweep",
            "source": source,
            "hold_out": args.hold_out,
            "delta_grid": list(args.delta_grid),
            "softening_mode": args.softening_mode,
            "folds": args.folds,
            "iters": args.iters,
            "seed": args.seed,
            "local": args.local,
            "metric": args.metric,
        },
        "delta_star": sweep.delta_star,
        "points": [
            {
                "delta": pt.delta,
                "mean_f": pt.mean_f,
                "std_f": pt.std_f,
                "mean_rej_f": pt.mean_rejection_f,
                "std_rej_f": pt.std_rejection_f,
            }
            for pt in sweep.points
        ],
    }
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_text_atomic(out / "sweep.json", _json_text(doc))
    lines = ["delta,mean_f,std_f,mean_rej_f,std_rej_f"]
    for pt in sweep.points:
        lines.append(
            f"{pt.delta!r},{pt.mean_f!r},{pt.std_f!r},"
            f"{pt.mean_rejection_f!r},{pt.std_rejection_f!r}"
        )
    write_text_atomic(out / "sweep.csv", "\n".join(lines) + "\n")
    render_sweep_figure(sweep, out / "sweep.png")
    print(f"best delta {sweep.delta_star:g}; wrote sweep.json, sweep.csv, sweep.png to {out}")
    return 0


def cmd_synth(args) -> int:
    spec = SyntheticSpec(
        class_count=args.classes,
        per_class=args.per_class,
        seed=args.seed,
        dim=args.dim,
        stddev=args.stddev,
        min_center_distance=args.min_dist,
        link_distance=args.link_dist,
    )
    data = generate_synthetic(spec)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_csv(data, args.out)
    print(f"wrote {data.n} rows ({spec.class_count} classes, d={spec.dim}) to {args.out}")
    return 0


def cmd_train(args) -> int:
    data = load_csv(args.data, CsvSchema(label_col=_parse_label_col(args.label_col)))
    normalized, _, stats = min_max_normalize(data)
    galaxy = train_galaxy(
        normalized, SofteningConfig(args.softening_mode, args.delta), args.metric
    )
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_model(args.out, galaxy, stats)
    print(f"trained {len(galaxy.labels)} class spheres (d={galaxy.d}); wrote {args.out}")
    return 0


def cmd_predict(args) -> int:
    galaxy, stats = load_model(args.model)
    X = load_feature_csv(args.data)
    if X.shape[1] != galaxy.d:
        raise ValueError(f"model expects {galaxy.d} features, found {X.shape[1]} in {args.data}")
    Xn = stats.apply(X)
    scores = score_matrix(galaxy, Xn)
    accepted = scores >= 0.0
    dists = distances_to_centers(Xn, galaxy.centers, galaxy.metric)
    lines = ["row_index,predicted_label,best_score,candidate_count"]
    for i in range(Xn.shape[0]):
        cols = np.flatnonzero(accepted[i])
        best = float(scores[i].max())
        if cols.size == 0:
            label = UNKNOWN_LABEL
        elif cols.size == 1:
            label = galaxy.labels[cols[0]]
        else:
            # overlaps resolved by the nearest candidate center: the artifact
            # stores no training instances, so no local classifier is trainable
            label = galaxy.labels[cols[int(np.argmin(dists[i, cols]))]]
        lines.append(f"{i},{label},{best!r},{cols.size}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_text_atomic(args.out, "\n".join(lines) + "\n")
    print(f"wrote {Xn.shape[0]} predictions to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="galaxyx",
        description="Open-set multi-class classification with bounding hyperspheres.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="evaluate methods across openness levels")
    _add_dataset_args(bench)
    bench.add_argument(
        "--methods",
        type=_parse_methods,
        default=METHOD_NAMES,
        help=f"comma-separated subset of {','.join(METHOD_NAMES)}",
    )
    bench.add_argument(
        "--hold-out",
        type=_parse_ints,
        required=True,
        help="comma-separated held-out class counts (0 = closed set)",
    )
    _add_protocol_args(bench)
    bench.set_defaults(func=cmd_bench)

    sweep = sub.add_parser("sweep", help="search the softening grid at one openness")
    _add_dataset_args(sweep)
    sweep.add_argument("--hold-out", type=int, required=True, help="held-out class count (>= 1)")
    _add_protocol_args(sweep)
    sweep.set_defaults(func=cmd_sweep)

    synth = sub.add_parser("synth", help="generate a constrained Gaussian dataset CSV")
    synth.add_argument("--classes", type=int, required=True)
    synth.add_argument("--per-class", type=int, default=500)
    synth.add_argument("--dim", type=int, default=2)
    synth.add_argument("--stddev", type=float, default=1.0)
    synth.add_argument("--min-dist", type=float, default=2.0)
    synth.add_argument("--link-dist", type=float, default=5.0)
    synth.add_argument("--seed", type=int, required=True, help="generator seed (mandatory)")
    synth.add_argument("--out", type=Path, required=True, help="output CSV path")
    synth.set_defaults(func=cmd_synth)

    train = sub.add_parser("train", help="fit sphere models on a labeled CSV")
    train.add_argument("--data", type=Path, required=True)
    train.add_argument("--label-col", default=None)
    train.add_argument("--delta", type=float, default=0.0)
    train.add_argument("--softening-mode", choices=SOFTENING_MODES, default="relative")
    train.add_argument("--metric", choices=METRICS, default=EUCLIDEAN)
    train.add_argument("--out", type=Path, required=True, help="model artifact path")
    train.set_defaults(func=cmd_train)

    predict = sub.add_parser("predict", help="classify a feature CSV with a trained model")
    predict.add_argument("--model", type=Path, required=True)
    predict.add_argument("--data", type=Path, required=True, help="feature-only CSV")
    predict.add_argument("--out", type=Path, required=True, help="predictions CSV path")
    predict.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
