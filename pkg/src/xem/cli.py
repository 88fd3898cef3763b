"""Command-line front end.

Exit codes: 0 success, 2 usage error (bad flags or hyperparameters),
3 I/O error (unreadable or unwritable file), 4 data error (malformed input,
dimension mismatch, malformed model file). Outputs go to ``--out-dir``,
which defaults to ``$XEM_OUTPUT_DIR`` and then to the working directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import XEMParams, explain_text, fit_xem, predict, write_explanation_csv
from .dataset import DataFormatError, emit_long_csv, generate_synthetic, read_dataset, train_test_split
from .evaluation import (
    Grid,
    accuracy,
    grid_search,
    missing_data_experiment,
    noise_experiment,
    write_cv_csv,
    write_missing_csv,
    write_noise_csv,
)
from .gbt import GBTParams
from .lce import LCEParams
from .serialization import load_model, save_model

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4

OUTPUT_DIR_ENV = "XEM_OUTPUT_DIR"


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out-dir", type=Path, default=None,
                   help=f"output directory (default: ${OUTPUT_DIR_ENV} or .)")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("ts", "csv"), default=None,
                   help="input format (default: by file suffix)")


def _add_gbt(p: argparse.ArgumentParser) -> None:
    d = GBTParams()
    g = p.add_argument_group("boosting base learner")
    g.add_argument("--gbt-rounds", type=int, default=d.n_rounds)
    g.add_argument("--gbt-depth", type=int, default=d.max_depth)
    g.add_argument("--learning-rate", type=float, default=d.learning_rate)
    g.add_argument("--reg-lambda", type=float, default=d.reg_lambda)
    g.add_argument("--gamma", type=float, default=d.gamma)
    g.add_argument("--min-child-weight", type=float, default=d.min_child_weight)


def _add_fixed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--win-pct", type=float, default=20.0)
    p.add_argument("--n-trees", type=int, default=10)
    p.add_argument("--max-depth", type=int, default=1)
    _add_gbt(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xem", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model on a labeled training file")
    p.add_argument("--train", type=Path, required=True)
    _add_format(p)
    _add_fixed(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, help="model path (default: OUT_DIR/model.json)")
    _add_common(p)

    p = sub.add_parser("predict", help="classify series and report their windows")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    _add_format(p)
    p.add_argument("--out", type=Path, default=None,
                   help="predictions CSV (default: OUT_DIR/predictions.csv)")
    p.add_argument("--explain", type=Path, default=None, metavar="DIR",
                   help="also write one window-highlight CSV and text report per series")
    _add_common(p)

    p = sub.add_parser("grid-search", help="stratified k-fold grid search")
    p.add_argument("--train", type=Path, required=True)
    _add_format(p)
    grid = Grid()
    p.add_argument("--win-pcts", type=_floats, default=list(grid.win_pct))
    p.add_argument("--n-trees", type=_ints, default=list(grid.n_trees))
    p.add_argument("--max-depths", type=_ints, default=list(grid.max_depth))
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    _add_gbt(p)
    _add_common(p)

    p = sub.add_parser("synth", help="write the synthetic square-pulse dataset")
    p.add_argument("--n-per-class", type=int, default=10)
    p.add_argument("--length", type=int, default=100)
    p.add_argument("--square-start", type=int, default=60)
    p.add_argument("--square-len", type=int, default=20)
    p.add_argument("--n-squares", type=int, default=1, choices=(1, 2))
    p.add_argument("--second-start", type=int, default=72)
    p.add_argument("--max-shift", type=int, default=4)
    p.add_argument("--test-size", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("robustness", help="missing-data and noise experiments")
    rsub = p.add_subparsers(dest="experiment", required=True)
    for name, flag, kind, default in (
        ("missing", "--fractions", "fractions", "0,0.05,0.1,0.2,0.3,0.4,0.5"),
        ("noise", "--sigmas", "sigmas", "0,0.2,0.4,0.6,0.8,1"),
    ):
        q = rsub.add_parser(name)
        q.add_argument("--train", type=Path, required=True)
        q.add_argument("--test", type=Path, required=True)
        _add_format(q)
        q.add_argument(flag, dest=kind, type=_floats, default=_floats(default))
        if name == "missing":
            q.add_argument("--reps", type=int, default=10)
        q.add_argument("--seed", type=int, default=0)
        _add_fixed(q)
        _add_common(q)
    return parser


# --- helpers -----------------------------------------------------------------


def _out_dir(args) -> Path:
    path = args.out_dir or Path(os.environ.get(OUTPUT_DIR_ENV) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _gbt_params(args) -> GBTParams:
    return GBTParams(args.gbt_rounds, args.gbt_depth, args.learning_rate, args.reg_lambda,
                     args.gamma, args.min_child_weight)


def _fixed_params(args) -> XEMParams:
    try:
        return XEMParams(args.win_pct, LCEParams(args.n_trees, args.max_depth, _gbt_params(args)))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_threads(args) -> None:
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _metadata(args, **extra) -> dict:
    doc = {"command": args.command, "library_version": __version__}
    for key, value in sorted(vars(args).items()):
        if key in ("func", "command"):
            continue
        doc[key] = str(value) if isinstance(value, Path) else value
    doc.update(extra)
    return doc


# --- commands ----------------------------------------------------------------


def cmd_fit(args) -> int:
    params = _fixed_params(args)
    _check_threads(args)
    train = read_dataset(args.train, args.format)
    model = fit_xem(train, params, seed=args.seed, n_jobs=args.threads)
    out = args.out or _out_dir(args) / "model.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)

    preds = np.array([e.predicted_class for e in predict(model, train, n_jobs=args.threads)])
    labels = train.labels
    n_rows = sum(max(1, s.length - model.w + 1) for s in train.series)
    lines = [
        f"model: {out}",
        f"seed: {args.seed}",
        f"window length w: {model.w} ({params.win_pct:g}% of {model.train_max_length})",
        f"window rows: {n_rows}",
        f"training accuracy: {accuracy(preds, labels):.3f}",
    ]
    for c, name in enumerate(train.class_names):
        members = labels == c
        if members.any():
            lines.append(f"  {name}: {accuracy(preds[members], labels[members]):.3f} "
                         f"({int(members.sum())} series)")
    report = "\n".join(lines) + "\n"
    out.with_suffix(".report.txt").write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    return EXIT_OK


def cmd_predict(args) -> int:
    _check_threads(args)
    model = load_model(args.model)
    data = read_dataset(args.data, args.format, class_names=model.class_names)
    explanations = predict(model, data, n_jobs=args.threads)
    out = args.out or _out_dir(args) / "predictions.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["mts_id", "predicted_class", "confidence", "window_start", "window_end"])
        for e in explanations:
            writer.writerow([e.mts_id, model.class_names[e.predicted_class], repr(e.confidence),
                             e.window_start, e.window_end])
    if args.explain is not None:
        args.explain.mkdir(parents=True, exist_ok=True)
        for e, s in zip(explanations, data.series):
            write_explanation_csv(args.explain / f"mts_{s.id}.csv", s, e)
            (args.explain / f"mts_{s.id}.txt").write_text(
                explain_text(e, model.class_names, s), encoding="utf-8")
    print(f"{len(explanations)} predictions written to {out}")
    return EXIT_OK


def cmd_grid_search(args) -> int:
    _check_threads(args)
    try:
        grid = Grid(tuple(args.win_pcts), tuple(args.n_trees), tuple(args.max_depths))
        gbt = _gbt_params(args)
        for point in grid.points():
            XEMParams(point[0], LCEParams(point[1], point[2], gbt))
        if args.folds < 2:
            raise ValueError("--folds must be >= 2")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    train = read_dataset(args.train, args.format)
    result = grid_search(train, grid, args.folds, args.seed, gbt, n_jobs=args.threads)
    out_dir = _out_dir(args)
    write_cv_csv(out_dir / "cv.csv", result)
    save_model(result.model, out_dir / "model.json")
    best = result.best
    _write_json(out_dir / "metadata.json", _metadata(
        args, cv_seed=args.seed, model_seed=args.seed,
        best={"win_pct": best.win_pct, "n_trees": best.n_trees, "max_depth": best.max_depth,
              "mean_accuracy": best.mean_accuracy},
    ))
    print(f"best: win_pct={best.win_pct:g} n_trees={best.n_trees} max_depth={best.max_depth} "
          f"mean CV accuracy={best.mean_accuracy:.3f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        data = generate_synthetic(args.n_per_class, args.length, args.square_start, args.square_len,
                                  args.n_squares, args.seed, second_start=args.second_start,
                                  max_shift=args.max_shift)
        if not 0.0 < args.test_size < 1.0:
            raise ValueError("--test-size must lie in (0, 1)")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    train, test = train_test_split(data, args.test_size)
    out_dir = _out_dir(args)
    emit_long_csv(train, out_dir / "train.csv")
    emit_long_csv(test, out_dir / "test.csv")
    _write_json(out_dir / "metadata.json", _metadata(args, data_seed=args.seed,
                                                     n_train=len(train), n_test=len(test)))
    print(f"wrote {len(train)} training and {len(test)} test series to {out_dir}")
    return EXIT_OK


def cmd_robustness(args) -> int:
    params = _fixed_params(args)
    _check_threads(args)
    train = read_dataset(args.train, args.format)
    test = read_dataset(args.test, args.format, class_names=train.class_names)
    out_dir = _out_dir(args)
    if args.experiment == "missing":
        if args.reps < 1 or any(not 0.0 <= f <= 1.0 for f in args.fractions):
            raise UsageError("--reps must be >= 1 and fractions must lie in [0, 1]")
        rows = missing_data_experiment(train, test, params, args.fractions, args.reps,
                                       args.seed, n_jobs=args.threads)
        write_missing_csv(out_dir / "missing.csv", rows)
        seeds = {"replication_seeds": [args.seed + r for r in range(args.reps)],
                 "mask_seeds": "[seed + r, 0] for train, [seed + r, 1] for test",
                 "model_seeds": "seed + r"}
        for r in rows:
            print(f"fraction {r.fraction:g}: error {r.mean_error:.3f} +/- {r.std_error:.3f}")
    else:
        if any(s < 0 for s in args.sigmas):
            raise UsageError("sigmas must be >= 0")
        rows = noise_experiment(train, test, params, args.sigmas, args.seed, n_jobs=args.threads)
        write_noise_csv(out_dir / "noise.csv", rows)
        seeds = {"noise_seeds": "[seed, 0] for train, [seed, 1] for test", "model_seed": args.seed}
        for r in rows:
            print(f"sigma {r.sigma:g}: error {r.error:.3f}")
    _write_json(out_dir / "metadata.json", _metadata(args, **seeds))
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "grid-search": cmd_grid_search,
    "synth": cmd_synth,
    "robustness": cmd_robustness,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"xem: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"xem: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DataFormatError, ValueError) as exc:
        print(f"xem: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
