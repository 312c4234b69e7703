"""Command-line interface.

Subcommands: generate, train, evaluate, sweep, predict, bench.
Exit codes: 0 success, 2 validation error, 3 numerical failure or
exhausted sample quota.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from qsteer.errors import NumericalFailure, QuotaExceeded

STRATEGY_CHOICES = ("uniform", "uniform-random", "mub", "mub-xyz", "fibonacci")
FEATURE_CHOICES = ("F1", "F2", "F3", "F4")


def _parse_grid(text: str):
    """'1,8,64x0.01,0.1' -> the cross product as Hyperparams cells."""
    from qsteer.svm import Hyperparams
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValueError("grid must look like 'C1,C2,...xG1,G2,...'")
    cs = [float(v) for v in parts[0].split(",") if v.strip()]
    gs = [float(v) for v in parts[1].split(",") if v.strip()]
    if not cs or not gs:
        raise ValueError("grid needs at least one C and one gamma")
    return [Hyperparams(c, g) for c in cs for g in gs]


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def _read_state(args) -> np.ndarray:
    from qsteer.states import state_from_reals
    if args.inline is not None:
        values = _parse_floats(args.inline)
    else:
        if args.state is None:
            raise ValueError("provide a state file or --inline values")
        text = Path(args.state).read_text().strip()
        if text.startswith("["):
            # a "state" entry copied out of a dataset row
            values = [float(v) for v in json.loads(text)]
        else:
            values = _parse_floats(text)
    if len(values) != 32:
        raise ValueError(f"a state needs 32 reals, got {len(values)}")
    return state_from_reals(values)


def _csv_twin(path) -> Path:
    p = Path(path)
    return p.with_suffix(".csv") if p.suffix != ".csv" else p


def _cmd_generate(args) -> int:
    from qsteer.dataset import generate_dataset
    dataset = generate_dataset(m=args.m, n_pos=args.pos, n_neg=args.neg,
                               trials=args.trials, strategy=args.strategy,
                               master_seed=args.seed, out_path=args.out,
                               workers=args.workers,
                               max_samples=args.max_samples)
    last = dataset.rows[-1].index if dataset.rows else -1
    print(f"wrote {len(dataset.rows)} rows ({args.pos} +1, {args.neg} -1) "
          f"to {args.out}; highest sample index {last}")
    return 0


def _cmd_train(args) -> int:
    from qsteer.pipeline import train_command
    grid = _parse_grid(args.grid) if args.grid else None
    model, report = train_command(args.dataset, args.features, k=args.folds,
                                  grid=grid, seed=args.seed, tol=args.tol,
                                  model_out=args.out)
    print(report.to_json())
    if args.report:
        Path(args.report).write_text(report.to_json() + "\n", encoding="utf-8")
        _csv_twin(args.report).write_text(report.to_csv(), encoding="utf-8")
    if args.out:
        print(f"model written to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    from qsteer.dataset import load_dataset
    from qsteer.pipeline import evaluate_on_dataset, evaluate_on_werner
    from qsteer.svm import load_model
    model = load_model(args.model)
    if args.werner is not None:
        xi, n = args.werner.split(",")
        report = evaluate_on_werner(model, xi=float(xi), n=int(n), m=args.m,
                                    trials=args.trials,
                                    strategy=args.strategy,
                                    master_seed=args.seed)
        print(f"seconds per SDP label: {report.seconds_per_label:.3e}")
    else:
        if args.dataset is None:
            raise ValueError("provide a dataset path or --werner xi,n")
        report = evaluate_on_dataset(model, load_dataset(args.dataset),
                                     source=str(args.dataset))
    print(report.to_json())
    print(f"seconds per prediction: {report.seconds_per_prediction:.3e}")
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
        _csv_twin(args.out).write_text(report.to_csv(), encoding="utf-8")
    return 0


def _cmd_sweep(args) -> int:
    from qsteer.pipeline import sweep_csv, werner_sweep_command
    from qsteer.svm import load_model
    xi_list = _parse_floats(args.xi)
    m_list = [int(v) for v in _parse_floats(args.m_list)]
    models = [load_model(p) for p in args.model] if args.model else None
    rows = werner_sweep_command(xi_list, m_list, method=args.method,
                                tol=args.tol, models=models,
                                out_csv=args.out)
    sys.stdout.write(sweep_csv(rows))
    return 0


def _cmd_predict(args) -> int:
    from qsteer.pipeline import predict_command
    from qsteer.svm import load_model
    model = load_model(args.model)
    label, decision = predict_command(model, _read_state(args))
    verdict = "steerable" if label == -1 else "not detected steerable"
    print(f"label {label:+d} ({verdict}), decision value {decision:.6f}")
    return 0


def _cmd_bench(args) -> int:
    from qsteer.pipeline import bench_command
    from qsteer.svm import load_model
    model = load_model(args.model)
    report = bench_command(model, m=args.m, n_states=args.n,
                           trials=args.trials, strategy=args.strategy,
                           seed=args.seed)
    print(report.to_json())
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
        _csv_twin(args.out).write_text(report.to_csv(), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsteer",
        description="Steerability labeling and learned steerability "
                    "classifiers for two-qubit states.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, m_default=2):
        p.add_argument("--m", type=int, default=m_default,
                       help="number of measurement settings")
        p.add_argument("--trials", type=int, default=20,
                       help="direction-set draws per state")
        p.add_argument("--strategy", choices=STRATEGY_CHOICES,
                       default="uniform", help="direction sampling strategy")
        p.add_argument("--seed", type=int, default=0, help="master seed")

    g = sub.add_parser("generate", help="draw and label a dataset")
    common(g)
    g.add_argument("--pos", type=int, default=2000, help="+1 row quota")
    g.add_argument("--neg", type=int, default=2000, help="-1 row quota")
    g.add_argument("--workers", type=int, default=1, help="labeling processes")
    g.add_argument("--max-samples", type=int, default=None,
                   help="abort after this many draws (default 500 per row)")
    g.add_argument("--out", required=True, help="dataset file to write")
    g.set_defaults(func=_cmd_generate)

    t = sub.add_parser("train", help="cross-validate and fit a classifier")
    t.add_argument("dataset", help="dataset file from 'generate'")
    t.add_argument("--features", choices=FEATURE_CHOICES, required=True)
    t.add_argument("--folds", type=int, default=4)
    t.add_argument("--grid", default=None,
                   help="hyperparameter grid 'C1,C2,...xG1,G2,...' "
                        "(default: full logarithmic grid)")
    t.add_argument("--seed", type=int, default=0, help="fold-shuffle seed")
    t.add_argument("--tol", type=float, default=1e-3, help="SMO tolerance")
    t.add_argument("--out", default=None, help="model file to write")
    t.add_argument("--report", default=None, help="report file to write")
    t.set_defaults(func=_cmd_train)

    e = sub.add_parser("evaluate", help="score a model on a test source")
    e.add_argument("--model", required=True, help="model file")
    e.add_argument("dataset", nargs="?", default=None,
                   help="dataset file with ground-truth labels")
    e.add_argument("--werner", default=None, metavar="XI,N",
                   help="evaluate on a fresh Werner grid labeled by the SDP")
    common(e)
    e.add_argument("--out", default=None, help="report file to write")
    e.set_defaults(func=_cmd_evaluate)

    s = sub.add_parser("sweep", help="threshold table over the Werner family")
    s.add_argument("--xi", required=True, help="comma-separated angles")
    s.add_argument("--m-list", required=True, help="comma-separated settings")
    s.add_argument("--method", choices=("sdp", "model"), default="sdp")
    s.add_argument("--tol", type=float, default=1e-3, help="scan resolution")
    s.add_argument("--model", action="append", default=None,
                   help="model file (repeatable, for --method model)")
    s.add_argument("--out", default=None, help="CSV file to write")
    s.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("predict", help="classify one state")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("state", nargs="?", default=None,
                   help="file with 32 reals (row-major Re/Im pairs)")
    p.add_argument("--inline", default=None,
                   help="the 32 reals inline, comma or space separated")
    p.set_defaults(func=_cmd_predict)

    b = sub.add_parser("bench", help="time SDP labeling vs model prediction")
    b.add_argument("--model", required=True, help="model file")
    common(b, m_default=3)
    b.add_argument("--n", type=int, default=20, help="states to time")
    b.add_argument("--out", default=None, help="report file to write")
    b.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except QuotaExceeded as exc:
        print(f"sample budget exhausted: {exc}", file=sys.stderr)
        return 3
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
