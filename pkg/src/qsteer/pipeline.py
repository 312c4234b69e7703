"""End-to-end commands behind the CLI: train, evaluate, sweep, bench,
predict.

Artifact policy: everything written to disk (datasets, models, report
files, CSVs) is a pure function of the inputs and seeds, so repeated
runs are byte-identical.  Wall-clock measurements are therefore kept
out of written report files; commands that measure time report it on
stdout instead.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from qsteer.dataset import Dataset, DatasetRow, load_dataset, sample_rng, split_dataset
from qsteer.features import FEATURE_LENGTHS, extract
from qsteer.states import (generalized_werner, random_two_qubit_state,
                           unsteerable_bound_holds, validate_state)
from qsteer.steering import STEERABLE, canonical_measurements, label_state, steering_threshold_scan
from qsteer.svm import (DEFAULT_TOL, Hyperparams, SvmModel, TrainingSet,
                        cross_validate, decision_function, predict,
                        save_model, train)

DEFAULT_FOLDS = 4
TEST_FRACTION = 0.2


def features_for_rows(rows: list[DatasetRow], kind: str) -> np.ndarray:
    out = np.empty((len(rows), FEATURE_LENGTHS[kind]))
    for i, row in enumerate(rows):
        out[i] = extract(row.state, kind).values
    return out


def training_set(rows: list[DatasetRow], kind: str) -> TrainingSet:
    return TrainingSet(features_for_rows(rows, kind),
                       np.array([r.label for r in rows], dtype=int),
                       kind=kind)


@dataclass(frozen=True)
class TrainReport:
    feature_kind: str
    folds: int
    grid_size: int
    best_c: float
    best_gamma: float
    cv_accuracy: float
    n_train: int
    n_test_reserved: int
    converged: bool
    train_checksum: str

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=1)

    def to_csv(self) -> str:
        keys = list(self.__dict__)
        return (",".join(keys) + "\n"
                + ",".join(str(self.__dict__[k]) for k in keys) + "\n")


def train_command(dataset_path, feature_kind: str, k: int = DEFAULT_FOLDS,
                  grid: list[Hyperparams] | None = None, seed: int = 0,
                  tol: float = DEFAULT_TOL,
                  model_out=None) -> tuple[SvmModel, TrainReport]:
    """Grid-searched k-fold CV on the training split, then a final fit.

    The last 20% of each class (file order) is reserved as a test tail
    and never touched here.
    """
    dataset = load_dataset(dataset_path) if not isinstance(dataset_path, Dataset) else dataset_path
    if feature_kind not in FEATURE_LENGTHS:
        raise ValueError(f"unknown feature kind {feature_kind!r}")
    train_rows, test_rows = split_dataset(dataset, TEST_FRACTION)
    data = training_set(train_rows, feature_kind)
    from qsteer.svm import default_grid
    cells = grid if grid is not None else default_grid()
    best, cv_acc = cross_validate(data, k, cells,
                                  rng=np.random.default_rng(seed), tol=tol)
    model = train(data, best, tol=tol)
    report = TrainReport(feature_kind=feature_kind, folds=k,
                         grid_size=len(cells), best_c=best.c,
                         best_gamma=best.gamma, cv_accuracy=cv_acc,
                         n_train=len(train_rows),
                         n_test_reserved=len(test_rows),
                         converged=model.converged,
                         train_checksum=model.train_checksum)
    if model_out is not None:
        save_model(model, model_out)
    return model, report


@dataclass(frozen=True)
class EvaluationReport:
    """Accuracy and confusion on a test source; +1 is the positive class.

    Timing means are in seconds; they are measured on the fly and are
    not part of the serialized artifact (see module docstring).
    """

    feature_kind: str
    source: str
    n_samples: int
    accuracy: float
    true_pos: int
    true_neg: int
    false_pos: int
    false_neg: int
    seconds_per_prediction: float | None = None
    seconds_per_label: float | None = None

    def to_json(self) -> str:
        keep = {k: v for k, v in self.__dict__.items()
                if not k.startswith("seconds_")}
        return json.dumps(keep, indent=1)

    def to_csv(self) -> str:
        keep = {k: v for k, v in self.__dict__.items()
                if not k.startswith("seconds_")}
        return (",".join(keep) + "\n"
                + ",".join(str(v) for v in keep.values()) + "\n")


def _confusion(pred: np.ndarray, truth: np.ndarray) -> tuple[int, int, int, int]:
    tp = int(np.sum((pred == 1) & (truth == 1)))
    tn = int(np.sum((pred == -1) & (truth == -1)))
    fp = int(np.sum((pred == 1) & (truth == -1)))
    fn = int(np.sum((pred == -1) & (truth == 1)))
    return tp, tn, fp, fn


def _timed_predictions(model: SvmModel, states: list[np.ndarray]) -> tuple[np.ndarray, float]:
    """Per-state predictions (feature extraction included in the clock)."""
    preds = np.empty(len(states), dtype=int)
    t0 = time.perf_counter()
    for i, rho in enumerate(states):
        preds[i] = predict(model, extract(rho, model.kind).values)
    dt = time.perf_counter() - t0
    return preds, dt / max(len(states), 1)


def evaluate_on_dataset(model: SvmModel, dataset: Dataset,
                        source: str = "dataset") -> EvaluationReport:
    """Accuracy of `model` against the stored labels of `dataset`."""
    if model.kind not in FEATURE_LENGTHS:
        raise ValueError(f"model has no usable feature kind tag: {model.kind!r}")
    states = dataset.states()
    truth = dataset.labels()
    preds, sec = _timed_predictions(model, states)
    tp, tn, fp, fn = _confusion(preds, truth)
    return EvaluationReport(feature_kind=model.kind, source=source,
                            n_samples=len(states),
                            accuracy=float(np.mean(preds == truth)),
                            true_pos=tp, true_neg=tn, false_pos=fp,
                            false_neg=fn, seconds_per_prediction=sec)


def label_werner_grid(xi: float, n: int, m: int, trials: int, strategy: str,
                      master_seed: int) -> tuple[list[np.ndarray], np.ndarray, float]:
    """SDP ground truth for a Werner grid; returns (states, labels, sec/label).

    Each sample reuses its own seeded stream for the measurement draws,
    mirroring the dataset protocol.
    """
    states: list[np.ndarray] = []
    labels = np.empty(n, dtype=int)
    t0 = time.perf_counter()
    for index in range(n):
        rng = sample_rng(master_seed, index)
        p = float(rng.random())
        rho = generalized_werner(p, xi)
        labels[index], _ = label_state(rho, m, trials, strategy, rng)
        states.append(rho)
    dt = time.perf_counter() - t0
    return states, labels, dt / max(n, 1)


def evaluate_on_werner(model: SvmModel, xi: float, n: int, m: int,
                       trials: int, strategy: str = "uniform",
                       master_seed: int = 0) -> EvaluationReport:
    """Accuracy against SDP labels on a fresh generalized-Werner grid."""
    states, truth, sec_label = label_werner_grid(xi, n, m, trials, strategy,
                                                 master_seed)
    preds, sec_pred = _timed_predictions(model, states)
    tp, tn, fp, fn = _confusion(preds, truth)
    return EvaluationReport(feature_kind=model.kind,
                            source=f"werner(xi={xi!r},n={n},m={m})",
                            n_samples=n,
                            accuracy=float(np.mean(preds == truth)),
                            true_pos=tp, true_neg=tn, false_pos=fp,
                            false_neg=fn,
                            seconds_per_prediction=sec_pred,
                            seconds_per_label=sec_label)


def analytic_threshold(xi: float, tol: float = 1e-6) -> float:
    """Largest p for which the closed-form unsteerability bound holds."""
    lo, hi = 0.0, 1.0
    if not unsteerable_bound_holds(lo, xi):
        return 0.0
    if unsteerable_bound_holds(hi, xi):
        return 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if unsteerable_bound_holds(mid, xi):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SweepRow:
    xi: float
    m: int
    method: str
    threshold: float | None
    analytic_bound: float
    monotone: bool


def sweep_csv(rows: list[SweepRow]) -> str:
    lines = ["xi,m,method,threshold,analytic_bound,monotone"]
    for r in rows:
        thr = "" if r.threshold is None else str(r.threshold)
        lines.append(f"{r.xi},{r.m},{r.method},{thr},{r.analytic_bound},{r.monotone}")
    return "\n".join(lines) + "\n"


def model_threshold_scan(model: SvmModel, xi: float,
                         tol: float = 1e-3) -> tuple[float | None, bool]:
    """Smallest p on an ascending grid that the model calls steerable.

    Also reports whether the predictions are monotone along p (a single
    sign change); learned boundaries may flip back and forth.
    """
    grid = np.arange(0.0, 1.0 + 0.5 * tol, tol)
    preds = np.array([predict(model, extract(generalized_werner(p, xi),
                                             model.kind).values)
                      for p in grid])
    steer = preds == STEERABLE
    if not steer.any():
        return None, True
    first = int(np.argmax(steer))
    return float(grid[first]), bool(steer[first:].all())


def werner_sweep_command(xi_list, m_list, method: str = "sdp",
                         tol: float = 1e-3,
                         models: list[SvmModel] | None = None,
                         out_csv=None) -> list[SweepRow]:
    """Threshold table over (xi, m): SDP bisection or model grid scans."""
    rows: list[SweepRow] = []
    if method == "sdp":
        for xi in xi_list:
            bound = analytic_threshold(xi)
            for m in m_list:
                thr = steering_threshold_scan(xi, canonical_measurements(m),
                                              tol=tol)
                rows.append(SweepRow(xi=float(xi), m=int(m), method="sdp",
                                     threshold=thr, analytic_bound=bound,
                                     monotone=True))
    elif method == "model":
        if not models:
            raise ValueError("method 'model' needs at least one trained model")
        for xi in xi_list:
            bound = analytic_threshold(xi)
            for m in m_list:
                for model in models:
                    thr, mono = model_threshold_scan(model, xi, tol=tol)
                    rows.append(SweepRow(xi=float(xi), m=int(m),
                                         method=f"model-{model.kind}",
                                         threshold=thr, analytic_bound=bound,
                                         monotone=mono))
    else:
        raise ValueError(f"unknown sweep method {method!r}")
    if out_csv is not None:
        with open(out_csv, "w", encoding="utf-8") as fh:
            fh.write(sweep_csv(rows))
    return rows


@dataclass(frozen=True)
class BenchReport:
    m: int
    trials: int
    n_states: int
    seconds_per_prediction: float
    prediction_spread: float
    seconds_per_label: float
    label_spread: float

    @property
    def ratio(self) -> float:
        return self.seconds_per_label / self.seconds_per_prediction

    def to_json(self) -> str:
        d = dict(self.__dict__)
        d["ratio"] = self.ratio
        return json.dumps(d, indent=1)

    def to_csv(self) -> str:
        d = dict(self.__dict__)
        d["ratio"] = self.ratio
        return ",".join(d) + "\n" + ",".join(str(v) for v in d.values()) + "\n"


def bench_command(model: SvmModel, m: int, n_states: int = 20,
                  trials: int = 20, strategy: str = "uniform",
                  seed: int = 0) -> BenchReport:
    """Wall-clock comparison: SDP labeling vs model prediction per state."""
    if n_states < 10:
        raise ValueError("need at least 10 states for stable timing")
    states = []
    rngs = []
    for index in range(n_states):
        rng = sample_rng(seed, index)
        states.append(random_two_qubit_state(rng))
        rngs.append(rng)

    pred_times = np.empty(n_states)
    for i, rho in enumerate(states):
        t0 = time.perf_counter()
        predict(model, extract(rho, model.kind).values)
        pred_times[i] = time.perf_counter() - t0

    label_times = np.empty(n_states)
    for i, (rho, rng) in enumerate(zip(states, rngs)):
        t0 = time.perf_counter()
        label_state(rho, m, trials, strategy, rng)
        label_times[i] = time.perf_counter() - t0

    return BenchReport(m=m, trials=trials, n_states=n_states,
                       seconds_per_prediction=float(pred_times.mean()),
                       prediction_spread=float(pred_times.std()),
                       seconds_per_label=float(label_times.mean()),
                       label_spread=float(label_times.std()))


def predict_command(model: SvmModel, state: np.ndarray) -> tuple[int, float]:
    """Label and decision value for one state."""
    rho = validate_state(state)
    feats = extract(rho, model.kind).values
    return int(predict(model, feats)), float(decision_function(model, feats))
