"""Soft-margin SVM with an RBF kernel, trained from scratch by SMO.

Solves the usual dual

    max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
    s.t. 0 <= a_i <= C,   sum_i a_i y_i = 0,

with K(x, x') = exp(-gamma ||x - x'||^2), by sequential minimal
optimization over maximal-violating pairs: tracking F_i = u_i - y_i
(u_i the biasless decision value), the pair (argmin F over the "up"
set, argmax F over the "low" set) is updated analytically until
b_low - b_up <= tol.  The bias is -(b_up + b_low)/2.

Pair updates move along +/- y directions, so the equality constraint
is preserved up to addition roundoff; a final repair step absorbs that
drift (typically ~1e-12) into the freest variable so converged models
satisfy the dual constraints to near machine precision.

Cross-validation is stratified k-fold with per-fold scaling (fit on
the training split only) and squared-distance caching shared across
the hyperparameter grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from hashlib import sha256

import numpy as np

DEFAULT_TOL = 1e-3
MAX_UPDATES = 10_000_000
SUPPORT_EPS = 1e-12
GRID_C = tuple(2.0 ** k for k in range(-5, 16, 2))
GRID_GAMMA = tuple(2.0 ** k for k in range(-15, 4, 2))
MODEL_FORMAT = "svm-rbf"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    """Soft-margin penalty C and RBF width gamma."""

    c: float
    gamma: float

    def __post_init__(self) -> None:
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise ValueError(f"C must be positive, got {self.c}")
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive, got {self.gamma}")


def default_grid() -> list[Hyperparams]:
    """Standard logarithmic RBF grid, ascending in (C, gamma)."""
    return [Hyperparams(c, g) for c in GRID_C for g in GRID_GAMMA]


@dataclass(frozen=True)
class Scaler:
    """Per-feature affine map x -> (x - mean) / scale."""

    mean: np.ndarray
    scale: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.mean.shape[0]:
            raise ValueError(
                f"expected {self.mean.shape[0]} features, got {x.shape[-1]}")
        return (x - self.mean) / self.scale


def identity_scaler(dim: int) -> Scaler:
    return Scaler(mean=np.zeros(dim), scale=np.ones(dim))


@dataclass(frozen=True)
class TrainingSet:
    """Feature rows with labels in {-1, +1} and an optional kind tag."""

    features: np.ndarray
    labels: np.ndarray
    kind: str | None = None

    def __post_init__(self) -> None:
        feats = np.ascontiguousarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if labels.shape != (feats.shape[0],):
            raise ValueError("labels must match the number of feature rows")
        if not np.all(np.isin(labels, (-1, 1))):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.features.shape[0]

    def checksum(self) -> str:
        h = sha256()
        h.update(repr(self.features.shape).encode())
        h.update(self.features.tobytes())
        h.update(self.labels.astype(np.int64).tobytes())
        return h.hexdigest()


def _square_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    d = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    return np.maximum(d, 0.0)


def rbf_kernel(x: np.ndarray, y: np.ndarray, gamma: float) -> float:
    """exp(-gamma ||x - y||^2) for a single pair of vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("rbf_kernel expects two equal-length vectors")
    if not gamma > 0.0:
        raise ValueError("gamma must be positive")
    d = x - y
    return float(np.exp(-gamma * (d @ d)))


def rbf_gram(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * _square_distances(a, b))


def _smo(kernel: np.ndarray, y: np.ndarray, c: float, tol: float,
         max_updates: int) -> tuple[np.ndarray, float, bool, int]:
    """Core SMO loop on a precomputed kernel matrix.

    Returns (alpha, bias, converged, updates).
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    f = -y.astype(float)
    pos = y > 0
    neg = ~pos
    updates = 0
    converged = False
    while True:
        up = (pos & (alpha < c)) | (neg & (alpha > 0.0))
        lo = (neg & (alpha < c)) | (pos & (alpha > 0.0))
        if not up.any() or not lo.any():
            converged = True
            break
        i = int(np.argmin(np.where(up, f, np.inf)))
        j = int(np.argmax(np.where(lo, f, -np.inf)))
        if f[j] - f[i] <= tol:
            converged = True
            break
        if updates >= max_updates:
            break
        # move alpha += tau * (y_i e_i - y_j e_j); index-set membership
        # guarantees room, the eta floor guarantees a finite step
        eta = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
        tau = (f[j] - f[i]) / max(eta, 1e-12)
        lim_i = (c - alpha[i]) if pos[i] else alpha[i]
        lim_j = alpha[j] if pos[j] else (c - alpha[j])
        tau = min(tau, lim_i, lim_j)
        di = tau if pos[i] else -tau
        dj = -tau if pos[j] else tau
        # land exactly on a bound when the box is binding so the index
        # sets stay exact and no zero-step pair can be reselected
        if tau == lim_i:
            alpha[i] = c if pos[i] else 0.0
        else:
            alpha[i] += di
        if tau == lim_j:
            alpha[j] = 0.0 if pos[j] else c
        else:
            alpha[j] += dj
        f += (di * y[i]) * kernel[i] + (dj * y[j]) * kernel[j]
        updates += 1
    up = (pos & (alpha < c)) | (neg & (alpha > 0.0))
    lo = (neg & (alpha < c)) | (pos & (alpha > 0.0))
    b_up = float(np.min(f[up])) if up.any() else 0.0
    b_lo = float(np.max(f[lo])) if lo.any() else 0.0
    bias = -0.5 * (b_up + b_lo)
    _repair_equality(alpha, y, c)
    return alpha, bias, converged, updates


def _repair_equality(alpha: np.ndarray, y: np.ndarray, c: float) -> None:
    """Absorb accumulated roundoff in sum(alpha*y) into the freest entry."""
    drift = math.fsum(a * yi for a, yi in zip(alpha, y))
    if drift == 0.0:
        return
    room_lo = np.where(y > 0, alpha, c - alpha)
    k = int(np.argmax(np.minimum(alpha, c - alpha)))
    if room_lo[k] >= abs(drift):
        alpha[k] -= drift * y[k]
        alpha[k] = min(max(alpha[k], 0.0), c)


@dataclass(frozen=True)
class SvmModel:
    """Immutable trained classifier.

    Support vectors are stored in scaled feature space; `scaler` maps
    raw inputs there.  `dual_coef` holds alpha_i * y_i.
    """

    kind: str | None
    hyperparams: Hyperparams
    scaler: Scaler
    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    converged: bool
    updates: int
    train_checksum: str

    def __post_init__(self) -> None:
        if self.dual_coef.shape != (self.support_vectors.shape[0],):
            raise ValueError("one dual coefficient per support vector required")

    @property
    def n_support(self) -> int:
        return self.support_vectors.shape[0]


def train_smo(data: TrainingSet, hp: Hyperparams, tol: float = DEFAULT_TOL,
              max_updates: int = MAX_UPDATES, scaler: Scaler | None = None,
              checksum: str | None = None) -> SvmModel:
    """Train on `data` as-is (features are assumed already scaled).

    `scaler` is stored in the model for ingest-time application; when
    omitted an identity scaler is attached.  Non-convergence at the
    update cap returns the best iterate with `converged=False`.
    """
    x = data.features
    y = data.labels
    if len(data) < 2:
        raise ValueError("need at least two samples")
    if not (np.any(y == 1) and np.any(y == -1)):
        raise ValueError("training data must contain both classes")
    kernel = rbf_gram(x, x, hp.gamma)
    alpha, bias, converged, updates = _smo(kernel, y.astype(float), hp.c,
                                           tol, max_updates)
    sv = alpha > SUPPORT_EPS
    return SvmModel(
        kind=data.kind,
        hyperparams=hp,
        scaler=scaler if scaler is not None else identity_scaler(x.shape[1]),
        support_vectors=x[sv].copy(),
        dual_coef=(alpha[sv] * y[sv]),
        bias=float(bias),
        converged=converged,
        updates=updates,
        train_checksum=checksum if checksum is not None else data.checksum(),
    )


def fit_scaler(features: np.ndarray) -> Scaler:
    """Zero-mean unit-variance parameters; constant columns get scale 1."""
    feats = np.asarray(features, dtype=float)
    if feats.ndim != 2 or feats.shape[0] == 0:
        raise ValueError("need a non-empty 2-D feature array")
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std[std < 1e-12] = 1.0
    return Scaler(mean=mean, scale=std)


def train(data: TrainingSet, hp: Hyperparams, tol: float = DEFAULT_TOL,
          max_updates: int = MAX_UPDATES) -> SvmModel:
    """fit_scaler + train_smo on raw features; checksum covers the raw set."""
    scaler = fit_scaler(data.features)
    scaled = TrainingSet(scaler.transform(data.features), data.labels,
                         kind=data.kind)
    return train_smo(scaled, hp, tol=tol, max_updates=max_updates,
                     scaler=scaler, checksum=data.checksum())


def decision_function(model: SvmModel, x: np.ndarray) -> np.ndarray | float:
    """Sum_i alpha_i y_i K(s_i, x) + b on raw (unscaled) inputs."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    rows = model.scaler.transform(np.atleast_2d(x))
    if model.n_support == 0:
        values = np.full(rows.shape[0], model.bias)
    else:
        gram = rbf_gram(rows, model.support_vectors, model.hyperparams.gamma)
        values = gram @ model.dual_coef + model.bias
    return float(values[0]) if single else values


def predict(model: SvmModel, x: np.ndarray) -> np.ndarray | int:
    """Sign of the decision value; an exact zero maps to +1."""
    values = decision_function(model, x)
    if np.isscalar(values):
        return -1 if values < 0.0 else 1
    return np.where(np.asarray(values) < 0.0, -1, 1)


def stratified_folds(labels: np.ndarray, k: int,
                     rng: np.random.Generator) -> list[np.ndarray]:
    """k index folds, each containing both classes; seeded shuffle."""
    if k < 2:
        raise ValueError("need k >= 2 folds")
    labels = np.asarray(labels)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in (-1, 1):
        idx = np.flatnonzero(labels == cls)
        if idx.size < k:
            raise ValueError(
                f"class {cls} has {idx.size} samples, cannot stratify into {k} folds")
        perm = rng.permutation(idx)
        for pos, sample in enumerate(perm):
            folds[pos % k].append(int(sample))
    return [np.array(sorted(f), dtype=int) for f in folds]


def cross_validate(data: TrainingSet, k: int,
                   grid: list[Hyperparams] | None = None,
                   rng: np.random.Generator | None = None,
                   tol: float = DEFAULT_TOL,
                   max_updates: int = MAX_UPDATES) -> tuple[Hyperparams, float]:
    """Stratified k-fold grid search.

    Returns (best cell, its mean validation accuracy); ties go to the
    smaller C, then the smaller gamma.  Scaling is fit per fold on the
    training split; squared distances are cached per fold and shared
    across the grid.
    """
    if grid is None:
        grid = default_grid()
    if not grid:
        raise ValueError("empty hyperparameter grid")
    if rng is None:
        rng = np.random.default_rng(0)
    folds = stratified_folds(data.labels, k, rng)
    all_idx = np.arange(len(data))
    prepared = []
    for fold in folds:
        va = fold
        tr = np.setdiff1d(all_idx, va, assume_unique=True)
        scaler = fit_scaler(data.features[tr])
        xtr = scaler.transform(data.features[tr])
        xva = scaler.transform(data.features[va])
        prepared.append((
            _square_distances(xtr, xtr),
            _square_distances(xva, xtr),
            data.labels[tr].astype(float),
            data.labels[va],
        ))
    cells = sorted(grid, key=lambda hp: (hp.c, hp.gamma))
    best_hp = None
    best_acc = -1.0
    for hp in cells:
        correct = 0
        total = 0
        for dtr, dva, ytr, yva in prepared:
            ktr = np.exp(-hp.gamma * dtr)
            alpha, bias, _, _ = _smo(ktr, ytr, hp.c, tol, max_updates)
            kva = np.exp(-hp.gamma * dva)
            dec = kva @ (alpha * ytr) + bias
            pred = np.where(dec < 0.0, -1, 1)
            correct += int(np.sum(pred == yva))
            total += yva.size
        acc = correct / total
        if acc > best_acc:
            best_acc = acc
            best_hp = hp
    return best_hp, best_acc


def model_to_json(model: SvmModel) -> str:
    """Versioned, self-describing text form with a fixed field order."""
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "c": model.hyperparams.c,
        "gamma": model.hyperparams.gamma,
        "scaler_mean": [float(v) for v in model.scaler.mean],
        "scaler_scale": [float(v) for v in model.scaler.scale],
        "bias": model.bias,
        "converged": model.converged,
        "updates": model.updates,
        "train_checksum": model.train_checksum,
        "dual_coef": [float(v) for v in model.dual_coef],
        "support_vectors": [[float(v) for v in row]
                            for row in model.support_vectors],
    }
    return json.dumps(payload, indent=1)


def model_from_json(text: str) -> SvmModel:
    payload = json.loads(text)
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a {MODEL_FORMAT} model file")
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {payload.get('version')}")
    dim = len(payload["scaler_mean"])
    sv = np.array(payload["support_vectors"], dtype=float).reshape(-1, dim)
    return SvmModel(
        kind=payload["kind"],
        hyperparams=Hyperparams(payload["c"], payload["gamma"]),
        scaler=Scaler(np.array(payload["scaler_mean"], dtype=float),
                      np.array(payload["scaler_scale"], dtype=float)),
        support_vectors=sv,
        dual_coef=np.array(payload["dual_coef"], dtype=float),
        bias=float(payload["bias"]),
        converged=bool(payload["converged"]),
        updates=int(payload["updates"]),
        train_checksum=payload["train_checksum"],
    )


def save_model(model: SvmModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))
        fh.write("\n")


def load_model(path) -> SvmModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(fh.read())
