"""Labeled-dataset generation and file I/O.

Files are line-delimited JSON: a header object declaring the format
version and generation parameters, then one row object per accepted
sample with its index, label, the 32 reals of the state, and a digest
of the labeling trace.

Reproducibility contract: the randomness for sample `index` comes
exclusively from SeedSequence(master_seed, spawn_key=(index,)), and
rows are accepted against the class quotas in index order.  The output
file is therefore a pure function of the generation parameters,
independent of worker count or scheduling.

States whose partial transpose is positive are separable (two-qubit
case) and hence never steerable.  Once the +1 quota is full such
states cannot contribute a row, so workers may skip their labeling
solves entirely; the skip can only drop work, never change a row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from qsteer.errors import QuotaExceeded
from qsteer.states import (random_two_qubit_state, state_from_reals,
                           state_to_reals, validate_state)
from qsteer.steering import STEERABLE, UNSTEERABLE, label_state

FORMAT_NAME = "qsteer-dataset"
FORMAT_VERSION = 1
# eigensolver roundoff allowance: a state this close to the positive
# partial-transpose set cannot clear the steering verdict threshold
PPT_ATOL = 1e-12


def partial_transpose_b(rho: np.ndarray) -> np.ndarray:
    """Transpose of the second-qubit indices."""
    return rho.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def is_ppt(rho: np.ndarray) -> bool:
    """Positive partial transpose, equivalent to separability here."""
    eigs = np.linalg.eigvalsh(partial_transpose_b(rho))
    return bool(eigs[0] >= -PPT_ATOL)


def sample_rng(master_seed: int, index: int) -> np.random.Generator:
    """The generator owning all randomness of sample `index`."""
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(index,)))


@dataclass(frozen=True)
class DatasetRow:
    index: int
    label: int
    state: np.ndarray
    digest: str

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("sample index must be non-negative")
        if self.label not in (STEERABLE, UNSTEERABLE):
            raise ValueError(f"unknown label {self.label}")
        if self.state.shape != (4, 4):
            raise ValueError("row state must be a 4x4 density matrix")


@dataclass(frozen=True)
class Dataset:
    m: int
    trials: int
    strategy: str
    master_seed: int
    n_pos: int
    n_neg: int
    rows: list[DatasetRow]

    def __post_init__(self) -> None:
        if self.m < 1 or self.trials < 1:
            raise ValueError("m and trials must be positive")
        if self.n_pos < 0 or self.n_neg < 0:
            raise ValueError("class quotas must be non-negative")

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.rows], dtype=int)

    def states(self) -> np.ndarray:
        return np.stack([r.state for r in self.rows])


def _header_line(ds_args: dict) -> str:
    payload = {"format": FORMAT_NAME, "version": FORMAT_VERSION}
    payload.update(ds_args)
    return json.dumps(payload, separators=(",", ":"))


def _row_line(row: DatasetRow) -> str:
    payload = {
        "index": row.index,
        "label": row.label,
        "state": state_to_reals(row.state),
        "digest": row.digest,
    }
    return json.dumps(payload, separators=(",", ":"))


def _label_sample(args: tuple) -> tuple[int, int, list[float], str] | None:
    """Worker body: draw, optionally prefilter, label.

    Returns (index, label, state reals, trace digest), or None when the
    sample was skipped because it is separable and only -1 rows are
    still wanted.
    """
    master_seed, index, m, trials, strategy, skip_ppt = args
    rng = sample_rng(master_seed, index)
    rho = random_two_qubit_state(rng)
    if skip_ppt and is_ppt(rho):
        return None
    label, trace = label_state(rho, m, trials, strategy, rng)
    return index, label, state_to_reals(rho), trace.digest()


def generate_dataset(m: int, n_pos: int, n_neg: int, trials: int,
                     strategy: str, master_seed: int, out_path,
                     workers: int = 1,
                     max_samples: int | None = None) -> Dataset:
    """Draw and label random states until both class quotas are met.

    Rows are accepted in sample-index order: a labeled sample becomes a
    row exactly when its class quota is still open.  `max_samples`
    bounds the number of indices examined (default 500 per requested
    row); exceeding it raises QuotaExceeded with progress statistics.
    """
    if n_pos < 1 or n_neg < 1:
        raise ValueError("class quotas must be at least 1")
    if trials < 1:
        raise ValueError("need at least one trial")
    if workers < 1:
        raise ValueError("need at least one worker")
    if max_samples is None:
        max_samples = 500 * (n_pos + n_neg)

    want = {UNSTEERABLE: n_pos, STEERABLE: n_neg}
    got = {UNSTEERABLE: 0, STEERABLE: 0}
    rows: list[DatasetRow] = []

    def tasks():
        for index in range(max_samples):
            # the skip flag is read at dispatch; it can only have
            # flipped to True after the +1 quota filled, so a skipped
            # sample could never have produced a row
            yield (master_seed, index, m, trials, strategy,
                   got[UNSTEERABLE] >= want[UNSTEERABLE])

    def consume(outcome) -> bool:
        if outcome is None:
            return False
        index, label, reals, digest = outcome
        if got[label] < want[label]:
            got[label] += 1
            rows.append(DatasetRow(index=index, label=label,
                                   state=state_from_reals(reals),
                                   digest=digest))
        return got[UNSTEERABLE] >= n_pos and got[STEERABLE] >= n_neg

    done = False
    if workers == 1:
        for task in tasks():
            if consume(_label_sample(task)):
                done = True
                break
    else:
        with Pool(processes=workers) as pool:
            for outcome in pool.imap(_label_sample, tasks(), chunksize=4):
                if consume(outcome):
                    done = True
                    break
    if not done:
        raise QuotaExceeded(
            f"examined {max_samples} samples, found {got[UNSTEERABLE]}/{n_pos} "
            f"unsteerable (+1) and {got[STEERABLE]}/{n_neg} steerable (-1)")

    dataset = Dataset(m=m, trials=trials, strategy=strategy,
                      master_seed=master_seed, n_pos=n_pos, n_neg=n_neg,
                      rows=rows)
    if out_path is not None:
        save_dataset(dataset, out_path)
    return dataset


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_header_line({
            "m": dataset.m,
            "trials": dataset.trials,
            "strategy": dataset.strategy,
            "master_seed": dataset.master_seed,
            "n_pos": dataset.n_pos,
            "n_neg": dataset.n_neg,
        }))
        fh.write("\n")
        for row in dataset.rows:
            fh.write(_row_line(row))
            fh.write("\n")


def load_dataset(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != FORMAT_NAME:
            raise ValueError(f"not a {FORMAT_NAME} file")
        if header.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported dataset version {header.get('version')}")
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec["label"] not in (STEERABLE, UNSTEERABLE):
                raise ValueError(f"row {rec.get('index')}: bad label {rec['label']}")
            rows.append(DatasetRow(index=int(rec["index"]),
                                   label=int(rec["label"]),
                                   state=state_from_reals(rec["state"]),
                                   digest=rec["digest"]))
    return Dataset(m=int(header["m"]), trials=int(header["trials"]),
                   strategy=str(header["strategy"]),
                   master_seed=int(header["master_seed"]),
                   n_pos=int(header["n_pos"]), n_neg=int(header["n_neg"]),
                   rows=rows)


def audit_row(dataset: Dataset, row: DatasetRow) -> bool:
    """Re-derive one row's label and trace digest from its seeds."""
    rng = sample_rng(dataset.master_seed, row.index)
    rho = random_two_qubit_state(rng)
    # serialization round-trips floats exactly, so demand bit equality
    if not np.array_equal(rho, row.state):
        return False
    label, trace = label_state(rho, dataset.m, dataset.trials,
                               dataset.strategy, rng)
    return label == row.label and trace.digest() == row.digest


def audit_dataset(dataset: Dataset) -> int:
    """Number of rows whose label or digest fails re-derivation."""
    return sum(0 if audit_row(dataset, row) else 1 for row in dataset.rows)


def split_dataset(dataset: Dataset, test_fraction: float = 0.2
                  ) -> tuple[list[DatasetRow], list[DatasetRow]]:
    """Reserve the last `test_fraction` of each class, in file order."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test fraction must be in (0, 1)")
    test_positions: set[int] = set()
    for cls in (STEERABLE, UNSTEERABLE):
        positions = [i for i, r in enumerate(dataset.rows) if r.label == cls]
        n_test = max(1, int(round(test_fraction * len(positions))))
        test_positions.update(positions[-n_test:])
    train = [r for i, r in enumerate(dataset.rows) if i not in test_positions]
    test = [r for i, r in enumerate(dataset.rows) if i in test_positions]
    return train, test
