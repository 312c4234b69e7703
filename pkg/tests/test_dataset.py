import dataclasses

import numpy as np
import pytest

from qsteer.dataset import (Dataset, DatasetRow, audit_dataset, audit_row,
                            generate_dataset, is_ppt, load_dataset,
                            partial_transpose_b, sample_rng, save_dataset,
                            split_dataset)
from qsteer.errors import QuotaExceeded
from qsteer.states import random_two_qubit_state
from qsteer.steering import STEERABLE, UNSTEERABLE

GEN_ARGS = dict(m=2, n_pos=6, n_neg=2, trials=3, strategy="uniform",
                master_seed=424242)


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    path = tmp_path_factory.mktemp("ds") / "small.jsonl"
    ds = generate_dataset(out_path=path, **GEN_ARGS)
    return ds, path


def test_partial_transpose_involution(rng):
    rho = random_two_qubit_state(rng)
    assert np.allclose(partial_transpose_b(partial_transpose_b(rho)), rho)
    pt = partial_transpose_b(rho)
    assert np.allclose(pt, pt.conj().T)
    assert np.trace(pt) == pytest.approx(1.0)


def test_ppt_flags(bell_state):
    assert not is_ppt(bell_state)
    assert is_ppt(np.eye(4) / 4)
    product = np.kron(np.diag([0.7, 0.3]), np.diag([0.2, 0.8]))
    assert is_ppt(product)


def test_sample_rng_streams_are_stable_and_distinct():
    a = sample_rng(99, 0).random(4)
    assert np.array_equal(a, sample_rng(99, 0).random(4))
    assert not np.array_equal(a, sample_rng(99, 1).random(4))
    assert not np.array_equal(a, sample_rng(100, 0).random(4))


def test_quotas_met_exactly(small):
    ds, _ = small
    labels = ds.labels()
    assert int((labels == UNSTEERABLE).sum()) == GEN_ARGS["n_pos"]
    assert int((labels == STEERABLE).sum()) == GEN_ARGS["n_neg"]
    indices = [row.index for row in ds.rows]
    assert indices == sorted(indices)


def test_repeat_runs_are_byte_identical(small, tmp_path):
    _, path = small
    again = tmp_path / "again.jsonl"
    generate_dataset(out_path=again, **GEN_ARGS)
    assert again.read_bytes() == path.read_bytes()


def test_worker_count_does_not_change_bytes(small, tmp_path):
    _, path = small
    pooled = tmp_path / "pooled.jsonl"
    generate_dataset(out_path=pooled, workers=2, **GEN_ARGS)
    assert pooled.read_bytes() == path.read_bytes()


def test_save_load_round_trip(small, tmp_path):
    ds, path = small
    loaded = load_dataset(path)
    assert (loaded.m, loaded.trials, loaded.strategy, loaded.master_seed,
            loaded.n_pos, loaded.n_neg) == (ds.m, ds.trials, ds.strategy,
                                            ds.master_seed, ds.n_pos, ds.n_neg)
    for got, want in zip(loaded.rows, ds.rows):
        assert (got.index, got.label, got.digest) == (want.index, want.label,
                                                      want.digest)
        assert np.array_equal(got.state, want.state)
    copy = tmp_path / "copy.jsonl"
    save_dataset(loaded, copy)
    assert copy.read_bytes() == path.read_bytes()
    states = loaded.states()
    assert states.shape == (len(ds.rows), 4, 4)
    assert np.allclose(np.trace(states, axis1=1, axis2=2), 1.0)


def test_audit_accepts_generated_rows(small):
    ds, _ = small
    assert audit_dataset(ds) == 0


def test_audit_rejects_tampering(small):
    ds, _ = small
    row = ds.rows[0]
    flipped = dataclasses.replace(row, label=-row.label)
    assert not audit_row(ds, flipped)
    bent = row.state.copy()
    bent[0, 0] += 1e-6
    bent[1, 1] -= 1e-6
    assert not audit_row(ds, dataclasses.replace(row, state=bent))
    assert not audit_row(ds, dataclasses.replace(row, digest="0" * 64))


def test_steerable_rows_are_npt(small):
    # positive partial transpose certifies an unentangled (hence
    # unsteerable) two-qubit state, so no steerable row may be PPT
    ds, _ = small
    for row in ds.rows:
        if row.label == STEERABLE:
            assert not is_ppt(row.state)


def test_quota_exceeded_reports_progress(tmp_path):
    with pytest.raises(QuotaExceeded) as info:
        generate_dataset(m=2, n_pos=2, n_neg=50, trials=2, strategy="uniform",
                         master_seed=1, out_path=tmp_path / "never.jsonl",
                         max_samples=40)
    message = str(info.value)
    assert "40" in message


def test_split_reserves_last_fraction_per_class(small):
    ds, _ = small
    train, test = split_dataset(ds, 0.25)
    assert len(train) + len(test) == len(ds.rows)
    test_idx = {r.index for r in test}
    for cls, quota in ((UNSTEERABLE, GEN_ARGS["n_pos"]),
                       (STEERABLE, GEN_ARGS["n_neg"])):
        ordered = [r.index for r in ds.rows if r.label == cls]
        n_test = max(1, round(0.25 * quota))
        assert set(ordered[-n_test:]) <= test_idx
        assert not test_idx & set(ordered[:-n_test])
    with pytest.raises(ValueError):
        split_dataset(ds, 1.5)


def test_header_mismatch_detected(small, tmp_path):
    _, path = small
    lines = path.read_text().splitlines()
    bad = tmp_path / "bad.jsonl"
    bad.write_text(lines[0].replace("qsteer-dataset", "other") + "\n"
                   + "\n".join(lines[1:]) + "\n")
    with pytest.raises(ValueError):
        load_dataset(bad)


def test_row_and_dataset_validation():
    rng = np.random.default_rng(0)
    rho = random_two_qubit_state(rng)
    with pytest.raises(ValueError):
        DatasetRow(index=-1, label=1, state=rho, digest="ab")
    with pytest.raises(ValueError):
        DatasetRow(index=0, label=2, state=rho, digest="ab")
    with pytest.raises(ValueError):
        Dataset(m=0, trials=1, strategy="uniform", master_seed=0,
                n_pos=1, n_neg=1, rows=[])
