import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsteer.sdp import (ConeProgram, STATUS_OPTIMAL, _det4, _max_step4,
                        _min_eig4, smat, solve_cone_program, svec)

floats = st.floats(min_value=-3.0, max_value=3.0,
                   allow_nan=False, allow_infinity=False)
hermitian_vecs = st.tuples(floats, floats, floats, floats).map(np.array)


def _hermitian(v4):
    return smat(np.asarray(v4, dtype=float))


@given(hermitian_vecs, hermitian_vecs)
@settings(max_examples=50, deadline=None)
def test_svec_inner_product_identity(u, v):
    m, n = _hermitian(u), _hermitian(v)
    assert np.isclose(float(u @ v), np.trace(m @ n).real, atol=1e-12)


@given(hermitian_vecs)
@settings(max_examples=50, deadline=None)
def test_svec_smat_round_trip(v):
    assert np.allclose(svec(_hermitian(v)), v, atol=1e-12)


@given(hermitian_vecs)
@settings(max_examples=50, deadline=None)
def test_det_and_min_eig_closed_forms(v):
    m = _hermitian(v)
    v = np.asarray(v, dtype=float)
    assert np.isclose(float(_det4(v[None])[0]), np.linalg.det(m).real, atol=1e-10)
    assert np.isclose(_min_eig4(v[None]), np.linalg.eigvalsh(m)[0], atol=1e-10)


@given(hermitian_vecs, hermitian_vecs)
@settings(max_examples=50, deadline=None)
def test_max_step_keeps_cone_membership(s, d):
    s = np.asarray(s, dtype=float)
    # make s strictly positive definite
    s = s + np.array([1.0, 1.0, 0.0, 0.0]) * (abs(s[0]) + abs(s[1]) + abs(s[2]) + abs(s[3]) + 1.0)
    d = np.asarray(d, dtype=float)
    step = _max_step4(s[None], _det4(s[None]), d[None])
    taken = min(step, 10.0)  # unbounded direction caps at "infinity"
    eigs = np.linalg.eigvalsh(_hermitian(s + taken * d))
    assert eigs[0] >= -1e-8


def _min_eig_program(mats, per_block_trace):
    """min sum_k Tr(D_k X_k) over PSD X_k with trace constraints."""
    k = len(mats)
    c = np.concatenate([svec(m) for m in mats])
    cone_map = np.eye(4 * k)
    trace_row = np.array([1.0, 1.0, 0.0, 0.0])
    if per_block_trace:
        eq_map = np.zeros((k, 4 * k))
        for i in range(k):
            eq_map[i, 4 * i:4 * i + 4] = trace_row
        eq_rhs = np.ones(k)
    else:
        eq_map = np.tile(trace_row, k)[None, :]
        eq_rhs = np.ones(1)
    return ConeProgram(c=c, cone_map=cone_map, cone_offset=np.zeros(4 * k),
                       eq_map=eq_map, eq_rhs=eq_rhs)


@given(st.lists(hermitian_vecs, min_size=1, max_size=3))
@settings(max_examples=30, deadline=None)
def test_solver_reaches_min_eigenvalue_sum(vs):
    mats = [_hermitian(v) for v in vs]
    prob = _min_eig_program(mats, per_block_trace=True)
    res = solve_cone_program(prob)
    assert res.status == STATUS_OPTIMAL
    expected = sum(np.linalg.eigvalsh(m)[0] for m in mats)
    assert np.isclose(res.objective, expected, atol=1e-6)
    assert np.isclose(res.dual_objective, expected, atol=1e-6)


@given(st.lists(hermitian_vecs, min_size=2, max_size=3))
@settings(max_examples=30, deadline=None)
def test_solver_shared_trace_picks_best_block(vs):
    # a single unit of trace goes to the block with the smallest eigenvalue
    mats = [_hermitian(v) for v in vs]
    prob = _min_eig_program(mats, per_block_trace=False)
    res = solve_cone_program(prob)
    assert res.status == STATUS_OPTIMAL
    expected = min(np.linalg.eigvalsh(m)[0] for m in mats)
    assert np.isclose(res.objective, expected, atol=1e-6)


def test_solver_result_reports_gap_and_residuals():
    prob = _min_eig_program([np.diag([1.0, 3.0]).astype(complex)], True)
    res = solve_cone_program(prob)
    assert res.optimal
    assert res.gap < 1e-6
    assert res.primal_residual < 1e-6 and res.dual_residual < 1e-6
    assert np.isclose(res.objective, 1.0, atol=1e-7)


def test_solver_flags_iteration_starvation():
    prob = _min_eig_program([np.array([[1.0, 1j], [-1j, 2.0]])], True)
    res = solve_cone_program(prob, max_iterations=1)
    assert res.status != STATUS_OPTIMAL
    assert not res.optimal


def test_cone_program_shape_validation():
    with pytest.raises(ValueError):
        ConeProgram(c=np.zeros(3), cone_map=np.eye(4), cone_offset=np.zeros(4),
                    eq_map=np.zeros((1, 4)), eq_rhs=np.zeros(1))
