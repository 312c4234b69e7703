"""Dense primal-dual interior-point solver for small semidefinite programs.

Problems handled here have the form

    minimize    c . u
    subject to  mat(G u + h)  PSD  blockwise,
                A u = b,

where every inequality block is a 2x2 complex Hermitian matrix.  That
block structure is baked in: Hermitian 2x2 matrices live in a real
4-dimensional space via the scaled vectorization `svec`, and inverses,
determinants and extreme eigenvalues all come in closed form, so the
per-iteration work is a handful of small dense matmuls.

The search direction is the HKM direction (the Newton step for the
complementarity equation Z S = mu I linearized with the Z S^-1 scaling
and then symmetrized), combined with Mehrotra's predictor-corrector:
an affine probe sets the centering weight sigma = (gap_aff/gap)^3 and
contributes the second-order correction term.  Step lengths stay a
fixed fraction (0.99) inside the cone using the exact smallest
generalized eigenvalue of each 2x2 block.

Convergence targets a duality gap of 1e-9 (relative to the objective
scale) and equal feasibility tolerances.  If the iteration stalls or a
factorization breaks down, the current point is still reported as
"optimal" when it sits within 100x of the targets; otherwise the
status is "max-iterations" or "numerical-failure".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

GAP_TOL = 1e-9
FEAS_TOL = 1e-9
MAX_ITERATIONS = 200
ACCEPT_FACTOR = 100.0
STEP_FRACTION = 0.99

SQRT2 = np.sqrt(2.0)

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITERATIONS = "max-iterations"
STATUS_NUMERICAL_FAILURE = "numerical-failure"


def svec(mats: np.ndarray) -> np.ndarray:
    """Isometric vectorization of Hermitian 2x2 blocks.

    [M00, M11, sqrt(2) Re M01, sqrt(2) Im M01]; the scaling makes
    svec(M) . svec(N) = Re Tr(M N) for Hermitian M, N.
    Accepts any leading batch shape.
    """
    mats = np.asarray(mats)
    out = np.empty(mats.shape[:-2] + (4,), dtype=float)
    out[..., 0] = mats[..., 0, 0].real
    out[..., 1] = mats[..., 1, 1].real
    out[..., 2] = SQRT2 * mats[..., 0, 1].real
    out[..., 3] = SQRT2 * mats[..., 0, 1].imag
    return out


def smat(vecs: np.ndarray) -> np.ndarray:
    """Inverse of svec."""
    vecs = np.asarray(vecs, dtype=float)
    out = np.empty(vecs.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = vecs[..., 0]
    out[..., 1, 1] = vecs[..., 1]
    off = (vecs[..., 2] + 1.0j * vecs[..., 3]) / SQRT2
    out[..., 0, 1] = off
    out[..., 1, 0] = off.conj()
    return out


_BASIS = smat(np.eye(4))  # (4, 2, 2) Hermitian basis dual to svec


def _det4(v: np.ndarray) -> np.ndarray:
    # determinant of smat(v) for (..., 4) svec coordinates
    return v[..., 0] * v[..., 1] - 0.5 * (v[..., 2] ** 2 + v[..., 3] ** 2)


def _min_eig4(v: np.ndarray) -> float:
    # smallest eigenvalue over a batch of blocks in svec coordinates
    tr = v[..., 0] + v[..., 1]
    disc = np.sqrt(np.maximum(tr * tr - 4.0 * _det4(v), 0.0))
    return float((0.5 * (tr - disc)).min())


def _max_step4(s4: np.ndarray, det_s: np.ndarray, d4: np.ndarray) -> float:
    """Largest t >= 0 keeping smat(s4) + t smat(d4) PSD, for PD smat(s4).

    Works through the generalized eigenvalues of S^-1 D, whose trace and
    determinant follow from svec coordinates alone:
    tr(S^-1 D) = svec(adj S) . svec(D) / det S,   det(S^-1 D) = det D / det S.
    """
    tr = (s4[:, 1] * d4[:, 0] + s4[:, 0] * d4[:, 1]
          - s4[:, 2] * d4[:, 2] - s4[:, 3] * d4[:, 3]) / det_s
    det_ratio = _det4(d4) / det_s
    disc = np.sqrt(np.maximum(tr * tr - 4.0 * det_ratio, 0.0))
    worst = float((0.5 * (tr - disc)).min())
    if worst >= 0.0:
        return np.inf
    return -1.0 / worst


def _hkm_matrices(z_mat: np.ndarray, s_inv: np.ndarray) -> np.ndarray:
    """svec-coordinate matrices of X -> (Z X S^-1 + S^-1 X Z)/2, one per block.

    The operator is self-adjoint and positive definite for PD Z and S,
    so each 4x4 output is symmetric positive definite (up to roundoff).
    """
    t = (z_mat[:, None] @ _BASIS[None]) @ s_inv[:, None]
    t = t + np.conj(np.swapaxes(t, -1, -2))
    return 0.5 * np.swapaxes(svec(t), -1, -2)


@dataclass
class ConeProgram:
    """min c.u  s.t.  mat(cone_map u + cone_offset) PSD blockwise, eq_map u = eq_rhs.

    cone_map has shape (4K, n) for K blocks; rows come in groups of four,
    one group per block, in svec coordinates.
    """

    c: np.ndarray
    cone_map: np.ndarray
    cone_offset: np.ndarray
    eq_map: np.ndarray
    eq_rhs: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.cone_map = np.asarray(self.cone_map, dtype=float)
        self.cone_offset = np.asarray(self.cone_offset, dtype=float)
        self.eq_map = np.asarray(self.eq_map, dtype=float)
        self.eq_rhs = np.asarray(self.eq_rhs, dtype=float)
        n = self.c.shape[0]
        rows = self.cone_map.shape[0]
        if rows % 4 != 0 or self.cone_map.shape != (rows, n):
            raise ValueError(f"cone_map shape {self.cone_map.shape} incompatible with n={n}")
        if self.cone_offset.shape != (rows,):
            raise ValueError("cone_offset length does not match cone_map")
        if self.eq_map.ndim != 2 or self.eq_map.shape[1] != n:
            raise ValueError(f"eq_map shape {self.eq_map.shape} incompatible with n={n}")
        if self.eq_rhs.shape != (self.eq_map.shape[0],):
            raise ValueError("eq_rhs length does not match eq_map")

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_blocks(self) -> int:
        return self.cone_map.shape[0] // 4


@dataclass
class IpmResult:
    status: str
    objective: float
    dual_objective: float
    gap: float
    iterations: int
    u: np.ndarray
    y: np.ndarray
    z: np.ndarray
    primal_residual: float
    dual_residual: float
    meta: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == STATUS_OPTIMAL


def solve_cone_program(prob: ConeProgram,
                       u0: np.ndarray | None = None,
                       z0: np.ndarray | None = None,
                       y0: np.ndarray | None = None,
                       max_iterations: int = MAX_ITERATIONS,
                       gap_tol: float = GAP_TOL,
                       feas_tol: float = FEAS_TOL,
                       accept_factor: float = ACCEPT_FACTOR) -> IpmResult:
    """Run the predictor-corrector interior-point iteration on `prob`.

    u0, when given and strictly feasible in the cone, seeds the primal
    iterate; otherwise the slack starts at the identity in every block.
    z0/y0 seed the dual the same way (default: identity blocks, zero
    multipliers).  Builders that can supply feasible starts on both
    sides should: with all residuals at roundoff level only the gap
    remains to be driven down, which is the robust regime.
    """
    c = prob.c
    big_g = prob.cone_map
    h = prob.cone_offset
    a_eq = prob.eq_map
    b_eq = prob.eq_rhs
    n = prob.n_vars
    k = prob.n_blocks
    p = b_eq.shape[0]
    total_dim = 2.0 * k
    gb = np.ascontiguousarray(big_g.reshape(k, 4, n))
    g_t = np.ascontiguousarray(big_g.T)
    a_t = np.ascontiguousarray(a_eq.T)

    u = np.zeros(n) if u0 is None else np.asarray(u0, dtype=float).copy()
    s = big_g @ u + h
    if _min_eig4(s.reshape(k, 4)) <= 1e-8:
        # no strictly feasible seed available: fall back to identity slacks
        s = np.tile([1.0, 1.0, 0.0, 0.0], k)
    if z0 is not None and _min_eig4(np.asarray(z0).reshape(k, 4)) > 1e-8:
        z = np.asarray(z0, dtype=float).copy()
        y = np.zeros(p) if y0 is None else np.asarray(y0, dtype=float).copy()
    else:
        z = np.tile([1.0, 1.0, 0.0, 0.0], k)
        y = np.zeros(p)

    c_scale = 1.0 + (float(np.abs(c).max()) if n else 0.0)
    b_scale = 1.0 + (float(np.abs(b_eq).max()) if p else 0.0)

    # best iterate seen so far, by worst-of-three merit; the endgame Newton
    # systems have condition ~1/gap^2 and can poison an already converged
    # point, so the fallback at finish is the safe answer
    best = None

    def merit(gap, scale, pres, dres):
        return max(abs(gap) / scale, pres, dres)

    def finish(status, it, gap, pobj, dobj, pres, dres):
        point = (gap, pobj, dobj, pres, dres, u, y, z, it)
        if best is not None and status != STATUS_OPTIMAL:
            scale_now = 1.0 + abs(pobj) + abs(dobj)
            if not np.isfinite(merit(gap, scale_now, pres, dres)) or \
                    merit(gap, scale_now, pres, dres) > best[0]:
                point = best[1]
        gap, pobj, dobj, pres, dres, u_f, y_f, z_f, it_f = point
        if status != STATUS_OPTIMAL:
            scale_f = 1.0 + abs(pobj) + abs(dobj)
            if (abs(gap) <= accept_factor * gap_tol * scale_f
                    and pres <= accept_factor * feas_tol
                    and dres <= accept_factor * feas_tol):
                status = STATUS_OPTIMAL
        return IpmResult(status=status, objective=pobj, dual_objective=dobj,
                         gap=gap, iterations=it, u=np.array(u_f), y=np.array(y_f),
                         z=np.array(z_f), primal_residual=pres, dual_residual=dres)

    for it in range(max_iterations + 1):
        r_d = c - g_t @ z - a_t @ y
        r_p = b_eq - a_eq @ u
        r_g = big_g @ u + h - s
        gap = float(z @ s)
        pobj = float(c @ u)
        dobj = float(b_eq @ y - h @ z)
        scale = 1.0 + abs(pobj) + abs(dobj)
        pres = max(float(np.abs(r_p).max()) / b_scale if p else 0.0,
                   float(np.abs(r_g).max()))
        dres = float(np.abs(r_d).max()) / c_scale
        if not (np.isfinite(gap) and np.isfinite(pres) and np.isfinite(dres)):
            return finish(STATUS_NUMERICAL_FAILURE, it, gap, pobj, dobj, pres, dres)
        this_merit = merit(gap, scale, pres, dres)
        if best is None or this_merit < best[0]:
            best = (this_merit, (gap, pobj, dobj, pres, dres,
                                 u.copy(), y.copy(), z.copy(), it))
        if abs(gap) <= gap_tol * scale and pres <= feas_tol and dres <= feas_tol:
            return finish(STATUS_OPTIMAL, it, gap, pobj, dobj, pres, dres)
        if it == max_iterations:
            return finish(STATUS_MAX_ITERATIONS, it, gap, pobj, dobj, pres, dres)

        s4 = s.reshape(k, 4)
        z4 = z.reshape(k, 4)
        det_s = _det4(s4)
        if det_s.min() <= 0.0 or _det4(z4).min() <= 0.0:
            return finish(STATUS_NUMERICAL_FAILURE, it, gap, pobj, dobj, pres, dres)
        # svec(S^-1) by the adjugate rule, then its matrix form once
        w4 = np.empty_like(s4)
        w4[:, 0] = s4[:, 1]
        w4[:, 1] = s4[:, 0]
        w4[:, 2] = -s4[:, 2]
        w4[:, 3] = -s4[:, 3]
        w4 /= det_s[:, None]
        s_inv = smat(w4)
        z_mat = smat(z4)
        mu = gap / total_dim

        try:
            kop = _hkm_matrices(z_mat, s_inv)
            m_schur = g_t @ (kop @ gb).reshape(4 * k, n)
            m_cho = cho_factor(m_schur, check_finite=False)
            mi_at = cho_solve(m_cho, a_t, check_finite=False)
            saddle = a_eq @ mi_at
            if p == 1:
                saddle_diag = saddle[0, 0]
                if saddle_diag <= 0.0 or not np.isfinite(saddle_diag):
                    raise np.linalg.LinAlgError("saddle system not positive")
                s_cho = None
            else:
                s_cho = cho_factor(saddle, check_finite=False)
            kop_rg = (kop @ r_g.reshape(k, 4, 1)).reshape(4 * k)

            def newton(v):
                g1 = g_t @ (v - kop_rg) - r_d
                mi_g1 = cho_solve(m_cho, g1, check_finite=False)
                rhs = r_p - a_eq @ mi_g1
                dy = rhs / saddle_diag if p == 1 else cho_solve(s_cho, rhs, check_finite=False)
                du = mi_g1 + mi_at @ dy
                ds = big_g @ du + r_g
                dz = v - (kop @ ds.reshape(k, 4, 1)).reshape(4 * k)
                return du, dy, ds, dz

            # predictor: pure affine step (sigma = 0, no correction)
            du_a, dy_a, ds_a, dz_a = newton(-z)
            ap_a = min(1.0, _max_step4(s4, det_s, ds_a.reshape(k, 4)))
            ad_a = min(1.0, _max_step4(z4, _det4(z4), dz_a.reshape(k, 4)))
            gap_aff = float((s + ap_a * ds_a) @ (z + ad_a * dz_a))
            sigma = min(max(gap_aff / gap, 0.0) ** 3, 1.0) if gap > 0 else 0.0

            # corrector: centering plus the second-order Mehrotra term
            corr = (smat(dz_a.reshape(k, 4)) @ smat(ds_a.reshape(k, 4))) @ s_inv
            corr = corr + np.conj(np.swapaxes(corr, -1, -2))
            v_cc = (sigma * mu) * w4.reshape(4 * k) - z - 0.5 * svec(corr).reshape(4 * k)
            du, dy, ds, dz = newton(v_cc)
        except (np.linalg.LinAlgError, ValueError):
            return finish(STATUS_NUMERICAL_FAILURE, it, gap, pobj, dobj, pres, dres)

        ap = min(1.0, STEP_FRACTION * _max_step4(s4, det_s, ds.reshape(k, 4)))
        ad = min(1.0, STEP_FRACTION * _max_step4(z4, _det4(z4), dz.reshape(k, 4)))
        if not np.isfinite(ap) or not np.isfinite(ad) or max(ap, ad) < 1e-12:
            return finish(STATUS_NUMERICAL_FAILURE, it, gap, pobj, dobj, pres, dres)

        u += ap * du
        s += ap * ds
        y += ad * dy
        z += ad * dz

    # not reachable: the loop always returns by the it == max_iterations branch
    raise AssertionError("interior-point loop exited without a result")
